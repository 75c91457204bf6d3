//! Frame, event and dataset types plus JSON Lines ingestion.
//!
//! A dataset file is UTF-8 JSON Lines. Each line is one of:
//!
//! * a frame record (`frame_id`, `event_id`, `timestamp`, `features`,
//!   `informativeness`, `saliency`, `object_scores`, `face_scores`);
//! * a ground-truth record tagged with `"gt": "ground_truth"` carrying
//!   `event_id`, `informative`, `groups` and `summary`;
//! * an optional `{"meta": {...}}` record of string key/value pairs.
//!
//! Blank lines are ignored. Frames are grouped by event and ordered by
//! `(timestamp, frame_id)`; events are ordered by their first frame.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag value identifying a ground-truth line.
pub const GT_TAG: &str = "ground_truth";

/// One photo of the stream with its precomputed detector outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: String,
    pub event_id: String,
    /// Seconds since the epoch.
    pub timestamp: i64,
    pub features: Vec<f64>,
    pub informativeness: f64,
    /// Sum over the frame's saliency map.
    pub saliency: f64,
    #[serde(default)]
    pub object_scores: Vec<f64>,
    #[serde(default)]
    pub face_scores: Vec<f64>,
}

impl FrameRecord {
    /// Total order used everywhere frames are sequenced in time.
    pub fn temporal_key(&self) -> (i64, &str) {
        (self.timestamp, self.frame_id.as_str())
    }
}

/// Expert annotations for one event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    /// Informativeness label for every frame of the event.
    pub informative_labels: BTreeMap<String, bool>,
    /// Similarity group of each informative frame.
    pub group_ids: BTreeMap<String, i64>,
    /// Reference summary, in annotation order.
    pub summary_ids: Vec<String>,
}

impl GroundTruth {
    pub fn distinct_groups(&self) -> BTreeSet<i64> {
        self.group_ids.values().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub event_id: String,
    pub frames: Vec<FrameRecord>,
    pub ground_truth: Option<GroundTruth>,
}

impl Event {
    /// Builds an event, sorting `frames` into temporal order.
    pub fn new(
        event_id: impl Into<String>,
        mut frames: Vec<FrameRecord>,
        ground_truth: Option<GroundTruth>,
    ) -> Self {
        sort_frames(&mut frames);
        Event {
            event_id: event_id.into(),
            frames,
            ground_truth,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, frame_id: &str) -> Option<&FrameRecord> {
        self.frames.iter().find(|f| f.frame_id == frame_id)
    }

    pub fn ground_truth(&self) -> Result<&GroundTruth> {
        self.ground_truth
            .as_ref()
            .ok_or_else(|| Error::MissingGroundTruth(self.event_id.clone()))
    }

    /// Frames of the reference summary, in annotation order.
    pub fn gt_summary_frames(&self) -> Result<Vec<&FrameRecord>> {
        let gt = self.ground_truth()?;
        gt.summary_ids
            .iter()
            .map(|id| {
                self.frame(id).ok_or_else(|| Error::UnknownFrame {
                    event_id: self.event_id.clone(),
                    frame_id: id.clone(),
                })
            })
            .collect()
    }
}

pub(crate) fn sort_frames(frames: &mut [FrameRecord]) {
    frames.sort_by(|a, b| a.temporal_key().cmp(&b.temporal_key()));
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub events: Vec<Event>,
    pub feature_dim: usize,
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    pub fn event(&self, event_id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.event_id == event_id)
    }

    pub fn frame_count(&self) -> usize {
        self.events.iter().map(Event::len).sum()
    }

    /// Replaces every event's ground truth with the records found in a
    /// ground-truth-only JSONL stream.
    pub fn attach_ground_truth<R: BufRead>(&mut self, reader: R) -> Result<()> {
        let mut seen = HashSet::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: GtRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: line_no + 1,
                message: e.to_string(),
            })?;
            check_gt_tag(&rec, line_no + 1)?;
            if !seen.insert(rec.event_id.clone()) {
                return Err(Error::DuplicateGroundTruth(rec.event_id));
            }
            let event = self
                .events
                .iter_mut()
                .find(|e| e.event_id == rec.event_id)
                .ok_or_else(|| Error::UnknownEvent(rec.event_id.clone()))?;
            event.ground_truth = Some(rec.into_ground_truth(&event.frames)?);
        }
        Ok(())
    }
}

/// Per-selected-frame scores recorded when a summary is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionScore {
    /// Fused rank-normalized relevance.
    pub r: f64,
    /// Novelty against the frames selected before it.
    pub n: f64,
}

/// An ordered selection of frames describing one event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub event_id: String,
    /// Frame ids in selection order.
    pub selected: Vec<String>,
    pub scores: Vec<SelectionScore>,
    /// The same ids in temporal order.
    pub presentation_order: Vec<String>,
}

impl Summary {
    /// Builds a summary from frames in selection order.
    pub fn from_frames(event_id: &str, frames: &[&FrameRecord], scores: Vec<SelectionScore>) -> Self {
        let mut by_time: Vec<&FrameRecord> = frames.to_vec();
        by_time.sort_by(|a, b| a.temporal_key().cmp(&b.temporal_key()));
        Summary {
            event_id: event_id.to_string(),
            selected: frames.iter().map(|f| f.frame_id.clone()).collect(),
            scores,
            presentation_order: by_time.into_iter().map(|f| f.frame_id.clone()).collect(),
        }
    }

    pub fn empty(event_id: &str) -> Self {
        Summary {
            event_id: event_id.to_string(),
            selected: Vec::new(),
            scores: Vec::new(),
            presentation_order: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// A broken invariant found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub type_name: &'static str,
    pub field: &'static str,
    pub id: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} [{}]: {}", self.type_name, self.field, self.id, self.message)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtRecord {
    gt: String,
    event_id: String,
    #[serde(default)]
    informative: Vec<String>,
    #[serde(default)]
    groups: BTreeMap<String, i64>,
    #[serde(default)]
    summary: Vec<String>,
}

impl GtRecord {
    fn into_ground_truth(self, frames: &[FrameRecord]) -> Result<GroundTruth> {
        let known: HashSet<&str> = frames.iter().map(|f| f.frame_id.as_str()).collect();
        let referenced = self
            .informative
            .iter()
            .chain(self.groups.keys())
            .chain(self.summary.iter());
        for id in referenced {
            if !known.contains(id.as_str()) {
                return Err(Error::UnknownFrame {
                    event_id: self.event_id,
                    frame_id: id.clone(),
                });
            }
        }
        let positives: HashSet<&str> = self.informative.iter().map(String::as_str).collect();
        let informative_labels = frames
            .iter()
            .map(|f| (f.frame_id.clone(), positives.contains(f.frame_id.as_str())))
            .collect();
        Ok(GroundTruth {
            informative_labels,
            group_ids: self.groups,
            summary_ids: self.summary,
        })
    }

    fn from_ground_truth(event: &Event, gt: &GroundTruth) -> Self {
        GtRecord {
            gt: GT_TAG.to_string(),
            event_id: event.event_id.clone(),
            informative: event
                .frames
                .iter()
                .filter(|f| gt.informative_labels.get(&f.frame_id).copied().unwrap_or(false))
                .map(|f| f.frame_id.clone())
                .collect(),
            groups: gt.group_ids.clone(),
            summary: gt.summary_ids.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRecord {
    meta: BTreeMap<String, String>,
}

fn check_gt_tag(rec: &GtRecord, line: usize) -> Result<()> {
    if rec.gt != GT_TAG {
        return Err(Error::Malformed {
            line,
            message: format!("ground-truth tag must be \"{GT_TAG}\", found \"{}\"", rec.gt),
        });
    }
    Ok(())
}

/// Reads a dataset and rejects it if any invariant is violated.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Dataset> {
    let dataset = read_dataset(reader)?;
    let violations = validate_dataset(&dataset);
    if violations.is_empty() {
        Ok(dataset)
    } else {
        Err(Error::Invalid(violations))
    }
}

/// Reads a dataset, enforcing only structural integrity (well-formed
/// lines, consistent dimension, unique ids, resolvable ground truth).
/// Value-range invariants are left to [`validate_dataset`].
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut by_event: BTreeMap<String, Vec<FrameRecord>> = BTreeMap::new();
    let mut gt_records: BTreeMap<String, GtRecord> = BTreeMap::new();
    let mut metadata = BTreeMap::new();
    let mut seen_ids = HashSet::new();
    let mut feature_dim: Option<usize> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(malformed)?;
        let Some(obj) = value.as_object() else {
            return Err(Error::Malformed {
                line: line_no,
                message: "expected a JSON object".into(),
            });
        };
        if obj.contains_key("gt") {
            let rec: GtRecord = serde_json::from_value(value).map_err(malformed)?;
            check_gt_tag(&rec, line_no)?;
            if gt_records.contains_key(&rec.event_id) {
                return Err(Error::DuplicateGroundTruth(rec.event_id));
            }
            gt_records.insert(rec.event_id.clone(), rec);
        } else if obj.contains_key("meta") {
            let rec: MetaRecord = serde_json::from_value(value).map_err(malformed)?;
            metadata.extend(rec.meta);
        } else {
            let frame: FrameRecord = serde_json::from_value(value).map_err(malformed)?;
            match feature_dim {
                None => feature_dim = Some(frame.features.len()),
                Some(d) if d != frame.features.len() => {
                    return Err(Error::DimensionMismatch {
                        frame_id: frame.frame_id,
                        expected: d,
                        found: frame.features.len(),
                    })
                }
                Some(_) => {}
            }
            if !seen_ids.insert(frame.frame_id.clone()) {
                return Err(Error::DuplicateFrame(frame.frame_id));
            }
            by_event.entry(frame.event_id.clone()).or_default().push(frame);
        }
    }

    let mut events = Vec::with_capacity(by_event.len());
    for (event_id, mut frames) in by_event {
        sort_frames(&mut frames);
        let ground_truth = match gt_records.remove(&event_id) {
            Some(rec) => Some(rec.into_ground_truth(&frames)?),
            None => None,
        };
        events.push(Event {
            event_id,
            frames,
            ground_truth,
        });
    }
    if let Some(orphan) = gt_records.into_keys().next() {
        return Err(Error::UnknownEvent(orphan));
    }
    events.sort_by(|a, b| {
        (a.frames[0].timestamp, &a.event_id).cmp(&(b.frames[0].timestamp, &b.event_id))
    });

    Ok(Dataset {
        events,
        feature_dim: feature_dim.unwrap_or(0),
        metadata,
    })
}

/// Writes the canonical JSONL form: metadata first, then each event's
/// frames followed by its ground truth.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    if !dataset.metadata.is_empty() {
        let meta = MetaRecord {
            meta: dataset.metadata.clone(),
        };
        serde_json::to_writer(&mut out, &meta)?;
        out.write_all(b"\n")?;
    }
    for event in &dataset.events {
        for frame in &event.frames {
            serde_json::to_writer(&mut out, frame)?;
            out.write_all(b"\n")?;
        }
        if let Some(gt) = &event.ground_truth {
            serde_json::to_writer(&mut out, &GtRecord::from_ground_truth(event, gt))?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn dataset_to_string(dataset: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn violation(type_name: &'static str, field: &'static str, id: &str, message: String) -> Violation {
    Violation {
        type_name,
        field,
        id: id.to_string(),
        message,
    }
}

/// Checks every data-type invariant. An empty result means the dataset
/// is valid.
pub fn validate_dataset(dataset: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();

    for event in &dataset.events {
        let eid = event.event_id.as_str();
        if event.frames.is_empty() {
            out.push(violation("Event", "frames", eid, "event has no frames".into()));
        }
        if event
            .frames
            .windows(2)
            .any(|w| w[0].temporal_key() > w[1].temporal_key())
        {
            out.push(violation(
                "Event",
                "frames",
                eid,
                "frames are not ordered by (timestamp, frame_id)".into(),
            ));
        }

        for f in &event.frames {
            let fid = f.frame_id.as_str();
            if f.event_id != event.event_id {
                out.push(violation(
                    "Event",
                    "event_id",
                    fid,
                    format!("frame belongs to `{}` but is stored in `{eid}`", f.event_id),
                ));
            }
            if !seen.insert(fid) {
                out.push(violation("FrameRecord", "frame_id", fid, "duplicate frame id".into()));
            }
            if !(0.0..=1.0).contains(&f.informativeness) {
                out.push(violation(
                    "FrameRecord",
                    "informativeness",
                    fid,
                    format!("{} is outside [0, 1]", f.informativeness),
                ));
            }
            if !(f.saliency.is_finite() && f.saliency >= 0.0) {
                out.push(violation(
                    "FrameRecord",
                    "saliency",
                    fid,
                    format!("{} is not a non-negative finite value", f.saliency),
                ));
            }
            if f.features.len() != dataset.feature_dim {
                out.push(violation(
                    "FrameRecord",
                    "features",
                    fid,
                    format!("length {} differs from dataset dimension {}", f.features.len(), dataset.feature_dim),
                ));
            }
            if f.features.iter().any(|v| !v.is_finite()) {
                out.push(violation("FrameRecord", "features", fid, "non-finite component".into()));
            }
            if f.object_scores.iter().any(|v| !v.is_finite()) {
                out.push(violation("FrameRecord", "object_scores", fid, "non-finite score".into()));
            }
            if f.face_scores.iter().any(|v| !v.is_finite()) {
                out.push(violation("FrameRecord", "face_scores", fid, "non-finite score".into()));
            }
        }

        if let Some(gt) = &event.ground_truth {
            validate_ground_truth(event, gt, &mut out);
        }
    }
    out
}

fn validate_ground_truth(event: &Event, gt: &GroundTruth, out: &mut Vec<Violation>) {
    let ids: HashSet<&str> = event.frames.iter().map(|f| f.frame_id.as_str()).collect();
    let is_informative = |id: &str| gt.informative_labels.get(id).copied().unwrap_or(false);

    for id in gt.informative_labels.keys() {
        if !ids.contains(id.as_str()) {
            out.push(violation("GroundTruth", "informative_labels", id, "unknown frame".into()));
        }
    }
    let mut summary_seen = HashSet::new();
    for id in &gt.summary_ids {
        if !ids.contains(id.as_str()) {
            out.push(violation("GroundTruth", "summary_ids", id, "unknown frame".into()));
        } else if !is_informative(id) {
            out.push(violation(
                "GroundTruth",
                "summary_ids",
                id,
                "summary frame is not labeled informative".into(),
            ));
        }
        if !summary_seen.insert(id.as_str()) {
            out.push(violation("GroundTruth", "summary_ids", id, "duplicate summary frame".into()));
        }
    }
    for id in gt.group_ids.keys() {
        if !is_informative(id) {
            out.push(violation(
                "GroundTruth",
                "group_ids",
                id,
                "group assigned to a frame not labeled informative".into(),
            ));
        }
    }
    for (id, &label) in &gt.informative_labels {
        if label && !gt.group_ids.contains_key(id) {
            out.push(violation(
                "GroundTruth",
                "group_ids",
                id,
                "informative frame has no group".into(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_line(id: &str, event: &str, ts: i64, features: &[f64]) -> String {
        serde_json::json!({
            "frame_id": id, "event_id": event, "timestamp": ts, "features": features,
            "informativeness": 0.5, "saliency": 1.0, "object_scores": [], "face_scores": []
        })
        .to_string()
    }

    #[test]
    fn three_frames_one_event() {
        let input = [
            frame_line("c", "e1", 30, &[0.0, 1.0]),
            frame_line("a", "e1", 10, &[1.0, 0.0]),
            frame_line("b", "e1", 10, &[1.0, 1.0]),
        ]
        .join("\n");
        let d = parse_dataset(input.as_bytes()).unwrap();
        assert_eq!(d.events.len(), 1);
        assert_eq!(d.feature_dim, 2);
        let ids: Vec<_> = d.events[0].frames.iter().map(|f| f.frame_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn dimension_mismatch_names_frame() {
        let input = [frame_line("a", "e", 1, &[0.0, 1.0]), frame_line("b", "e", 2, &[0.0])].join("\n");
        match read_dataset(input.as_bytes()) {
            Err(Error::DimensionMismatch { frame_id, expected, found }) => {
                assert_eq!((frame_id.as_str(), expected, found), ("b", 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_number() {
        let input = format!("{}\n\n{{\"frame_id\": 3}}\n", frame_line("a", "e", 1, &[0.0]));
        match read_dataset(input.as_bytes()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_frame_rejected() {
        let input = [frame_line("a", "e", 1, &[0.0]), frame_line("a", "f", 2, &[0.0])].join("\n");
        assert!(matches!(read_dataset(input.as_bytes()), Err(Error::DuplicateFrame(id)) if id == "a"));
    }

    #[test]
    fn gt_summary_must_reference_event_frames() {
        let gt = serde_json::json!({
            "gt": GT_TAG, "event_id": "e", "informative": ["a"], "groups": {"a": 0}, "summary": ["zzz"]
        });
        let input = format!("{}\n{}\n", frame_line("a", "e", 1, &[0.0]), gt);
        assert!(matches!(
            read_dataset(input.as_bytes()),
            Err(Error::UnknownFrame { frame_id, .. }) if frame_id == "zzz"
        ));
    }

    #[test]
    fn gt_for_unknown_event_rejected() {
        let gt = serde_json::json!({"gt": GT_TAG, "event_id": "nope", "informative": [], "groups": {}, "summary": []});
        let input = format!("{}\n{}\n", frame_line("a", "e", 1, &[0.0]), gt);
        assert!(matches!(read_dataset(input.as_bytes()), Err(Error::UnknownEvent(_))));
    }

    #[test]
    fn wrong_gt_tag_is_malformed() {
        let gt = serde_json::json!({"gt": "x", "event_id": "e", "informative": [], "groups": {}, "summary": []});
        let input = format!("{}\n{}\n", frame_line("a", "e", 1, &[0.0]), gt);
        assert!(matches!(read_dataset(input.as_bytes()), Err(Error::Malformed { line: 2, .. })));
    }

    fn valid_dataset() -> Dataset {
        let gt = serde_json::json!({
            "gt": GT_TAG, "event_id": "e", "informative": ["a", "b"], "groups": {"a": 0, "b": 1}, "summary": ["b"]
        });
        let input = [
            frame_line("a", "e", 1, &[0.0]),
            frame_line("b", "e", 2, &[1.0]),
            frame_line("c", "e", 3, &[2.0]),
            gt.to_string(),
        ]
        .join("\n");
        parse_dataset(input.as_bytes()).unwrap()
    }

    #[test]
    fn valid_dataset_has_no_violations() {
        let d = valid_dataset();
        assert!(validate_dataset(&d).is_empty());
        let gt = d.events[0].ground_truth.as_ref().unwrap();
        assert_eq!(gt.informative_labels.get("c"), Some(&false));
    }

    #[test]
    fn informativeness_out_of_range_is_one_violation() {
        let mut d = valid_dataset();
        d.events[0].frames[1].informativeness = 1.2;
        let v = validate_dataset(&d);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].id, "b");
        assert_eq!(v[0].field, "informativeness");
    }

    #[test]
    fn group_on_non_informative_frame_is_one_violation() {
        let mut d = valid_dataset();
        d.events[0].ground_truth.as_mut().unwrap().group_ids.insert("c".into(), 2);
        let v = validate_dataset(&d);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!((v[0].type_name, v[0].field, v[0].id.as_str()), ("GroundTruth", "group_ids", "c"));
    }

    #[test]
    fn parse_rejects_invalid_values() {
        let bad = frame_line("a", "e", 1, &[0.0]).replace("\"saliency\":1.0", "\"saliency\":-1.0");
        assert!(matches!(parse_dataset(bad.as_bytes()), Err(Error::Invalid(v)) if v.len() == 1));
        assert!(read_dataset(bad.as_bytes()).is_ok());
    }

    #[test]
    fn canonical_round_trip() {
        let mut d = valid_dataset();
        d.metadata.insert("source".into(), "unit".into());
        let text = dataset_to_string(&d).unwrap();
        let back = parse_dataset(text.as_bytes()).unwrap();
        assert_eq!(back, d);
        assert_eq!(dataset_to_string(&back).unwrap(), text);
    }

    #[test]
    fn attach_external_ground_truth() {
        let mut d = valid_dataset();
        d.events[0].ground_truth = None;
        let gt = serde_json::json!({"gt": GT_TAG, "event_id": "e", "informative": ["c"], "groups": {"c": 4}, "summary": ["c"]});
        d.attach_ground_truth(gt.to_string().as_bytes()).unwrap();
        assert_eq!(d.events[0].ground_truth.as_ref().unwrap().summary_ids, vec!["c".to_string()]);
        assert!(validate_dataset(&d).is_empty());
    }
}
