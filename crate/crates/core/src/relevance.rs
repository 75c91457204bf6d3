//! Per-criterion relevance, rank normalization and weighted fusion.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::informativeness::FilteredEvent;
use crate::model::FrameRecord;

/// Largest face score accepted before exponentiation.
pub const FACE_EXP_GUARD: f64 = 700.0;

/// Tolerance on the sum of fusion weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    Saliency,
    Objects,
    Faces,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Saliency, Criterion::Objects, Criterion::Faces];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Saliency => "saliency",
            Criterion::Objects => "objects",
            Criterion::Faces => "faces",
        }
    }

    /// Raw relevance of `frame` under this criterion.
    pub fn score(self, frame: &FrameRecord) -> Result<f64> {
        match self {
            Criterion::Saliency => Ok(saliency_relevance(frame)),
            Criterion::Objects => object_relevance(frame),
            Criterion::Faces => face_relevance(frame),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saliency" => Ok(Criterion::Saliency),
            "objects" => Ok(Criterion::Objects),
            "faces" => Ok(Criterion::Faces),
            _ => Err(Error::Config(format!("unknown criterion `{s}`"))),
        }
    }
}

impl Serialize for Criterion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// What a ranked list was ranked by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSource {
    Single(Criterion),
    Fused,
}

impl fmt::Display for RankSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankSource::Single(c) => c.fmt(f),
            RankSource::Fused => f.write_str("fused"),
        }
    }
}

pub fn saliency_relevance(frame: &FrameRecord) -> f64 {
    frame.saliency
}

pub fn object_relevance(frame: &FrameRecord) -> Result<f64> {
    if frame.object_scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("object scores of `{}`", frame.frame_id)));
    }
    Ok(frame.object_scores.iter().fold(0.0, |acc, s| acc + s))
}

/// `sum(exp(score))`; negative detector scores contribute less than one.
pub fn face_relevance(frame: &FrameRecord) -> Result<f64> {
    let mut total = 0.0;
    for &s in &frame.face_scores {
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("face scores of `{}`", frame.frame_id)));
        }
        if s > FACE_EXP_GUARD {
            return Err(Error::ExponentOverflow(s));
        }
        total += s.exp();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub frame_id: String,
    #[serde(skip)]
    pub timestamp: i64,
    pub raw_score: f64,
    /// 1-based position.
    pub rank: usize,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub event_id: String,
    pub source: RankSource,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.frame_id.as_str())
    }

    pub fn normalized_by_id(&self) -> HashMap<&str, f64> {
        self.entries.iter().map(|e| (e.frame_id.as_str(), e.normalized)).collect()
    }

    pub fn entry(&self, frame_id: &str) -> Option<&RankedEntry> {
        self.entries.iter().find(|e| e.frame_id == frame_id)
    }

    /// Writes `frame_id,criterion,raw_score,rank,normalized` rows.
    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "frame_id,criterion,raw_score,rank,normalized")?;
        }
        for e in &self.entries {
            writeln!(out, "{},{},{},{},{}", e.frame_id, self.source, e.raw_score, e.rank, e.normalized)?;
        }
        Ok(())
    }
}

/// `(M - rank) / (M - 1)`, or 1 for a single frame.
pub fn normalized_rank(rank: usize, m: usize) -> f64 {
    if m <= 1 {
        1.0
    } else {
        (m - rank) as f64 / (m - 1) as f64
    }
}

/// Sorts entries by score descending, then timestamp, then id, and
/// assigns ranks and normalized scores.
fn rank_entries(event_id: &str, source: RankSource, mut entries: Vec<RankedEntry>) -> RankedList {
    entries.sort_by(|a, b| {
        b.raw_score
            .partial_cmp(&a.raw_score)
            .expect("scores are finite")
            .then(a.timestamp.cmp(&b.timestamp))
            .then_with(|| a.frame_id.cmp(&b.frame_id))
    });
    let m = entries.len();
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
        e.normalized = normalized_rank(e.rank, m);
    }
    RankedList {
        event_id: event_id.to_string(),
        source,
        entries,
    }
}

pub fn rank_normalize(
    scores: &[(String, f64)],
    frames: &FilteredEvent,
    criterion: Criterion,
) -> Result<RankedList> {
    if frames.is_empty() {
        return Err(Error::Empty("kept frames"));
    }
    let timestamps: HashMap<&str, i64> = frames
        .kept
        .iter()
        .map(|f| (f.frame_id.as_str(), f.timestamp))
        .collect();
    let mut seen = HashMap::with_capacity(scores.len());
    let mut entries = Vec::with_capacity(scores.len());
    for (id, score) in scores {
        let Some(&timestamp) = timestamps.get(id.as_str()) else {
            return Err(Error::Coverage(format!("`{id}` is not a kept frame")));
        };
        if seen.insert(id.as_str(), ()).is_some() {
            return Err(Error::Coverage(format!("duplicate score for `{id}`")));
        }
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("{criterion} score of `{id}`")));
        }
        entries.push(RankedEntry {
            frame_id: id.clone(),
            timestamp,
            raw_score: *score,
            rank: 0,
            normalized: 0.0,
        });
    }
    if let Some(missing) = frames.kept.iter().find(|f| !seen.contains_key(f.frame_id.as_str())) {
        return Err(Error::Coverage(format!("no score for `{}`", missing.frame_id)));
    }
    Ok(rank_entries(&frames.event_id, RankSource::Single(criterion), entries))
}

/// Scores every kept frame under `criterion` and rank-normalizes.
pub fn rank_criterion(frames: &FilteredEvent, criterion: Criterion) -> Result<RankedList> {
    let scores = frames
        .kept
        .iter()
        .map(|f| Ok((f.frame_id.clone(), criterion.score(f)?)))
        .collect::<Result<Vec<_>>>()?;
    rank_normalize(&scores, frames, criterion)
}

/// Ranked lists for all three criteria, in [`Criterion::ALL`] order.
pub fn rank_all(frames: &FilteredEvent) -> Result<[RankedList; 3]> {
    Ok([
        rank_criterion(frames, Criterion::Saliency)?,
        rank_criterion(frames, Criterion::Objects)?,
        rank_criterion(frames, Criterion::Faces)?,
    ])
}

/// Convex combination weights over the three criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights([f64; 3]);

impl FusionWeights {
    pub fn new(saliency: f64, objects: f64, faces: f64) -> Result<Self> {
        let w = [saliency, objects, faces];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidWeights(format!("{w:?} must lie in [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("{w:?} sum to {sum}, not 1")));
        }
        Ok(FusionWeights(w))
    }

    pub fn uniform() -> Self {
        FusionWeights([1.0 / 3.0; 3])
    }

    pub fn one_hot(criterion: Criterion) -> Self {
        let mut w = [0.0; 3];
        w[criterion.index()] = 1.0;
        FusionWeights(w)
    }

    pub fn get(&self, criterion: Criterion) -> f64 {
        self.0[criterion.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }
}

impl Serialize for FusionWeights {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(3))?;
        for c in Criterion::ALL {
            map.serialize_entry(c.as_str(), &self.get(c))?;
        }
        map.end()
    }
}

/// Weighted sum of the per-criterion normalized scores, re-ranked and
/// re-normalized.
pub fn fuse_relevance(lists: &[RankedList], weights: &FusionWeights) -> Result<RankedList> {
    let mut by_criterion: [Option<&RankedList>; 3] = [None; 3];
    for list in lists {
        match list.source {
            RankSource::Single(c) if by_criterion[c.index()].is_none() => by_criterion[c.index()] = Some(list),
            other => return Err(Error::Coverage(format!("unexpected or repeated `{other}` list"))),
        }
    }
    let [Some(base), Some(_), Some(_)] = by_criterion else {
        return Err(Error::Coverage("fusion needs one list per criterion".into()));
    };

    let lookups: Vec<HashMap<&str, f64>> = by_criterion
        .iter()
        .map(|l| l.expect("checked above").normalized_by_id())
        .collect();
    for (list, lookup) in by_criterion.iter().zip(&lookups) {
        let list = list.expect("checked above");
        if list.len() != base.len() || base.frame_ids().any(|id| !lookup.contains_key(id)) {
            return Err(Error::Coverage(format!(
                "{} and {} lists cover different frames",
                base.source, list.source
            )));
        }
    }

    let w = weights.as_array();
    let entries = base
        .entries
        .iter()
        .map(|e| {
            let id = e.frame_id.as_str();
            let fused = w[0] * lookups[0][id] + w[1] * lookups[1][id] + w[2] * lookups[2][id];
            RankedEntry {
                frame_id: e.frame_id.clone(),
                timestamp: e.timestamp,
                raw_score: fused,
                rank: 0,
                normalized: 0.0,
            }
        })
        .collect();
    Ok(rank_entries(&base.event_id, RankSource::Fused, entries))
}
