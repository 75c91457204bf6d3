//! Informativeness filtering and its evaluation against labeled frames.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Dataset, Event, FrameRecord};

/// Threshold below which frames are discarded by default.
pub const DEFAULT_THRESHOLD: f64 = 0.025;

/// Threshold with the best F-measure in the reference evaluation.
pub const BEST_F_THRESHOLD: f64 = 0.05;

/// An event reduced to the frames that passed the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredEvent {
    pub event_id: String,
    /// Kept frames, in temporal order.
    pub kept: Vec<FrameRecord>,
    pub discarded: Vec<String>,
    pub threshold: f64,
}

impl FilteredEvent {
    /// Number of kept frames (`M`).
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Set when every frame was discarded.
    pub fn all_discarded(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn kept_frame(&self, frame_id: &str) -> Option<&FrameRecord> {
        self.kept.iter().find(|f| f.frame_id == frame_id)
    }

    /// Wraps already-chosen frames without filtering.
    pub fn from_frames(event_id: impl Into<String>, mut kept: Vec<FrameRecord>) -> Self {
        crate::model::sort_frames(&mut kept);
        FilteredEvent {
            event_id: event_id.into(),
            kept,
            discarded: Vec::new(),
            threshold: 0.0,
        }
    }
}

/// Keeps frames whose informativeness is at least `threshold`.
pub fn filter_informative(event: &Event, threshold: f64) -> FilteredEvent {
    let (kept, discarded): (Vec<&FrameRecord>, Vec<&FrameRecord>) = event
        .frames
        .iter()
        .partition(|f| f.informativeness >= threshold);
    FilteredEvent {
        event_id: event.event_id.clone(),
        kept: kept.into_iter().cloned().collect(),
        discarded: discarded.into_iter().map(|f| f.frame_id.clone()).collect(),
        threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl ClassificationMetrics {
    /// Derives the rates from a confusion matrix. Empty denominators give
    /// precision/recall of 1.
    pub fn from_counts(threshold: f64, tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let total = tp + fp + fn_ + tn;
        let accuracy = if total == 0 { 0.0 } else { (tp + tn) as f64 / total as f64 };
        ClassificationMetrics {
            threshold,
            tp,
            fp,
            fn_,
            tn,
            accuracy,
            precision,
            recall,
            f_measure,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn check_keys(labels: &BTreeMap<String, bool>, scores: &BTreeMap<String, f64>) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    if let Some(k) = labels.keys().find(|k| !scores.contains_key(*k)) {
        return Err(Error::KeyMismatch(k.clone()));
    }
    if let Some(k) = scores.keys().find(|k| !labels.contains_key(*k)) {
        return Err(Error::KeyMismatch(k.clone()));
    }
    Ok(())
}

fn count(labels: &BTreeMap<String, bool>, scores: &BTreeMap<String, f64>, threshold: f64) -> ClassificationMetrics {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (id, &label) in labels {
        let predicted = scores[id] >= threshold;
        match (predicted, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    ClassificationMetrics::from_counts(threshold, tp, fp, fn_, tn)
}

/// Scores the filter at one threshold; informative is the positive class.
pub fn classification_metrics(
    labels: &BTreeMap<String, bool>,
    scores: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<ClassificationMetrics> {
    check_keys(labels, scores)?;
    Ok(count(labels, scores, threshold))
}

pub fn threshold_sweep(
    labels: &BTreeMap<String, bool>,
    scores: &BTreeMap<String, f64>,
    thresholds: &[f64],
) -> Result<Vec<ClassificationMetrics>> {
    check_keys(labels, scores)?;
    if thresholds.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::UnsortedThresholds);
    }
    Ok(thresholds.iter().map(|&t| count(labels, scores, t)).collect())
}

/// Evenly spaced thresholds `0, step, 2*step, ...` up to and including 1.
pub fn threshold_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Collects ground-truth labels and informativeness scores over every
/// annotated event.
pub fn labeled_scores(dataset: &Dataset) -> (BTreeMap<String, bool>, BTreeMap<String, f64>) {
    let mut labels = BTreeMap::new();
    let mut scores = BTreeMap::new();
    for event in &dataset.events {
        let Some(gt) = &event.ground_truth else { continue };
        for f in &event.frames {
            if let Some(&label) = gt.informative_labels.get(&f.frame_id) {
                labels.insert(f.frame_id.clone(), label);
                scores.insert(f.frame_id.clone(), f.informativeness);
            }
        }
    }
    (labels, scores)
}

pub fn write_sweep_csv<W: Write>(rows: &[ClassificationMetrics], mut out: W) -> std::io::Result<()> {
    writeln!(out, "threshold,tp,fp,fn,tn,accuracy,precision,recall,f_measure")?;
    for m in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            m.threshold, m.tp, m.fp, m.fn_, m.tn, m.accuracy, m.precision, m.recall, m.f_measure
        )?;
    }
    Ok(())
}
