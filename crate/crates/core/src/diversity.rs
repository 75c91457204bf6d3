//! Similarity kernel, novelty, and greedy relevance + novelty re-ranking.
//!
//! Similarity is a Gaussian kernel on Euclidean feature distance,
//! `s(a, b) = exp(-d(a, b)^2 / (2 sigma^2))`, with `sigma` set per event
//! to the median pairwise distance of its kept frames. Novelty of a
//! candidate is one minus its largest similarity to the frames already
//! chosen. Selection starts from the top of the fused ranking and then
//! repeatedly takes the unselected frame maximizing `r + n`.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::informativeness::FilteredEvent;
use crate::model::{FrameRecord, SelectionScore, Summary};
use crate::relevance::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityKernel {
    pub kind: KernelKind,
    pub sigma: f64,
}

impl SimilarityKernel {
    pub fn gaussian(sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "kernel bandwidth must be positive");
        SimilarityKernel {
            kind: KernelKind::Gaussian,
            sigma,
        }
    }

    pub fn similarity(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::FeatureLength(a.len(), b.len()));
        }
        Ok(self.at_sq_distance(sq_distance(a, b)))
    }

    fn at_sq_distance(&self, sq: f64) -> f64 {
        match self.kind {
            KernelKind::Gaussian => (-sq / (2.0 * self.sigma * self.sigma)).exp(),
        }
    }
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_distance(a, b).sqrt()
}

/// Fits the bandwidth to the median pairwise distance of the kept frames,
/// falling back to 1 when fewer than two frames exist or all coincide.
pub fn fit_kernel(frames: &FilteredEvent) -> SimilarityKernel {
    let kept = &frames.kept;
    let mut dists = Vec::with_capacity(kept.len() * kept.len().saturating_sub(1) / 2);
    for (i, a) in kept.iter().enumerate() {
        for b in &kept[i + 1..] {
            dists.push(euclidean(&a.features, &b.features));
        }
    }
    if dists.is_empty() {
        return SimilarityKernel::gaussian(1.0);
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 && median.is_finite() {
        SimilarityKernel::gaussian(median)
    } else {
        SimilarityKernel::gaussian(1.0)
    }
}

pub fn similarity(a: &FrameRecord, b: &FrameRecord, kernel: &SimilarityKernel) -> Result<f64> {
    kernel.similarity(&a.features, &b.features)
}

/// `1 - max_j s(candidate, selected_j)`; 1 for an empty selection.
pub fn novelty(candidate: &FrameRecord, selected: &[&FrameRecord], kernel: &SimilarityKernel) -> Result<f64> {
    let mut best: Option<f64> = None;
    for s in selected {
        let v = similarity(candidate, s, kernel)?;
        best = Some(best.map_or(v, |b| b.max(v)));
    }
    Ok(best.map_or(1.0, |b| 1.0 - b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub frame_id: String,
    pub r: f64,
    pub n: f64,
    pub objective: f64,
    /// Best objective among the frames not chosen at this step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runner_up: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub steps: Vec<TraceStep>,
}

/// Resolves the fused list to kept frames, checking they coincide.
fn resolve<'a>(frames: &'a FilteredEvent, fused: &RankedList) -> Result<Vec<(&'a FrameRecord, f64)>> {
    if fused.len() != frames.len() {
        return Err(Error::Coverage(format!(
            "ranked list has {} entries for {} kept frames",
            fused.len(),
            frames.len()
        )));
    }
    let mut seen = HashSet::with_capacity(fused.len());
    fused
        .entries
        .iter()
        .map(|e| {
            if !seen.insert(e.frame_id.as_str()) {
                return Err(Error::Coverage(format!("`{}` ranked twice", e.frame_id)));
            }
            let f = frames
                .kept_frame(&e.frame_id)
                .ok_or_else(|| Error::Coverage(format!("`{}` is not a kept frame", e.frame_id)))?;
            Ok((f, e.normalized))
        })
        .collect()
}

fn check_length(t: usize, m: usize) -> Result<()> {
    if t == 0 || t > m {
        return Err(Error::LengthOutOfRange { t, max: m });
    }
    Ok(())
}

fn finish(
    frames: &FilteredEvent,
    chosen: &[&FrameRecord],
    steps: Vec<TraceStep>,
) -> (Summary, SelectionTrace) {
    let scores = steps.iter().map(|s| SelectionScore { r: s.r, n: s.n }).collect();
    (
        Summary::from_frames(&frames.event_id, chosen, scores),
        SelectionTrace { steps },
    )
}

/// Greedily builds a summary of `t` frames maximizing fused relevance
/// plus novelty. Equal objectives go to the better fused rank.
pub fn greedy_select(
    frames: &FilteredEvent,
    fused: &RankedList,
    t: usize,
    kernel: &SimilarityKernel,
) -> Result<(Summary, SelectionTrace)> {
    let candidates = resolve(frames, fused)?;
    check_length(t, candidates.len())?;

    let m = candidates.len();
    let mut taken = vec![false; m];
    // largest similarity of each candidate to the current selection
    let mut max_sim: Vec<Option<f64>> = vec![None; m];
    let mut chosen = Vec::with_capacity(t);
    let mut steps = Vec::with_capacity(t);

    for _ in 0..t {
        let mut best: Option<(usize, f64)> = None;
        let mut runner_up: Option<f64> = None;
        for i in (0..m).filter(|&i| !taken[i]) {
            let objective = candidates[i].1 + max_sim[i].map_or(1.0, |s| 1.0 - s);
            match best {
                Some((_, b)) if objective <= b => {
                    runner_up = Some(runner_up.map_or(objective, |r| r.max(objective)));
                }
                _ => {
                    if let Some((_, b)) = best {
                        runner_up = Some(runner_up.map_or(b, |r| r.max(b)));
                    }
                    best = Some((i, objective));
                }
            }
        }
        let (pick, objective) = best.expect("t <= m leaves a candidate");
        taken[pick] = true;
        let (frame, r) = candidates[pick];
        steps.push(TraceStep {
            frame_id: frame.frame_id.clone(),
            r,
            n: max_sim[pick].map_or(1.0, |s| 1.0 - s),
            objective,
            runner_up,
        });
        chosen.push(frame);

        for i in (0..m).filter(|&i| !taken[i]) {
            let s = kernel.similarity(&candidates[i].0.features, &frame.features)?;
            max_sim[i] = Some(max_sim[i].map_or(s, |prev| prev.max(s)));
        }
    }
    Ok(finish(frames, &chosen, steps))
}

/// Truncates the fused ranking without re-ranking. Novelty is still
/// recorded for each frame but takes no part in the choice.
pub fn select_by_relevance(
    frames: &FilteredEvent,
    fused: &RankedList,
    t: usize,
    kernel: &SimilarityKernel,
) -> Result<(Summary, SelectionTrace)> {
    let candidates = resolve(frames, fused)?;
    check_length(t, candidates.len())?;

    let mut chosen: Vec<&FrameRecord> = Vec::with_capacity(t);
    let mut steps = Vec::with_capacity(t);
    for (i, &(frame, r)) in candidates.iter().take(t).enumerate() {
        let n = novelty(frame, &chosen, kernel)?;
        steps.push(TraceStep {
            frame_id: frame.frame_id.clone(),
            r,
            n,
            objective: r,
            runner_up: candidates.get(i + 1).map(|c| c.1),
        });
        chosen.push(frame);
    }
    Ok(finish(frames, &chosen, steps))
}
