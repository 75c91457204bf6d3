//! Sum of Maximal Similarities (SMS) and its mean curve (MSMS).
//!
//! `SMS(V, Y) = (1/P) * sum_i max_j s(v_i, y_j)` scores how well a
//! summary `Y` covers a reference set `V` of `P` frames. Evaluating it
//! on every prefix of a ranking gives a per-event curve over the fraction
//! `t/M` of frames shown; curves are resampled onto a shared grid and
//! averaged into the MSMS curve, whose trapezoidal area scores a ranking
//! method. Normalized areas of the single-criterion curves become fusion
//! weights.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::diversity::SimilarityKernel;
use crate::error::{Error, Result};
use crate::informativeness::FilteredEvent;
use crate::model::FrameRecord;
use crate::pipeline::uniform_indices;
use crate::relevance::FusionWeights;

pub const DEFAULT_GRID_SIZE: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmsCurve {
    pub event_id: String,
    pub points: Vec<CurvePoint>,
}

impl SmsCurve {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    pub fn last_value(&self) -> Option<f64> {
        self.points.last().map(|p| p.value)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[0].value <= w[1].value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsmsCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub auc: f64,
}

/// `n` evenly spaced fractions from 0 to 1 inclusive.
pub fn fraction_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs both endpoints");
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn max_similarity(v: &FrameRecord, summary: &[&FrameRecord], kernel: &SimilarityKernel) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for y in summary {
        best = best.max(kernel.similarity(&v.features, &y.features)?);
    }
    Ok(best)
}

pub fn sms(validation: &[&FrameRecord], summary: &[&FrameRecord], kernel: &SimilarityKernel) -> Result<f64> {
    if validation.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    if summary.is_empty() {
        return Err(Error::Empty("summary"));
    }
    let mut total = 0.0;
    for v in validation {
        total += max_similarity(v, summary, kernel)?;
    }
    Ok(total / validation.len() as f64)
}

/// SMS of every prefix of `ranked`, which must order all kept frames.
pub fn sms_curve(
    event: &FilteredEvent,
    ranked: &[String],
    validation: &[&FrameRecord],
    kernel: &SimilarityKernel,
) -> Result<SmsCurve> {
    if validation.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let m = event.len();
    if ranked.len() != m {
        return Err(Error::Coverage(format!("ranking has {} frames, event keeps {m}", ranked.len())));
    }
    let mut seen = HashSet::with_capacity(m);
    let mut best = vec![f64::NEG_INFINITY; validation.len()];
    let mut points = Vec::with_capacity(m);
    for (t, id) in ranked.iter().enumerate() {
        if !seen.insert(id.as_str()) {
            return Err(Error::Coverage(format!("`{id}` ranked twice")));
        }
        let frame = event
            .kept_frame(id)
            .ok_or_else(|| Error::Coverage(format!("`{id}` is not a kept frame")))?;
        let mut total = 0.0;
        for (b, v) in best.iter_mut().zip(validation) {
            *b = b.max(kernel.similarity(&v.features, &frame.features)?);
            total += *b;
        }
        points.push(CurvePoint {
            fraction: (t + 1) as f64 / m as f64,
            value: total / validation.len() as f64,
        });
    }
    Ok(SmsCurve {
        event_id: event.event_id.clone(),
        points,
    })
}

/// Curve of uniform-sampling summaries: point `t` scores the `t` frames
/// spread evenly over the kept sequence. Summaries of different length
/// are not nested, so the curve need not be monotone.
pub fn uniform_sms_curve(
    event: &FilteredEvent,
    validation: &[&FrameRecord],
    kernel: &SimilarityKernel,
) -> Result<SmsCurve> {
    let m = event.len();
    let mut points = Vec::with_capacity(m);
    for t in 1..=m {
        let picked: Vec<&FrameRecord> = uniform_indices(m, t)?.into_iter().map(|i| &event.kept[i]).collect();
        points.push(CurvePoint {
            fraction: t as f64 / m as f64,
            value: sms(validation, &picked, kernel)?,
        });
    }
    Ok(SmsCurve {
        event_id: event.event_id.clone(),
        points,
    })
}

/// Piecewise-linear resampling, held constant beyond the first and last
/// points.
pub fn interpolate_curve(curve: &SmsCurve, grid: &[f64]) -> Vec<f64> {
    let pts = &curve.points;
    if pts.is_empty() {
        return vec![0.0; grid.len()];
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut seg = 0;
    for &x in grid {
        if x <= pts[0].fraction {
            out.push(pts[0].value);
            continue;
        }
        let last = pts[pts.len() - 1];
        if x >= last.fraction {
            out.push(last.value);
            continue;
        }
        while pts[seg + 1].fraction < x {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let w = (x - a.fraction) / (b.fraction - a.fraction);
        out.push(a.value + w * (b.value - a.value));
    }
    out
}

/// Trapezoidal area under `values` sampled at `grid`.
pub fn auc(grid: &[f64], values: &[f64]) -> Result<f64> {
    if grid.len() < 2 || values.len() != grid.len() {
        return Err(Error::Empty("curve needs at least two points on its grid"));
    }
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum())
}

pub fn msms(curves: &[SmsCurve]) -> Result<MsmsCurve> {
    msms_on_grid(curves, DEFAULT_GRID_SIZE)
}

pub fn msms_on_grid(curves: &[SmsCurve], grid_size: usize) -> Result<MsmsCurve> {
    if curves.is_empty() {
        return Err(Error::Empty("curve list"));
    }
    if grid_size < 2 {
        return Err(Error::Config(format!("grid size {grid_size} is below 2")));
    }
    let grid = fraction_grid(grid_size);
    let mut values = vec![0.0; grid.len()];
    for c in curves {
        for (acc, v) in values.iter_mut().zip(interpolate_curve(c, &grid)) {
            *acc += v;
        }
    }
    let n = curves.len() as f64;
    for v in &mut values {
        *v /= n;
    }
    let auc = auc(&grid, &values)?;
    Ok(MsmsCurve { grid, values, auc })
}

/// Fusion weights proportional to each criterion's stand-alone AUC,
/// indexed by [`crate::relevance::Criterion::index`].
pub fn estimate_weights(per_criterion_auc: [f64; 3]) -> Result<FusionWeights> {
    if per_criterion_auc.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidWeights(format!("AUCs {per_criterion_auc:?} must be non-negative")));
    }
    let total: f64 = per_criterion_auc.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidWeights("all AUCs are zero".into()));
    }
    let [a, b, c] = per_criterion_auc.map(|x| x / total);
    FusionWeights::new(a, b, c)
}

/// Long-format CSV: `id,fraction,value`.
pub fn write_curves_csv<W: Write>(curves: &[(String, Vec<CurvePoint>)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "id,fraction,value")?;
    for (id, points) in curves {
        for p in points {
            writeln!(out, "{id},{},{}", p.fraction, p.value)?;
        }
    }
    Ok(())
}
