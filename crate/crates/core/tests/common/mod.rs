//! Brute-force reference implementations used as test oracles. They
//! recompute everything from the definitions and share no code with the
//! library beyond the data types.

#![allow(dead_code)]

use egosum_core::{FilteredEvent, FrameRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

pub fn kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    (-sq_dist(a, b) / (2.0 * sigma * sigma)).exp()
}

/// Median of all pairwise distances by a double loop, 1 when degenerate.
pub fn median_bandwidth(frames: &[FrameRecord]) -> f64 {
    let mut d = Vec::new();
    for i in 0..frames.len() {
        for j in 0..frames.len() {
            if i < j {
                d.push(sq_dist(&frames[i].features, &frames[j].features).sqrt());
            }
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = d.len();
    let med = if n % 2 == 1 { d[n / 2] } else { (d[n / 2 - 1] + d[n / 2]) / 2.0 };
    if med > 0.0 { med } else { 1.0 }
}

/// Greedy relevance + novelty selection evaluated from scratch at every
/// step. `relevance` and `rank` are indexed like `frames`.
pub fn greedy(frames: &[FrameRecord], relevance: &[f64], rank: &[usize], t: usize, sigma: f64) -> Vec<String> {
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < t {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..frames.len() {
            if chosen.contains(&c) {
                continue;
            }
            let novelty = if chosen.is_empty() {
                1.0
            } else {
                let mut max = f64::NEG_INFINITY;
                for &s in &chosen {
                    max = max.max(kernel(&frames[c].features, &frames[s].features, sigma));
                }
                1.0 - max
            };
            let obj = relevance[c] + novelty;
            let better = match best {
                None => true,
                Some((b, bo)) => obj > bo || (obj == bo && rank[c] < rank[b]),
            };
            if better {
                best = Some((c, obj));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen.into_iter().map(|i| frames[i].frame_id.clone()).collect()
}

/// Mean over validation items of their best similarity to the summary.
pub fn sms_matrix(validation: &[&FrameRecord], summary: &[&FrameRecord], sigma: f64) -> f64 {
    let mut total = 0.0;
    for v in validation {
        let row: Vec<f64> = summary.iter().map(|y| kernel(&v.features, &y.features, sigma)).collect();
        total += row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    }
    total / validation.len() as f64
}

pub fn frame(id: &str, ts: i64, features: Vec<f64>) -> FrameRecord {
    FrameRecord {
        frame_id: id.to_string(),
        event_id: "e".to_string(),
        timestamp: ts,
        features,
        informativeness: 1.0,
        saliency: 0.0,
        object_scores: vec![],
        face_scores: vec![],
    }
}

/// A random kept-frame set with occasional duplicated feature vectors.
pub fn random_event(rng: &mut ChaCha8Rng, m: usize, d: usize) -> FilteredEvent {
    let mut frames: Vec<FrameRecord> = Vec::with_capacity(m);
    for i in 0..m {
        let features = if i > 0 && rng.random::<f64>() < 0.15 {
            frames[rng.random_range(0..i)].features.clone()
        } else {
            (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
        };
        let mut f = frame(&format!("f{i:02}"), rng.random_range(0..5), features);
        f.saliency = (rng.random_range(0..20) as f64) * 0.5;
        f.object_scores = (0..rng.random_range(0..3)).map(|_| rng.random_range(0.0..1.0)).collect();
        f.face_scores = (0..rng.random_range(0..3)).map(|_| rng.random_range(-3.0..3.0)).collect();
        frames.push(f);
    }
    FilteredEvent::from_frames("e", frames)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
