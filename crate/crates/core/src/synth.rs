//! Seeded synthetic lifelog datasets with planted similarity groups.
//!
//! Each event is a sequence of short runs of frames, each run drawn from
//! one of several clusters (clusters may recur). Informative frames sit
//! near their cluster centre; non-informative frames get unrelated
//! features and low informativeness. Detector scores are noisy views of
//! a latent relevance mixing a per-frame quality with a per-cluster
//! appeal, so `relevance_concentration` controls how strongly relevance
//! piles up in a few clusters.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Dataset, Event, FrameRecord, GroundTruth};

const BASE_TIMESTAMP: i64 = 1_600_000_000;
/// Two frames per minute.
const FRAME_INTERVAL: i64 = 30;
const EVENT_SPACING: i64 = 6 * 3600;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub events: usize,
    /// Inclusive range.
    pub frames_per_event: (usize, usize),
    /// Inclusive range.
    pub clusters_per_event: (usize, usize),
    pub feature_dim: usize,
    pub noise_scale: f64,
    pub noninformative_rate: f64,
    /// Weight of the per-cluster appeal in each frame's latent relevance.
    pub relevance_concentration: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            events: 10,
            frames_per_event: (40, 80),
            clusters_per_event: (4, 6),
            feature_dim: 8,
            noise_scale: 0.15,
            noninformative_rate: 0.2,
            relevance_concentration: 0.5,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let (fmin, fmax) = self.frames_per_event;
        let (cmin, cmax) = self.clusters_per_event;
        let bad = |m: String| Err(Error::Config(m));
        if self.events == 0 || fmin == 0 || cmin == 0 || self.feature_dim == 0 {
            return bad("event, frame, cluster and dimension counts must be positive".into());
        }
        if fmin > fmax || cmin > cmax {
            return bad("range minimum exceeds maximum".into());
        }
        if cmax > fmin {
            return bad(format!("up to {cmax} clusters cannot fit in {fmin} frames"));
        }
        if !(0.0..=1.0).contains(&self.noninformative_rate) {
            return bad(format!("noninformative rate {} outside [0, 1]", self.noninformative_rate));
        }
        if !(0.0..=1.0).contains(&self.relevance_concentration) {
            return bad(format!(
                "relevance concentration {} outside [0, 1]",
                self.relevance_concentration
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad(format!("noise scale {} must be non-negative", self.noise_scale));
        }
        Ok(())
    }
}

pub fn synth_dataset(p: &SynthParams) -> Result<Dataset> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let events = (0..p.events).map(|i| synth_event(p, i, &mut rng)).collect();
    let metadata = BTreeMap::from([
        ("generator".to_string(), "synth".to_string()),
        ("seed".to_string(), p.seed.to_string()),
    ]);
    Ok(Dataset {
        events,
        feature_dim: p.feature_dim,
        metadata,
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Cluster index of each frame, built from runs; every cluster appears.
fn cluster_runs(n: usize, c: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let max_run = (n / (2 * c)).max(1);
    let mut order: Vec<usize> = (0..c).collect();
    order.shuffle(rng);
    let mut seq = Vec::with_capacity(n);
    for (k, &cluster) in order.iter().enumerate() {
        let reserve = c - k - 1;
        let room = n - seq.len() - reserve;
        let len = rng.random_range(1..=max_run).min(room);
        seq.extend(std::iter::repeat_n(cluster, len));
    }
    while seq.len() < n {
        let last = *seq.last().expect("at least one run");
        let mut cluster = rng.random_range(0..c);
        if c > 1 && cluster == last {
            cluster = (cluster + 1 + rng.random_range(0..c - 1)) % c;
        }
        let len = rng.random_range(1..=max_run).min(n - seq.len());
        seq.extend(std::iter::repeat_n(cluster, len));
    }
    seq
}

fn synth_event(p: &SynthParams, index: usize, rng: &mut ChaCha8Rng) -> Event {
    let event_id = format!("e{index:03}");
    let n = rng.random_range(p.frames_per_event.0..=p.frames_per_event.1);
    let c = rng.random_range(p.clusters_per_event.0..=p.clusters_per_event.1).min(n);
    let d = p.feature_dim;

    let centers: Vec<Vec<f64>> = (0..c).map(|_| (0..d).map(|_| gaussian(rng)).collect()).collect();
    let appeal: Vec<f64> = (0..c).map(|_| rng.random::<f64>()).collect();
    let assignment = cluster_runs(n, c, rng);
    let noise = Normal::new(0.0, p.noise_scale.max(f64::MIN_POSITIVE)).expect("valid std dev");

    let mut first_seen = vec![false; c];
    let mut frames = Vec::with_capacity(n);
    let mut labels = BTreeMap::new();
    let mut groups = BTreeMap::new();
    let kappa = p.relevance_concentration;

    for (i, &cluster) in assignment.iter().enumerate() {
        let frame_id = format!("{event_id}_f{i:04}");
        // a cluster's first frame is always informative so every group is annotated
        let informative = !std::mem::replace(&mut first_seen[cluster], true)
            || rng.random::<f64>() >= p.noninformative_rate;

        let (features, informativeness, latent) = if informative {
            let features = centers[cluster].iter().map(|m| m + noise.sample(rng)).collect();
            let u: f64 = rng.random();
            let quality: f64 = rng.random();
            (features, 0.15 + 0.85 * u.sqrt(), (1.0 - kappa) * quality + kappa * appeal[cluster])
        } else {
            let features = (0..d).map(|_| gaussian(rng)).collect();
            let u: f64 = rng.random();
            (features, 0.4 * u * u, 0.3 * rng.random::<f64>())
        };

        let saliency = (100.0 * (latent + 0.1 * gaussian(rng))).max(0.0);
        let detections = if informative { rng.random_range(0..=3) } else { rng.random_range(0..=1) };
        let object_scores = (0..detections)
            .map(|_| (0.8 * latent + 0.2 * rng.random::<f64>()).clamp(0.0, 1.0))
            .collect();
        let faces = rng.random_range(0..=2);
        let face_scores = (0..faces).map(|_| 4.0 * latent - 2.0 + 0.5 * gaussian(rng)).collect();

        labels.insert(frame_id.clone(), informative);
        if informative {
            groups.insert(frame_id.clone(), cluster as i64);
        }
        frames.push(FrameRecord {
            frame_id,
            event_id: event_id.clone(),
            timestamp: BASE_TIMESTAMP + index as i64 * EVENT_SPACING + i as i64 * FRAME_INTERVAL,
            features,
            informativeness,
            saliency,
            object_scores,
            face_scores,
        });
    }

    // reference summary: the informative frame nearest each centre
    let mut summary: Vec<(usize, usize)> = (0..c)
        .map(|cluster| {
            let best = frames
                .iter()
                .enumerate()
                .filter(|(i, f)| assignment[*i] == cluster && labels[&f.frame_id])
                .min_by(|(_, a), (_, b)| {
                    crate::diversity::euclidean(&a.features, &centers[cluster])
                        .total_cmp(&crate::diversity::euclidean(&b.features, &centers[cluster]))
                })
                .map(|(i, _)| i)
                .expect("every cluster has an informative frame");
            (best, cluster)
        })
        .collect();
    summary.sort_unstable();

    let ground_truth = GroundTruth {
        informative_labels: labels,
        group_ids: groups,
        summary_ids: summary.iter().map(|&(i, _)| frames[i].frame_id.clone()).collect(),
    };
    Event::new(event_id, frames, Some(ground_truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dataset_to_string, validate_dataset};

    fn small(seed: u64) -> SynthParams {
        SynthParams {
            events: 3,
            frames_per_event: (12, 20),
            clusters_per_event: (3, 5),
            feature_dim: 4,
            seed,
            ..SynthParams::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = dataset_to_string(&synth_dataset(&small(7)).unwrap()).unwrap();
        let b = dataset_to_string(&synth_dataset(&small(7)).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = dataset_to_string(&synth_dataset(&small(8)).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_data_is_valid() {
        for seed in 0..20 {
            let d = synth_dataset(&small(seed)).unwrap();
            assert_eq!(validate_dataset(&d), vec![], "seed {seed}");
        }
    }

    #[test]
    fn zero_noninformative_rate_labels_everything_informative() {
        let d = synth_dataset(&SynthParams {
            noninformative_rate: 0.0,
            ..small(3)
        })
        .unwrap();
        for e in &d.events {
            assert!(e.ground_truth.as_ref().unwrap().informative_labels.values().all(|&l| l));
        }
    }

    #[test]
    fn summary_has_one_frame_per_cluster() {
        let d = synth_dataset(&SynthParams {
            clusters_per_event: (4, 4),
            ..small(11)
        })
        .unwrap();
        for e in &d.events {
            let gt = e.ground_truth.as_ref().unwrap();
            assert_eq!(gt.summary_ids.len(), 4);
            let covered: std::collections::BTreeSet<_> =
                gt.summary_ids.iter().map(|id| gt.group_ids[id]).collect();
            assert_eq!(covered.len(), 4);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(synth_dataset(&SynthParams { events: 0, ..small(0) }).is_err());
        assert!(synth_dataset(&SynthParams { noninformative_rate: 1.5, ..small(0) }).is_err());
        assert!(synth_dataset(&SynthParams {
            clusters_per_event: (3, 30),
            ..small(0)
        })
        .is_err());
    }
}
