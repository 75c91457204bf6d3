//! Shared fixtures for the criterion benchmarks.

use egosum_core::{synth_dataset, Dataset, SynthParams};

/// A dataset with `events` events of exactly `frames` frames each.
pub fn fixture(events: usize, frames: usize, dim: usize) -> Dataset {
    synth_dataset(&SynthParams {
        events,
        frames_per_event: (frames, frames),
        clusters_per_event: (5, 5),
        feature_dim: dim,
        seed: 42,
        ..SynthParams::default()
    })
    .expect("fixture parameters are valid")
}
