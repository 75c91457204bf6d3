use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use egosum_bench::fixture;
use egosum_core::relevance::rank_all;
use egosum_core::{
    filter_informative, fit_kernel, fuse_relevance, greedy_select, run_pipeline, sms_curve, FusionWeights,
    PipelineConfig,
};

fn greedy(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy_select");
    for frames in [50, 200, 800] {
        let d = fixture(1, frames, 16);
        let fe = filter_informative(&d.events[0], 0.025);
        let fused = fuse_relevance(&rank_all(&fe).unwrap(), &FusionWeights::uniform()).unwrap();
        let kernel = fit_kernel(&fe);
        let t = (fe.len() / 10).max(1);
        group.bench_with_input(BenchmarkId::from_parameter(frames), &t, |b, &t| {
            b.iter(|| greedy_select(black_box(&fe), &fused, t, &kernel).unwrap())
        });
    }
    group.finish();
}

fn curve(c: &mut Criterion) {
    let mut group = c.benchmark_group("sms_curve");
    for frames in [50, 200, 800] {
        let d = fixture(1, frames, 16);
        let event = &d.events[0];
        let fe = filter_informative(event, 0.025);
        let order: Vec<String> = fe.kept.iter().map(|f| f.frame_id.clone()).collect();
        let validation = event.gt_summary_frames().unwrap();
        let kernel = fit_kernel(&fe);
        group.bench_function(BenchmarkId::from_parameter(frames), |b| {
            b.iter(|| sms_curve(black_box(&fe), &order, &validation, &kernel).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let d = fixture(20, 60, 8);
    let cfg = PipelineConfig::default();
    c.bench_function("run_pipeline/20x60", |b| b.iter(|| run_pipeline(black_box(&d), &cfg).unwrap()));
}

criterion_group!(benches, greedy, curve, pipeline);
criterion_main!(benches);
