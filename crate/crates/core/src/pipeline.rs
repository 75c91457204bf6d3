//! End-to-end summarization: filter, rank, fuse, re-rank, evaluate.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diversity::{fit_kernel, greedy_select, select_by_relevance, SelectionTrace, SimilarityKernel};
use crate::error::{Error, Result};
use crate::informativeness::{filter_informative, FilteredEvent, DEFAULT_THRESHOLD};
use crate::model::{Dataset, Event, FrameRecord, GroundTruth, Summary};
use crate::msms::{auc, estimate_weights, msms_on_grid, sms, sms_curve, uniform_sms_curve, MsmsCurve, SmsCurve, DEFAULT_GRID_SIZE};
use crate::relevance::{fuse_relevance, rank_all, Criterion, FusionWeights, RankedList};

/// How many frames a summary keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryLength {
    /// `ceil(fraction * M)` over the kept frames.
    Fraction(f64),
    /// A fixed count, capped at `M`.
    Fixed(usize),
}

impl SummaryLength {
    pub fn resolve(self, m: usize) -> usize {
        if m == 0 {
            return 0;
        }
        match self {
            // the epsilon keeps products like 0.7 * 10 from rounding up
            SummaryLength::Fraction(f) => ((f * m as f64 - 1e-9).ceil() as usize).clamp(1, m),
            SummaryLength::Fixed(n) => n.clamp(1, m),
        }
    }
}

/// Which annotated events feed weight estimation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationEvents {
    AllAnnotated,
    Listed(Vec<String>),
    /// A seeded random share of the annotated events.
    RandomSplit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Estimate(EstimationEvents),
    Fixed(FusionWeights),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub informativeness_threshold: f64,
    pub length: SummaryLength,
    pub weights: WeightMode,
    /// When false the fused ranking is truncated without re-ranking.
    pub novelty: bool,
    pub grid_size: usize,
    pub random_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            informativeness_threshold: DEFAULT_THRESHOLD,
            length: SummaryLength::Fraction(0.1),
            weights: WeightMode::Estimate(EstimationEvents::AllAnnotated),
            novelty: true,
            grid_size: DEFAULT_GRID_SIZE,
            random_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.informativeness_threshold) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, 1]",
                self.informativeness_threshold
            )));
        }
        match self.length {
            SummaryLength::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::Config(format!("summary fraction {f} outside (0, 1]")))
            }
            SummaryLength::Fixed(0) => return Err(Error::Config("summary length must be positive".into())),
            _ => {}
        }
        if let WeightMode::Estimate(EstimationEvents::RandomSplit(f)) = self.weights {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("estimation split {f} outside (0, 1]")));
            }
        }
        if self.grid_size < 2 {
            return Err(Error::Config("grid size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Re-ranks `ranked` with or without the novelty term.
pub fn rerank(
    frames: &FilteredEvent,
    ranked: &RankedList,
    t: usize,
    kernel: &SimilarityKernel,
    novelty: bool,
) -> Result<(Summary, SelectionTrace)> {
    if novelty {
        greedy_select(frames, ranked, t, kernel)
    } else {
        select_by_relevance(frames, ranked, t, kernel)
    }
}

/// Indices of `t` frames spread evenly over `n`: the rounded centre of
/// each of `t` equal bins, `round((i + 0.5) * n / t - 0.5)`.
pub fn uniform_indices(n: usize, t: usize) -> Result<Vec<usize>> {
    if t == 0 || t > n {
        return Err(Error::LengthOutOfRange { t, max: n });
    }
    let mut out: Vec<usize> = Vec::with_capacity(t);
    for i in 0..t {
        // round(a / b) with halves rounded up, in exact integer arithmetic
        let a = (2 * i + 1) * n - t;
        let b = 2 * t;
        let mut idx = (2 * a + b) / (2 * b);
        if let Some(&prev) = out.last() {
            if idx <= prev {
                idx = prev + 1;
            }
        }
        out.push(idx.min(n - 1));
    }
    Ok(out)
}

/// Uniform temporal sampling of `t` frames from an event.
pub fn baseline_uniform(event: &Event, t: usize) -> Result<Summary> {
    uniform_from_frames(&event.event_id, &event.frames, t)
}

/// Uniform sampling over an arbitrary temporally ordered frame slice.
/// Baseline summaries carry no relevance scores.
pub fn uniform_from_frames(event_id: &str, frames: &[FrameRecord], t: usize) -> Result<Summary> {
    let picked: Vec<&FrameRecord> = uniform_indices(frames.len(), t)?.into_iter().map(|i| &frames[i]).collect();
    Ok(Summary::from_frames(event_id, &picked, Vec::new()))
}

/// Share of ground-truth groups represented among the first `t` frames.
pub fn cluster_recall(summary: &Summary, gt: &GroundTruth, t: usize) -> Result<f64> {
    let all = gt.distinct_groups();
    if all.is_empty() {
        return Err(Error::Empty("ground-truth groups"));
    }
    let hit: BTreeSet<i64> = summary
        .selected
        .iter()
        .take(t)
        .filter_map(|id| gt.group_ids.get(id).copied())
        .collect();
    Ok(hit.len() as f64 / all.len() as f64)
}

/// Intermediate results for one event, kept for inspection.
#[derive(Debug, Clone)]
pub struct EventArtifacts {
    pub filtered: FilteredEvent,
    /// Absent when every frame was discarded.
    pub ranked: Option<RankedStage>,
}

#[derive(Debug, Clone)]
pub struct RankedStage {
    pub criteria: [RankedList; 3],
    pub kernel: SimilarityKernel,
    pub fused: RankedList,
    pub trace: SelectionTrace,
    /// Re-ranking of all kept frames; the summary is its prefix.
    pub full_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub frame_id: String,
    pub r: f64,
    pub n: f64,
    pub objective: f64,
}

/// Serialized form of a summary with its selection trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryExport {
    pub event_id: String,
    pub selected: Vec<String>,
    pub presentation_order: Vec<String>,
    pub trace: Vec<TraceRecord>,
}

impl SummaryExport {
    pub fn new(summary: &Summary, trace: &SelectionTrace) -> Self {
        SummaryExport {
            event_id: summary.event_id.clone(),
            selected: summary.selected.clone(),
            presentation_order: summary.presentation_order.clone(),
            trace: trace
                .steps
                .iter()
                .map(|s| TraceRecord {
                    frame_id: s.frame_id.clone(),
                    r: s.r,
                    n: s.n,
                    objective: s.objective,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventReport {
    pub event_id: String,
    pub frames: usize,
    pub kept: usize,
    pub length: usize,
    /// Set when no frame passed the filter.
    pub empty: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sms_at_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionAuc {
    pub saliency: f64,
    pub objects: f64,
    pub faces: f64,
}

impl From<[f64; 3]> for CriterionAuc {
    fn from(a: [f64; 3]) -> Self {
        CriterionAuc {
            saliency: a[0],
            objects: a[1],
            faces: a[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: PipelineConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_criterion_auc: Option<CriterionAuc>,
    pub estimation_events: Vec<String>,
    pub weights: FusionWeights,
    /// Area under the MSMS curve over every annotated event.
    pub fused_auc: Option<f64>,
    /// Same, restricted to annotated events not used for estimation.
    pub held_out_auc: Option<f64>,
    pub uniform_auc: Option<f64>,
    pub msms: Option<MsmsCurve>,
    pub uniform_msms: Option<MsmsCurve>,
    pub per_event: Vec<EventReport>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub summaries: Vec<Summary>,
    pub traces: Vec<SelectionTrace>,
    pub report: EvaluationReport,
    pub artifacts: Vec<EventArtifacts>,
    /// Per annotated, non-empty event: the re-ranked and uniform curves.
    pub curves: Vec<(SmsCurve, SmsCurve)>,
}

impl PipelineOutput {
    pub fn exports(&self) -> Vec<SummaryExport> {
        self.summaries
            .iter()
            .zip(&self.traces)
            .map(|(s, t)| SummaryExport::new(s, t))
            .collect()
    }
}

struct Prepared<'a> {
    event: &'a Event,
    filtered: FilteredEvent,
    stage: Option<([RankedList; 3], SimilarityKernel)>,
}

fn prepare(event: &Event, threshold: f64) -> Result<Prepared<'_>> {
    let filtered = filter_informative(event, threshold);
    let stage = if filtered.is_empty() {
        None
    } else {
        Some((rank_all(&filtered)?, fit_kernel(&filtered)))
    };
    Ok(Prepared { event, filtered, stage })
}

/// Resolves which events estimate the fusion weights.
pub fn estimation_subset(dataset: &Dataset, which: &EstimationEvents, seed: u64) -> Result<Vec<String>> {
    let annotated: Vec<String> = dataset
        .events
        .iter()
        .filter(|e| e.ground_truth.is_some())
        .map(|e| e.event_id.clone())
        .collect();
    let ids = match which {
        EstimationEvents::AllAnnotated => annotated,
        EstimationEvents::Listed(ids) => {
            for id in ids {
                let e = dataset.event(id).ok_or_else(|| Error::UnknownEvent(id.clone()))?;
                e.ground_truth()?;
            }
            ids.clone()
        }
        EstimationEvents::RandomSplit(fraction) => {
            let mut shuffled = annotated;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let k = ((fraction * shuffled.len() as f64 - 1e-9).ceil() as usize).clamp(1, shuffled.len().max(1));
            shuffled.truncate(k);
            let order: BTreeMap<&str, usize> = dataset
                .events
                .iter()
                .enumerate()
                .map(|(i, e)| (e.event_id.as_str(), i))
                .collect();
            shuffled.sort_by_key(|id| order[id.as_str()]);
            shuffled
        }
    };
    if ids.is_empty() {
        return Err(Error::Empty("weight estimation needs at least one annotated event"));
    }
    Ok(ids)
}

/// Stand-alone MSMS AUC of each criterion over `events`.
fn criterion_aucs(prepared: &[Prepared<'_>], events: &[String], cfg: &PipelineConfig) -> Result<[f64; 3]> {
    let chosen: BTreeSet<&str> = events.iter().map(String::as_str).collect();
    let usable: Vec<&Prepared<'_>> = prepared
        .iter()
        .filter(|p| chosen.contains(p.event.event_id.as_str()) && p.stage.is_some())
        .collect();
    if usable.is_empty() {
        return Err(Error::Empty("no estimation event kept any frame"));
    }
    let mut out = [0.0; 3];
    for c in Criterion::ALL {
        let curves = usable
            .par_iter()
            .map(|p| {
                let (lists, kernel) = p.stage.as_ref().expect("filtered above");
                let list = &lists[c.index()];
                let (order, _) = rerank(&p.filtered, list, list.len(), kernel, cfg.novelty)?;
                let validation = p.event.gt_summary_frames()?;
                sms_curve(&p.filtered, &order.selected, &validation, kernel)
            })
            .collect::<Result<Vec<_>>>()?;
        out[c.index()] = msms_on_grid(&curves, cfg.grid_size)?.auc;
    }
    Ok(out)
}

struct EventResult {
    summary: Summary,
    trace: SelectionTrace,
    artifacts: EventArtifacts,
    report: EventReport,
    curves: Option<(SmsCurve, SmsCurve)>,
}

fn run_event(p: &Prepared<'_>, weights: &FusionWeights, cfg: &PipelineConfig) -> Result<EventResult> {
    let event = p.event;
    let m = p.filtered.len();
    let t = cfg.length.resolve(m);
    let mut report = EventReport {
        event_id: event.event_id.clone(),
        frames: event.len(),
        kept: m,
        length: t,
        empty: m == 0,
        sigma: None,
        sms_at_length: None,
        cluster_recall: None,
        auc: None,
        uniform_auc: None,
    };
    let Some((lists, kernel)) = &p.stage else {
        return Ok(EventResult {
            summary: Summary::empty(&event.event_id),
            trace: SelectionTrace::default(),
            artifacts: EventArtifacts {
                filtered: p.filtered.clone(),
                ranked: None,
            },
            report,
            curves: None,
        });
    };
    report.sigma = Some(kernel.sigma);

    let fused = fuse_relevance(lists, weights)?;
    let (summary, trace) = rerank(&p.filtered, &fused, t, kernel, cfg.novelty)?;
    let (full, _) = rerank(&p.filtered, &fused, m, kernel, cfg.novelty)?;

    let mut curves = None;
    if let Some(gt) = &event.ground_truth {
        let validation = event.gt_summary_frames()?;
        if !validation.is_empty() {
            let curve = sms_curve(&p.filtered, &full.selected, &validation, kernel)?;
            let uniform = uniform_sms_curve(&p.filtered, &validation, kernel)?;
            let chosen: Vec<&FrameRecord> = summary
                .selected
                .iter()
                .map(|id| p.filtered.kept_frame(id).expect("selected from kept frames"))
                .collect();
            report.sms_at_length = Some(sms(&validation, &chosen, kernel)?);
            report.auc = Some(msms_on_grid(std::slice::from_ref(&curve), cfg.grid_size)?.auc);
            report.uniform_auc = Some(msms_on_grid(std::slice::from_ref(&uniform), cfg.grid_size)?.auc);
            curves = Some((curve, uniform));
        }
        if !gt.group_ids.is_empty() {
            report.cluster_recall = Some(cluster_recall(&summary, gt, t)?);
        }
    }

    Ok(EventResult {
        artifacts: EventArtifacts {
            filtered: p.filtered.clone(),
            ranked: Some(RankedStage {
                criteria: lists.clone(),
                kernel: *kernel,
                fused,
                trace: trace.clone(),
                full_order: full.selected,
            }),
        },
        summary,
        trace,
        report,
        curves,
    })
}

pub fn run_pipeline(dataset: &Dataset, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let prepared = dataset
        .events
        .par_iter()
        .map(|e| prepare(e, cfg.informativeness_threshold))
        .collect::<Result<Vec<_>>>()?;

    let (weights, per_criterion_auc, estimation_events) = match &cfg.weights {
        WeightMode::Fixed(w) => (*w, None, Vec::new()),
        WeightMode::Estimate(which) => {
            let events = estimation_subset(dataset, which, cfg.random_seed)?;
            let aucs = criterion_aucs(&prepared, &events, cfg)?;
            (estimate_weights(aucs)?, Some(CriterionAuc::from(aucs)), events)
        }
    };

    let results = prepared
        .par_iter()
        .map(|p| run_event(p, &weights, cfg))
        .collect::<Result<Vec<_>>>()?;

    let estimation: BTreeSet<&str> = estimation_events.iter().map(String::as_str).collect();
    let mut fused_curves = Vec::new();
    let mut held_out = Vec::new();
    let mut uniform_curves = Vec::new();
    for r in &results {
        if let Some((c, u)) = &r.curves {
            fused_curves.push(c.clone());
            uniform_curves.push(u.clone());
            if !estimation.contains(r.summary.event_id.as_str()) {
                held_out.push(c.clone());
            }
        }
    }
    let curve_or_none = |curves: &[SmsCurve]| -> Result<Option<MsmsCurve>> {
        if curves.is_empty() {
            Ok(None)
        } else {
            msms_on_grid(curves, cfg.grid_size).map(Some)
        }
    };
    let msms_curve = curve_or_none(&fused_curves)?;
    let uniform_msms = curve_or_none(&uniform_curves)?;
    let held_out_auc = curve_or_none(&held_out)?.map(|c| c.auc);

    let mut summaries = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    let mut artifacts = Vec::with_capacity(results.len());
    let mut per_event = Vec::with_capacity(results.len());
    let mut curves = Vec::new();
    for r in results {
        summaries.push(r.summary);
        traces.push(r.trace);
        artifacts.push(r.artifacts);
        per_event.push(r.report);
        curves.extend(r.curves);
    }

    Ok(PipelineOutput {
        summaries,
        traces,
        report: EvaluationReport {
            config: cfg.clone(),
            per_criterion_auc,
            estimation_events,
            weights,
            fused_auc: msms_curve.as_ref().map(|c| c.auc),
            held_out_auc,
            uniform_auc: uniform_msms.as_ref().map(|c| c.auc),
            msms: msms_curve,
            uniform_msms,
            per_event,
        },
        artifacts,
        curves,
    })
}

/// Weight estimation on its own, as exposed by the `weights` command.
pub fn estimate_fusion_weights(
    dataset: &Dataset,
    cfg: &PipelineConfig,
    which: &EstimationEvents,
) -> Result<(FusionWeights, CriterionAuc)> {
    cfg.validate()?;
    let events = estimation_subset(dataset, which, cfg.random_seed)?;
    let chosen: BTreeSet<&str> = events.iter().map(String::as_str).collect();
    let prepared = dataset
        .events
        .par_iter()
        .filter(|e| chosen.contains(e.event_id.as_str()))
        .map(|e| prepare(e, cfg.informativeness_threshold))
        .collect::<Result<Vec<_>>>()?;
    let aucs = criterion_aucs(&prepared, &events, cfg)?;
    Ok((estimate_weights(aucs)?, CriterionAuc::from(aucs)))
}

/// Area under a single curve on the configured grid.
pub fn curve_auc(curve: &SmsCurve, grid_size: usize) -> Result<f64> {
    let grid = crate::msms::fraction_grid(grid_size);
    auc(&grid, &crate::msms::interpolate_curve(curve, &grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_full_length_takes_all() {
        assert_eq!(uniform_indices(7, 7).unwrap(), (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn uniform_two_of_ten() {
        assert_eq!(uniform_indices(10, 2).unwrap(), vec![2, 7]);
    }

    #[test]
    fn uniform_single_is_middle() {
        assert_eq!(uniform_indices(10, 1).unwrap(), vec![5]);
        assert_eq!(uniform_indices(9, 1).unwrap(), vec![4]);
    }

    #[test]
    fn uniform_out_of_range() {
        assert!(uniform_indices(3, 0).is_err());
        assert!(uniform_indices(3, 4).is_err());
    }

    #[test]
    fn uniform_is_sorted_and_unique() {
        for n in 1..40 {
            for t in 1..=n {
                let idx = uniform_indices(n, t).unwrap();
                assert_eq!(idx.len(), t);
                assert!(idx.windows(2).all(|w| w[0] < w[1]), "n={n} t={t} {idx:?}");
                assert!(*idx.last().unwrap() < n);
            }
        }
    }

    #[test]
    fn length_resolution() {
        assert_eq!(SummaryLength::Fraction(0.7).resolve(10), 7);
        assert_eq!(SummaryLength::Fraction(0.1).resolve(10), 1);
        assert_eq!(SummaryLength::Fraction(0.01).resolve(10), 1);
        assert_eq!(SummaryLength::Fraction(0.25).resolve(10), 3);
        assert_eq!(SummaryLength::Fraction(1.0).resolve(10), 10);
        assert_eq!(SummaryLength::Fixed(20).resolve(10), 10);
        assert_eq!(SummaryLength::Fixed(5).resolve(0), 0);
    }

    fn gt(groups: &[(&str, i64)]) -> GroundTruth {
        GroundTruth {
            informative_labels: groups.iter().map(|(id, _)| (id.to_string(), true)).collect(),
            group_ids: groups.iter().map(|(id, g)| (id.to_string(), *g)).collect(),
            summary_ids: vec![],
        }
    }

    fn summary(ids: &[&str]) -> Summary {
        Summary {
            event_id: "e".into(),
            selected: ids.iter().map(|s| s.to_string()).collect(),
            scores: vec![],
            presentation_order: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn cluster_recall_cases() {
        let g = gt(&[("a", 0), ("b", 0), ("c", 1), ("d", 2), ("e", 3)]);
        assert_eq!(cluster_recall(&summary(&["a", "c", "d", "e"]), &g, 4).unwrap(), 1.0);
        assert_eq!(cluster_recall(&summary(&["a", "b"]), &g, 2).unwrap(), 0.25);
        assert_eq!(cluster_recall(&summary(&["a", "c", "d"]), &g, 1).unwrap(), 0.25);
        assert!(cluster_recall(&summary(&["a"]), &gt(&[]), 1).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.length = SummaryLength::Fraction(0.0);
        assert!(cfg.validate().is_err());
        cfg.length = SummaryLength::Fixed(0);
        assert!(cfg.validate().is_err());
        cfg = PipelineConfig {
            informativeness_threshold: 1.5,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
