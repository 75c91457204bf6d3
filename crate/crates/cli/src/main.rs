//! `egosum` command-line interface.
//!
//! Exit codes: 0 on success, 1 for data errors, 2 for usage errors.

mod config;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use egosum_core::informativeness::{labeled_scores, threshold_grid, write_sweep_csv, DEFAULT_THRESHOLD};
use egosum_core::model::{read_dataset, validate_dataset, write_dataset};
use egosum_core::msms::{write_curves_csv, CurvePoint};
use egosum_core::pipeline::{estimate_fusion_weights, EstimationEvents, PipelineOutput, SummaryLength, WeightMode};
use egosum_core::relevance::RankSource;
use egosum_core::{
    filter_informative, parse_dataset, run_pipeline, synth_dataset, threshold_sweep, Criterion, Dataset,
    FusionWeights, PipelineConfig, SynthParams,
};

use crate::config::FileConfig;

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Parser, Debug)]
#[command(name = "egosum", version, about = "Diversity-aware summaries of egocentric photo streams")]
struct Cli {
    /// key=value configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for per-event processing.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a dataset against every data invariant.
    Validate { dataset: PathBuf },
    /// Apply the informativeness filter and list kept/discarded frames.
    Filter {
        dataset: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the informativeness filter over a threshold sweep.
    Sweep {
        dataset: PathBuf,
        /// Comma-separated, strictly increasing thresholds.
        #[arg(long, conflicts_with = "step")]
        thresholds: Option<String>,
        /// Grid step from 0 to 1.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export per-criterion or fused ranked lists.
    Rank {
        dataset: PathBuf,
        #[arg(long)]
        criterion: String,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate fusion weights from stand-alone criterion performance.
    Weights {
        dataset: PathBuf,
        /// Comma-separated estimation events (default: all annotated).
        #[arg(long)]
        events: Option<String>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build summaries for every event.
    Summarize {
        dataset: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Summaries JSON (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluation report JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// SMS/MSMS curves as long-format CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Run the pipeline and report MSMS evaluation against ground truth.
    Evaluate {
        dataset: PathBuf,
        /// Ground-truth JSONL replacing any embedded annotations.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Report JSON (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long, default_value_t = 10)]
        events: usize,
        /// Frames per event, `N` or `MIN-MAX`.
        #[arg(long, default_value = "40-80")]
        frames: String,
        /// Clusters per event, `N` or `MIN-MAX`.
        #[arg(long, default_value = "4-6")]
        clusters: String,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 0.15)]
        noise: f64,
        #[arg(long, default_value_t = 0.2)]
        noninformative_rate: f64,
        #[arg(long, default_value_t = 0.5)]
        concentration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct PipelineArgs {
    /// Informativeness threshold (default 0.025).
    #[arg(long)]
    threshold: Option<f64>,
    /// Summary length as a fraction of the kept frames.
    #[arg(long, conflicts_with = "length")]
    fraction: Option<f64>,
    /// Summary length in frames.
    #[arg(long)]
    length: Option<usize>,
    /// Truncate the fused ranking without novelty re-ranking.
    #[arg(long)]
    no_novelty: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// `estimate` or a `saliency,objects,faces` triple.
    #[arg(long)]
    weights: Option<String>,
    /// Comma-separated events used to estimate weights.
    #[arg(long, conflicts_with = "estimation_split")]
    estimation_events: Option<String>,
    /// Seeded random share of annotated events used to estimate weights.
    #[arg(long)]
    estimation_split: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

fn parse_weights(s: &str) -> Result<Option<FusionWeights>> {
    if s.trim() == "estimate" {
        return Ok(None);
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("weights `{s}` must be `estimate` or three numbers")))?;
    let [a, b, c] = parts[..] else {
        return Err(usage(format!("weights `{s}` must have three components")));
    };
    FusionWeights::new(a, b, c).map(Some).map_err(|e| usage(e.to_string()))
}

fn build_config(file: &FileConfig, args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(t) = args.threshold.or(file.threshold) {
        cfg.informativeness_threshold = t;
    }
    cfg.length = match (args.fraction, args.length) {
        (Some(f), _) => SummaryLength::Fraction(f),
        (None, Some(n)) => SummaryLength::Fixed(n),
        (None, None) => match (file.fraction, file.length) {
            (Some(f), _) => SummaryLength::Fraction(f),
            (None, Some(n)) => SummaryLength::Fixed(n),
            (None, None) => cfg.length,
        },
    };
    cfg.novelty = if args.no_novelty { false } else { file.novelty.unwrap_or(true) };
    if let Some(g) = args.grid_size.or(file.grid_size) {
        cfg.grid_size = g;
    }
    if let Some(s) = args.seed.or(file.seed) {
        cfg.random_seed = s;
    }
    let estimation = if let Some(list) = args.estimation_events.as_ref() {
        EstimationEvents::Listed(split_list(list))
    } else if let Some(f) = args.estimation_split {
        EstimationEvents::RandomSplit(f)
    } else if let Some(list) = file.estimation_events.as_ref() {
        EstimationEvents::Listed(split_list(list))
    } else if let Some(f) = file.estimation_split {
        EstimationEvents::RandomSplit(f)
    } else {
        EstimationEvents::AllAnnotated
    };
    cfg.weights = match args.weights.as_deref().or(file.weights.as_deref()) {
        Some(w) => match parse_weights(w)? {
            Some(fixed) => WeightMode::Fixed(fixed),
            None => WeightMode::Estimate(estimation),
        },
        None => WeightMode::Estimate(estimation),
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn parse_range(s: &str, what: &str) -> Result<(usize, usize)> {
    let bad = || usage(format!("{what} `{s}` must be N or MIN-MAX"));
    match s.split_once('-') {
        Some((a, b)) => Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn load(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_dataset(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_curves(output: &PipelineOutput, path: &Path) -> Result<()> {
    let mut rows: Vec<(String, Vec<CurvePoint>)> = Vec::new();
    for (fused, uniform) in &output.curves {
        rows.push((fused.event_id.clone(), fused.points.clone()));
        rows.push((format!("{}/uniform", uniform.event_id), uniform.points.clone()));
    }
    let grid_points = |c: &egosum_core::MsmsCurve| {
        c.grid
            .iter()
            .zip(&c.values)
            .map(|(&fraction, &value)| CurvePoint { fraction, value })
            .collect::<Vec<_>>()
    };
    if let Some(c) = &output.report.msms {
        rows.push(("msms".into(), grid_points(c)));
    }
    if let Some(c) = &output.report.uniform_msms {
        rows.push(("msms/uniform".into(), grid_points(c)));
    }
    let mut buf = Vec::new();
    write_curves_csv(&rows, &mut buf)?;
    emit(Some(path), &buf)
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }

    match cli.command {
        Command::Validate { dataset } => {
            let f = File::open(&dataset).with_context(|| format!("opening {}", dataset.display()))?;
            let d = read_dataset(BufReader::new(f))?;
            let violations = validate_dataset(&d);
            if violations.is_empty() {
                println!("ok: {} events, {} frames, dimension {}", d.events.len(), d.frame_count(), d.feature_dim);
                Ok(())
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Err(anyhow!("{} violation(s)", violations.len()))
            }
        }
        Command::Filter { dataset, threshold, out } => {
            let d = load(&dataset)?;
            let threshold = threshold.or(file.threshold).unwrap_or(DEFAULT_THRESHOLD);
            if !(0.0..=1.0).contains(&threshold) {
                return Err(usage(format!("threshold {threshold} outside [0, 1]")));
            }
            let mut buf = Vec::new();
            writeln!(buf, "event_id,frame_id,informativeness,kept")?;
            for event in &d.events {
                let fe = filter_informative(event, threshold);
                if fe.all_discarded() {
                    eprintln!("warning: every frame of `{}` was discarded", event.event_id);
                }
                for f in &event.frames {
                    let kept = f.informativeness >= threshold;
                    writeln!(buf, "{},{},{},{}", event.event_id, f.frame_id, f.informativeness, kept)?;
                }
            }
            emit(out.as_deref(), &buf)
        }
        Command::Sweep { dataset, thresholds, step, out } => {
            let d = load(&dataset)?;
            let grid = match thresholds {
                Some(list) => split_list(&list)
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| usage(format!("bad threshold `{t}`"))))
                    .collect::<Result<Vec<_>>>()?,
                None => {
                    let step = step.unwrap_or(0.025);
                    if !(step > 0.0 && step <= 1.0) {
                        return Err(usage(format!("step {step} outside (0, 1]")));
                    }
                    threshold_grid(step)
                }
            };
            let (labels, scores) = labeled_scores(&d);
            let rows = threshold_sweep(&labels, &scores, &grid)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Rank { dataset, criterion, mut pipeline, out } => {
            let source = match criterion.as_str() {
                "fused" => RankSource::Fused,
                other => RankSource::Single(other.parse::<Criterion>().map_err(|e| usage(e.to_string()))?),
            };
            if matches!(source, RankSource::Single(_)) && pipeline.weights.is_none() && file.weights.is_none() {
                // fusion weights are irrelevant to a single criterion
                pipeline.weights = Some("1,0,0".into());
            }
            let cfg = build_config(&file, &pipeline)?;
            let d = load(&dataset)?;
            let output = run_pipeline(&d, &cfg)?;
            let mut buf = Vec::new();
            writeln!(buf, "frame_id,criterion,raw_score,rank,normalized")?;
            for stage in output.artifacts.iter().filter_map(|a| a.ranked.as_ref()) {
                let list = match source {
                    RankSource::Fused => &stage.fused,
                    RankSource::Single(c) => &stage.criteria[c.index()],
                };
                list.write_csv(&mut buf, false)?;
            }
            emit(out.as_deref(), &buf)
        }
        Command::Weights { dataset, events, mut pipeline, out } => {
            if events.is_some() {
                pipeline.estimation_events = events;
            }
            let cfg = build_config(&file, &pipeline)?;
            let WeightMode::Estimate(which) = &cfg.weights else {
                return Err(usage("`weights` estimates weights; do not pass fixed weights"));
            };
            let d = load(&dataset)?;
            let (weights, aucs) = estimate_fusion_weights(&d, &cfg, which)?;
            let value = serde_json::json!({ "per_criterion_auc": aucs, "weights": weights, "events": which });
            emit(out.as_deref(), &to_json(&value)?)
        }
        Command::Summarize { dataset, pipeline, out, report, curves } => {
            let cfg = build_config(&file, &pipeline)?;
            let d = load(&dataset)?;
            let output = run_pipeline(&d, &cfg)?;
            for r in output.report.per_event.iter().filter(|r| r.empty) {
                eprintln!("warning: `{}` kept no frames; its summary is empty", r.event_id);
            }
            emit(out.as_deref(), &to_json(&output.exports())?)?;
            if let Some(p) = report {
                emit(Some(&p), &to_json(&output.report)?)?;
            }
            if let Some(p) = curves {
                write_curves(&output, &p)?;
            }
            Ok(())
        }
        Command::Evaluate { dataset, gt, pipeline, out, curves } => {
            let cfg = build_config(&file, &pipeline)?;
            let mut d = load(&dataset)?;
            if let Some(gt) = gt {
                let f = File::open(&gt).with_context(|| format!("opening {}", gt.display()))?;
                d.attach_ground_truth(BufReader::new(f))?;
                let violations = validate_dataset(&d);
                if let Some(v) = violations.first() {
                    return Err(anyhow!("ground truth invalid: {v}"));
                }
            }
            if d.events.iter().all(|e| e.ground_truth.is_none()) {
                return Err(anyhow!("no event carries ground truth"));
            }
            let output = run_pipeline(&d, &cfg)?;
            emit(out.as_deref(), &to_json(&output.report)?)?;
            if let Some(p) = curves {
                write_curves(&output, &p)?;
            }
            Ok(())
        }
        Command::Synth {
            events,
            frames,
            clusters,
            dim,
            noise,
            noninformative_rate,
            concentration,
            seed,
            out,
        } => {
            let params = SynthParams {
                events,
                frames_per_event: parse_range(&frames, "frames")?,
                clusters_per_event: parse_range(&clusters, "clusters")?,
                feature_dim: dim,
                noise_scale: noise,
                noninformative_rate,
                relevance_concentration: concentration,
                seed,
            };
            params.validate().map_err(|e| usage(e.to_string()))?;
            let d = synth_dataset(&params)?;
            let mut buf = Vec::new();
            write_dataset(&d, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
