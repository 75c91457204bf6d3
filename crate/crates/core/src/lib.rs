//! Diversity-aware summarization of event-segmented egocentric photo
//! streams.
//!
//! Frames carrying precomputed features and detector outputs are filtered
//! by informativeness ([`informativeness`]), ranked by three relevance
//! criteria that are rank-normalized and fused ([`relevance`]), and
//! re-ranked greedily by relevance plus novelty ([`diversity`]). Rankings
//! are scored against reference summaries with the soft SMS/MSMS metric,
//! whose areas also set the fusion weights ([`msms`]). [`pipeline`] ties
//! the stages together.

pub mod diversity;
pub mod error;
pub mod informativeness;
pub mod model;
pub mod msms;
pub mod pipeline;
pub mod relevance;
pub mod synth;

pub use diversity::{fit_kernel, greedy_select, novelty, similarity, SelectionTrace, SimilarityKernel};
pub use error::{Error, Result};
pub use informativeness::{classification_metrics, filter_informative, threshold_sweep, ClassificationMetrics, FilteredEvent};
pub use model::{parse_dataset, read_dataset, validate_dataset, write_dataset, Dataset, Event, FrameRecord, GroundTruth, Summary};
pub use msms::{auc, estimate_weights, interpolate_curve, msms, sms, sms_curve, MsmsCurve, SmsCurve};
pub use pipeline::{baseline_uniform, cluster_recall, run_pipeline, PipelineConfig, PipelineOutput};
pub use relevance::{fuse_relevance, rank_normalize, Criterion, FusionWeights, RankedList};
pub use synth::{synth_dataset, SynthParams};
