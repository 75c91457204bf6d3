//! `key = value` configuration files. Flags given on the command line
//! override anything read here.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub threshold: Option<f64>,
    pub fraction: Option<f64>,
    pub length: Option<usize>,
    pub weights: Option<String>,
    pub novelty: Option<bool>,
    pub grid_size: Option<usize>,
    pub seed: Option<u64>,
    pub estimation_events: Option<String>,
    pub estimation_split: Option<f64>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = FileConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected key=value", idx + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            let ctx = || format!("config line {}: bad value for `{key}`", idx + 1);
            match key {
                "threshold" => cfg.threshold = Some(value.parse().with_context(ctx)?),
                "fraction" => cfg.fraction = Some(value.parse().with_context(ctx)?),
                "length" => cfg.length = Some(value.parse().with_context(ctx)?),
                "weights" => cfg.weights = Some(value.to_string()),
                "novelty" => cfg.novelty = Some(value.parse().with_context(ctx)?),
                "grid_size" => cfg.grid_size = Some(value.parse().with_context(ctx)?),
                "seed" => cfg.seed = Some(value.parse().with_context(ctx)?),
                "estimation_events" => cfg.estimation_events = Some(value.to_string()),
                "estimation_split" => cfg.estimation_split = Some(value.parse().with_context(ctx)?),
                "threads" => cfg.threads = Some(value.parse().with_context(ctx)?),
                other => bail!("config line {}: unknown key `{other}`", idx + 1),
            }
        }
        Ok(cfg)
    }
}
