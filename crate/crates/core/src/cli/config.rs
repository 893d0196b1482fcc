use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::Aggregation;
use crate::metrics::MetricConfig;
use crate::scorer::{ScorerEndpoint, SCORER_CACHE_ENV};

/// Contents of a `--config` TOML file; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub num_samples: Option<usize>,
    pub nucleus_p: Option<f64>,
    pub repetition_threshold: Option<usize>,
    pub context_window: Option<usize>,
    pub include_self: Option<bool>,
    pub include_ambiguous: Option<bool>,
    pub utility: Option<String>,
    pub aggregation: Option<Aggregation>,
    pub seed: Option<u64>,
    pub scorer_cache: Option<PathBuf>,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub scorers: Vec<ScorerEndpoint>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }
}

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub num_samples: Option<usize>,
    pub nucleus_p: Option<f64>,
    pub repetition_threshold: Option<usize>,
    pub context_window: Option<usize>,
    pub include_self: Option<bool>,
    pub include_ambiguous: Option<bool>,
    pub utility: Option<String>,
    pub aggregation: Option<Aggregation>,
    pub seed: Option<u64>,
    pub scorer_cache: Option<PathBuf>,
}

/// Effective settings: flag, then config file, then built-in default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub num_samples: usize,
    pub nucleus_p: f64,
    pub repetition_threshold: usize,
    pub context_window: usize,
    pub include_self: bool,
    pub include_ambiguous: bool,
    pub utility: String,
    pub aggregation: Aggregation,
    pub seed: u64,
    /// Flag, then `DISCOQAD_SCORER_CACHE`, then config file.
    pub scorer_cache: Option<PathBuf>,
    pub metrics: MetricConfig,
    pub scorers: Vec<ScorerEndpoint>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            num_samples: 50,
            nucleus_p: 0.9,
            repetition_threshold: 3,
            context_window: 5,
            include_self: false,
            include_ambiguous: true,
            utility: "bleu".to_string(),
            aggregation: Aggregation::Pooled,
            seed: 0,
            scorer_cache: None,
            metrics: MetricConfig::default(),
            scorers: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, flags: Overrides) -> Result<Self> {
        let d = RunConfig::default();
        let env_cache = std::env::var_os(SCORER_CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let cfg = RunConfig {
            num_samples: flags.num_samples.or(file.num_samples).unwrap_or(d.num_samples),
            nucleus_p: flags.nucleus_p.or(file.nucleus_p).unwrap_or(d.nucleus_p),
            repetition_threshold: flags
                .repetition_threshold
                .or(file.repetition_threshold)
                .unwrap_or(d.repetition_threshold),
            context_window: flags.context_window.or(file.context_window).unwrap_or(d.context_window),
            include_self: flags.include_self.or(file.include_self).unwrap_or(d.include_self),
            include_ambiguous: flags.include_ambiguous.or(file.include_ambiguous).unwrap_or(d.include_ambiguous),
            utility: flags.utility.or(file.utility).unwrap_or(d.utility),
            aggregation: flags.aggregation.or(file.aggregation).unwrap_or(d.aggregation),
            seed: flags.seed.or(file.seed).unwrap_or(d.seed),
            scorer_cache: flags.scorer_cache.or(env_cache).or(file.scorer_cache),
            metrics: file.metrics,
            scorers: file.scorers.into_iter().map(ScorerEndpoint::with_env_overrides).collect(),
        };
        cfg.metrics.validate()?;
        for s in &cfg.scorers {
            s.validate()?;
        }
        if cfg.repetition_threshold == 0 {
            return Err(Error::InvalidArgument("repetition_threshold must be >= 1".into()));
        }
        Ok(cfg)
    }
}
