//! Run configuration in TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{adapter_defaults, AdapterConfig, BackendName, LOW_CERTAINTY_VARIANCE};
use crate::chain::{ChainConfig, Schedule, DEFAULT_MAX_CANDIDATES};
use crate::ensemble::EnsembleStrategy;
use crate::geometry::ImageExtent;
use crate::metrics::{EvalResolution, EvalSettings, DEFAULT_THRESHOLDS};

use super::{read_text, IoError, Result};

fn default_max_candidates() -> usize {
    DEFAULT_MAX_CANDIDATES
}

fn default_low_certainty_variance() -> f64 {
    LOW_CERTAINTY_VARIANCE
}

/// One tracker: which backend feeds it and how it chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerConfig {
    pub backend: BackendName,
    /// Provider directory; may be overridden on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<PathBuf>,
    #[serde(default = "default_max_candidates")]
    pub max_candidates: usize,
    /// Defaults to the backend's published value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion_threshold: Option<f64>,
    #[serde(default)]
    pub schedule: Schedule,
    /// Defaults to the backend's published value, where one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certainty_threshold: Option<f64>,
    #[serde(default = "default_low_certainty_variance")]
    pub low_certainty_variance: f64,
}

impl TrackerConfig {
    pub fn new(backend: BackendName) -> Self {
        Self {
            backend,
            provider: None,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            occlusion_threshold: None,
            schedule: Schedule::Logarithmic,
            certainty_threshold: None,
            low_certainty_variance: LOW_CERTAINTY_VARIANCE,
        }
    }

    /// Same tracker with every backend default written out.
    pub fn resolved(&self) -> Self {
        let a = self.adapter();
        Self {
            occlusion_threshold: Some(a.occlusion_threshold),
            certainty_threshold: a.certainty_threshold,
            ..self.clone()
        }
    }

    pub fn adapter(&self) -> AdapterConfig {
        let mut a = adapter_defaults(self.backend);
        if let Some(t) = self.occlusion_threshold {
            a.occlusion_threshold = t;
        }
        if let Some(t) = self.certainty_threshold {
            a.certainty_threshold = Some(t);
        }
        a.low_certainty_variance = self.low_certainty_variance;
        a
    }

    pub fn chain(&self) -> ChainConfig {
        ChainConfig::new(self.adapter().occlusion_threshold)
            .with_max_candidates(self.max_candidates)
            .with_schedule(self.schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.adapter();
        a.validate().map_err(|e| IoError::Config(e.to_string()))?;
        if a.adapt_certainty && a.certainty_threshold.is_none() {
            return Err(IoError::Config(format!(
                "backend {} needs an explicit certainty_threshold",
                self.backend
            )));
        }
        self.chain().validate().map_err(|e| IoError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub resolution: EvalResolution,
}

fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
            resolution: EvalResolution::default(),
        }
    }
}

impl EvalConfig {
    pub fn settings(&self, source: ImageExtent) -> Result<EvalSettings> {
        EvalSettings::new(self.thresholds.clone(), self.resolution, source).map_err(|e| IoError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Everything a `track` / `eval` run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tracker_a: TrackerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracker_b: Option<TrackerConfig>,
    #[serde(default = "default_strategy")]
    pub strategy: EnsembleStrategy,
    /// Spacing of the query grid when no ground truth supplies queries.
    #[serde(default = "default_query_step")]
    pub query_step: usize,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

fn default_strategy() -> EnsembleStrategy {
    EnsembleStrategy::AOnly
}

fn default_query_step() -> usize {
    4
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tracker_a: TrackerConfig::new(BackendName::RaftLike),
            tracker_b: None,
            strategy: default_strategy(),
            query_step: default_query_step(),
            eval: EvalConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| IoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_text(path)?).map_err(|e| match e {
            IoError::Config(m) => IoError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// TOML with every default written out.
    pub fn to_toml_string(&self) -> String {
        let mut full = self.clone();
        full.tracker_a = full.tracker_a.resolved();
        full.tracker_b = full.tracker_b.map(|b| b.resolved());
        toml::to_string(&full).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.tracker_a.validate()?;
        if let Some(b) = &self.tracker_b {
            b.validate()?;
        }
        let uses_b = !matches!(self.strategy, EnsembleStrategy::AOnly);
        if uses_b && self.tracker_b.is_none() {
            return Err(IoError::Config(format!("strategy {} needs tracker_b", self.strategy)));
        }
        if self.query_step == 0 {
            return Err(IoError::Config("query_step must be >= 1".into()));
        }
        EvalSettings::new(
            self.eval.thresholds.clone(),
            self.eval.resolution,
            ImageExtent::new(1, 1).expect("non-empty"),
        )
        .map_err(|e| IoError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_written_out() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string();
        assert!(text.contains("occlusion_threshold = 0.02"));
        assert!(text.contains("max_candidates = 5"));
        assert!(text.contains("thresholds = [1.0, 2.0, 4.0, 8.0, 16.0]"));
        assert!(text.contains("resolution = \"256x256\""));
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.tracker_a.chain(), cfg.tracker_a.chain());
    }

    #[test]
    fn matcher_defaults() {
        let dkm = TrackerConfig::new(BackendName::DkmLike);
        assert_eq!(dkm.adapter().certainty_threshold, Some(0.05));
        assert_eq!(dkm.chain().occlusion_threshold, 0.95);
        assert!(dkm.validate().is_ok());
        let roma = TrackerConfig::new(BackendName::RomaLike);
        assert!(roma.validate().is_err());
        let roma = TrackerConfig {
            certainty_threshold: Some(0.3),
            ..roma
        };
        assert!(roma.validate().is_ok());
    }

    #[test]
    fn parse_two_trackers() {
        let cfg = RunConfig::from_toml_str(
            r#"
            strategy = "selective-b-position"
            [tracker_a]
            backend = "raft-like"
            schedule = "chain"
            [tracker_b]
            backend = "dkm-like"
            occlusion_threshold = 0.5
            [eval]
            resolution = "native"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.tracker_a.chain().schedule, Schedule::Consecutive);
        assert_eq!(cfg.tracker_b.unwrap().chain().occlusion_threshold, 0.5);
        assert_eq!(cfg.eval.resolution, EvalResolution::Native);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml_str("strategy = \"b-only\"\n[tracker_a]\nbackend = \"raft-like\"\n").is_err());
        assert!(RunConfig::from_toml_str("[tracker_a]\nbackend = \"flownet\"\n").is_err());
        assert!(RunConfig::from_toml_str("[tracker_a]\nbackend = \"raft-like\"\nmax_candidates = 0\n").is_err());
        assert!(RunConfig::from_toml_str("[tracker_a]\nbackend = \"raft-like\"\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml_str("[tracker_a]\nbackend = \"raft-like\"\n[eval]\nthresholds = []\n").is_err());
    }
}
