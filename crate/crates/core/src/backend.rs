//! The flow-provider seam and the adaptation of matcher-style outputs.
//!
//! A provider answers "give me everything you know about the flow from frame
//! `i` to frame `j`" with a [`FlowBundle`]. Consecutive-flow estimators report
//! variance and occlusion directly. Wide-baseline matchers only report a
//! per-pixel certainty; [`MatcherAdapter`] turns that into the variance and
//! occlusion the chain engine consumes.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{FieldRole, FlowBundle, FlowField, GeometryError, ImageExtent, ScalarField};

/// Occlusion threshold for consecutive-flow (RAFT-style) backends.
pub const RAFT_OCCLUSION_THRESHOLD: f64 = 0.02;
/// Occlusion threshold for wide-baseline matchers (DKM/RoMa-style).
pub const MATCHER_OCCLUSION_THRESHOLD: f64 = 0.95;
/// Variance assigned to matcher pixels at or below the certainty threshold.
pub const LOW_CERTAINTY_VARIANCE: f64 = 1000.0;
/// Published certainty cutoff of DKM-style matchers.
pub const DKM_CERTAINTY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("no flow available for frame pair ({source_frame}, {target_frame})")]
    MissingPair { source_frame: usize, target_frame: usize },
    #[error("provider data has extent {actual}, sequence extent is {expected}")]
    ExtentMismatch { expected: ImageExtent, actual: ImageExtent },
    #[error("invalid frame request ({source_frame}, {target_frame}) for a {frames}-frame sequence")]
    InvalidRequest {
        source_frame: usize,
        target_frame: usize,
        frames: usize,
    },
    #[error("expected a {expected} field, got {actual}")]
    RoleMismatch { expected: FieldRole, actual: FieldRole },
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("invalid adapter config: {0}")]
    InvalidConfig(String),
    #[error("matcher adaptation needs a certainty threshold; none was configured")]
    MissingCertaintyThreshold,
    #[error("provider data for ({source_frame}, {target_frame}) is missing the {plane} plane")]
    MissingPlane {
        source_frame: usize,
        target_frame: usize,
        plane: &'static str,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("provider i/o: {0}")]
    Io(String),
}

pub type Result<T, E = BackendError> = std::result::Result<T, E>;

/// Which adaptation path a provider's raw output needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    /// Reports flow, variance and occlusion directly.
    ConsecutiveFlow,
    /// Reports flow and certainty; variance and occlusion are derived.
    WideBaselineMatcher,
    /// Ground truth by construction.
    Oracle,
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::ConsecutiveFlow => "consecutive-flow",
            ProviderKind::WideBaselineMatcher => "wide-baseline-matcher",
            ProviderKind::Oracle => "oracle",
        })
    }
}

impl FromStr for ProviderKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consecutive-flow" => Ok(ProviderKind::ConsecutiveFlow),
            "wide-baseline-matcher" => Ok(ProviderKind::WideBaselineMatcher),
            "oracle" => Ok(ProviderKind::Oracle),
            other => Err(BackendError::UnknownBackend(other.to_string())),
        }
    }
}

/// Named backend families with published defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BackendName {
    #[serde(rename = "raft-like")]
    RaftLike,
    #[serde(rename = "dkm-like")]
    DkmLike,
    #[serde(rename = "roma-like")]
    RomaLike,
}

impl BackendName {
    pub fn kind(&self) -> ProviderKind {
        match self {
            BackendName::RaftLike => ProviderKind::ConsecutiveFlow,
            BackendName::DkmLike | BackendName::RomaLike => ProviderKind::WideBaselineMatcher,
        }
    }
}

impl fmt::Display for BackendName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendName::RaftLike => "raft-like",
            BackendName::DkmLike => "dkm-like",
            BackendName::RomaLike => "roma-like",
        })
    }
}

impl FromStr for BackendName {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raft-like" => Ok(BackendName::RaftLike),
            "dkm-like" => Ok(BackendName::DkmLike),
            "roma-like" => Ok(BackendName::RomaLike),
            other => Err(BackendError::UnknownBackend(other.to_string())),
        }
    }
}

/// Thresholds and constants for turning certainty into variance/occlusion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdapterConfig {
    /// Certainty above which a match counts as reliable. `None` when the
    /// backend has no published value and the caller has not supplied one.
    pub certainty_threshold: Option<f64>,
    pub low_certainty_variance: f64,
    pub occlusion_threshold: f64,
    /// Whether the backend's raw output is certainty that needs adapting.
    pub adapt_certainty: bool,
}

impl AdapterConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.certainty_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(BackendError::InvalidConfig(format!(
                    "certainty threshold {t} outside [0, 1]"
                )));
            }
        }
        if !(self.low_certainty_variance > 0.0) || !self.low_certainty_variance.is_finite() {
            return Err(BackendError::InvalidConfig(format!(
                "low-certainty variance {} must be positive",
                self.low_certainty_variance
            )));
        }
        if !(0.0..=1.0).contains(&self.occlusion_threshold) {
            return Err(BackendError::InvalidConfig(format!(
                "occlusion threshold {} outside [0, 1]",
                self.occlusion_threshold
            )));
        }
        Ok(())
    }

    pub fn with_certainty_threshold(mut self, threshold: f64) -> Self {
        self.certainty_threshold = Some(threshold);
        self
    }
}

/// Defaults per backend family.
///
/// `roma-like` comes back without a certainty threshold: callers must supply
/// one before adapting.
pub fn default_adapter_config(kind: &str) -> Result<AdapterConfig> {
    Ok(adapter_defaults(kind.parse()?))
}

pub fn adapter_defaults(name: BackendName) -> AdapterConfig {
    match name {
        BackendName::RaftLike => AdapterConfig {
            certainty_threshold: None,
            low_certainty_variance: LOW_CERTAINTY_VARIANCE,
            occlusion_threshold: RAFT_OCCLUSION_THRESHOLD,
            adapt_certainty: false,
        },
        BackendName::DkmLike => AdapterConfig {
            certainty_threshold: Some(DKM_CERTAINTY_THRESHOLD),
            low_certainty_variance: LOW_CERTAINTY_VARIANCE,
            occlusion_threshold: MATCHER_OCCLUSION_THRESHOLD,
            adapt_certainty: true,
        },
        BackendName::RomaLike => AdapterConfig {
            certainty_threshold: None,
            low_certainty_variance: LOW_CERTAINTY_VARIANCE,
            occlusion_threshold: MATCHER_OCCLUSION_THRESHOLD,
            adapt_certainty: true,
        },
    }
}

fn expect_certainty(field: &ScalarField) -> Result<()> {
    if field.role() != FieldRole::Certainty {
        return Err(BackendError::RoleMismatch {
            expected: FieldRole::Certainty,
            actual: field.role(),
        });
    }
    Ok(())
}

/// `o = 1 - ρ` pointwise.
pub fn certainty_to_occlusion(certainty: &ScalarField) -> Result<ScalarField> {
    expect_certainty(certainty)?;
    let values = certainty.values().iter().map(|&rho| 1.0 - rho).collect();
    Ok(ScalarField::new(certainty.extent(), FieldRole::Occlusion, values)?)
}

/// `σ = 0` where `ρ > θ_ρ`, otherwise the configured low-certainty variance.
pub fn certainty_to_variance(certainty: &ScalarField, cfg: &AdapterConfig) -> Result<ScalarField> {
    expect_certainty(certainty)?;
    cfg.validate()?;
    let threshold = cfg.certainty_threshold.ok_or(BackendError::MissingCertaintyThreshold)?;
    let low = cfg.low_certainty_variance as f32;
    let values = certainty
        .values()
        .iter()
        .map(|&rho| if rho as f64 > threshold { 0.0 } else { low })
        .collect();
    Ok(ScalarField::new(certainty.extent(), FieldRole::Variance, values)?)
}

/// A frame pair `(i, j)` with `1 <= i < j`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowRequest {
    pub source_frame: usize,
    pub target_frame: usize,
}

impl FlowRequest {
    pub fn new(source_frame: usize, target_frame: usize) -> Self {
        Self {
            source_frame,
            target_frame,
        }
    }

    /// Checks `1 <= i < j <= frames`.
    pub fn validate(&self, frames: usize) -> Result<()> {
        if self.source_frame < 1 || self.source_frame >= self.target_frame || self.target_frame > frames {
            return Err(BackendError::InvalidRequest {
                source_frame: self.source_frame,
                target_frame: self.target_frame,
                frames,
            });
        }
        Ok(())
    }
}

/// Source of per-pair flow bundles.
///
/// Implementations must be deterministic: identical requests return
/// bit-identical bundles. `provide` may be called concurrently.
pub trait FlowProvider: Sync {
    fn extent(&self) -> ImageExtent;

    /// Number of frames in the sequence.
    fn frames(&self) -> usize;

    fn kind(&self) -> ProviderKind;

    fn provide(&self, request: FlowRequest) -> Result<FlowBundle>;
}

impl<P: FlowProvider + ?Sized> FlowProvider for &P {
    fn extent(&self) -> ImageExtent {
        (**self).extent()
    }
    fn frames(&self) -> usize {
        (**self).frames()
    }
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
    fn provide(&self, request: FlowRequest) -> Result<FlowBundle> {
        (**self).provide(request)
    }
}

impl<P: FlowProvider + ?Sized + Send> FlowProvider for Box<P> {
    fn extent(&self) -> ImageExtent {
        (**self).extent()
    }
    fn frames(&self) -> usize {
        (**self).frames()
    }
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
    fn provide(&self, request: FlowRequest) -> Result<FlowBundle> {
        (**self).provide(request)
    }
}

/// Raw output of a dense matcher for one frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub flow: FlowField,
    pub certainty: ScalarField,
}

/// Anything that produces matcher-style (flow, certainty) pairs.
pub trait MatcherSource: Sync {
    fn extent(&self) -> ImageExtent;
    fn frames(&self) -> usize;
    fn correspond(&self, request: FlowRequest) -> Result<Correspondence>;
}

/// Adapts a [`MatcherSource`] into a [`FlowProvider`].
#[derive(Debug, Clone)]
pub struct MatcherAdapter<S> {
    source: S,
    config: AdapterConfig,
}

impl<S: MatcherSource> MatcherAdapter<S> {
    pub fn new(source: S, config: AdapterConfig) -> Result<Self> {
        config.validate()?;
        if config.certainty_threshold.is_none() {
            return Err(BackendError::MissingCertaintyThreshold);
        }
        Ok(Self { source, config })
    }

    pub fn config(&self) -> &AdapterConfig {
        &self.config
    }

    pub fn source(&self) -> &S {
        &self.source
    }
}

/// Converts one correspondence into a bundle.
pub fn adapt_correspondence(c: Correspondence, cfg: &AdapterConfig) -> Result<FlowBundle> {
    let variance = certainty_to_variance(&c.certainty, cfg)?;
    let occlusion = certainty_to_occlusion(&c.certainty)?;
    Ok(FlowBundle::new(c.flow, variance, occlusion)?)
}

impl<S: MatcherSource> FlowProvider for MatcherAdapter<S> {
    fn extent(&self) -> ImageExtent {
        self.source.extent()
    }

    fn frames(&self) -> usize {
        self.source.frames()
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::WideBaselineMatcher
    }

    fn provide(&self, request: FlowRequest) -> Result<FlowBundle> {
        request.validate(self.frames())?;
        let c = self.source.correspond(request)?;
        if c.flow.extent() != self.extent() {
            return Err(BackendError::ExtentMismatch {
                expected: self.extent(),
                actual: c.flow.extent(),
            });
        }
        adapt_correspondence(c, &self.config)
    }
}
