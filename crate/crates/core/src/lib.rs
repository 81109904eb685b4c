//! Dense long-term point tracking by chaining optical flow over a
//! logarithmic set of frame gaps.
//!
//! A [`chain::Tracker`] consumes any [`backend::FlowProvider`] and keeps, for
//! every pixel of the first frame, its position, accumulated variance and
//! occlusion score in the current frame. Sparse tracks are read off the
//! dense state with [`tracks::predict_tracks`], two trackers can be combined
//! with [`ensemble::combine`], and [`metrics::evaluate`] scores tracks
//! against ground truth. [`synth`] builds analytic scenes with exact flow
//! and simulated estimators; [`io`] holds the file formats.
//!
//! ```
//! use mft::chain::{track, ChainConfig};
//! use mft::geometry::{ImageExtent, Point};
//! use mft::synth::{OracleProvider, SceneSpec};
//!
//! let scene = SceneSpec::translating(ImageExtent::new(16, 16).unwrap(), 4, 1.0, 0.0).unwrap();
//! let states = track(4, &OracleProvider::new(scene), &ChainConfig::new(0.02)).unwrap();
//! assert_eq!(states[3].sample_position(Point::new(2.0, 5.0)).unwrap(), Point::new(5.0, 5.0));
//! ```

pub mod backend;
pub mod chain;
pub mod cli;
pub mod ensemble;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod synth;
pub mod tracks;

use thiserror::Error;

/// Any error the library can produce.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Backend(#[from] backend::BackendError),
    #[error(transparent)]
    Chain(#[from] chain::ChainError),
    #[error(transparent)]
    Ensemble(#[from] ensemble::EnsembleError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Short stable name for scripts: the most specific variant name.
    pub fn category(&self) -> &'static str {
        use backend::BackendError as B;
        use chain::ChainError as C;
        use io::IoError as I;
        use metrics::MetricsError as M;
        match self {
            Error::Geometry(_) => "Geometry",
            Error::Backend(b) | Error::Chain(C::Backend(b)) => match b {
                B::MissingPair { .. } => "MissingPair",
                B::MissingCertaintyThreshold => "MissingCertaintyThreshold",
                B::ExtentMismatch { .. } => "ExtentMismatch",
                B::UnknownBackend(_) => "UnknownBackend",
                B::InvalidConfig(_) => "Config",
                B::Io(_) => "Io",
                _ => "Backend",
            },
            Error::Chain(c) => match c {
                C::InvalidConfig(_) => "Config",
                C::SequenceTooShort { .. } => "SequenceTooShort",
                C::ExtentMismatch { .. } => "ExtentMismatch",
                _ => "Chain",
            },
            Error::Ensemble(ensemble::EnsembleError::ShapeMismatch(_)) => "ShapeMismatch",
            Error::Ensemble(ensemble::EnsembleError::UnknownStrategy(_)) => "Usage",
            Error::Ensemble(ensemble::EnsembleError::Chain(_)) => "Chain",
            Error::Synth(_) => "Synth",
            Error::Metrics(m) => match m {
                M::ShapeMismatch(_) => "ShapeMismatch",
                M::EmptyEvalSet => "EmptyEvalSet",
                M::MissingGt(_) => "MissingGt",
                M::InvalidConfig(_) => "Config",
                M::DegenerateDenominator(_) => "DegenerateDenominator",
            },
            Error::Io(i) => match i {
                I::BadMagic { .. } => "BadMagic",
                I::TruncatedFile { .. } => "TruncatedFile",
                I::MaskMismatch(_) => "MaskMismatch",
                I::ExtentOverflow { .. } => "ExtentOverflow",
                I::Os { .. } => "Io",
                I::Parse { .. } => "Parse",
                I::Config(_) => "Config",
                I::Geometry(_) => "Geometry",
            },
            Error::Usage(_) => "Usage",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
