//! Synthetic sequences with exact ground truth.
//!
//! A [`SceneSpec`] moves a background and a stack of rigid objects. From it
//! we derive exact dense flow between any two frames ([`gt_flow`]), exact
//! point tracks ([`gt_tracks`]), and flows corrupted the way a real estimator
//! would corrupt them ([`degraded_flow`]).

mod noise;
mod scene;

pub use noise::{mix, NoiseKey};
pub use scene::{
    Affine, BackgroundFile, Layer, MotionFile, ObjectFile, ObjectSpec, RigidMotion, SceneFile, SceneSpec, Shape,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, Correspondence, FlowProvider, FlowRequest, MatcherSource, ProviderKind};
use crate::geometry::{
    in_bounds, in_footprint, FieldRole, FlowBundle, FlowField, GeometryError, ImageExtent, Point, ScalarField,
};
use crate::tracks::{GroundTruth, GtTrack, Observation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scene file: {0}")]
    SceneFormat(String),
    #[error("invalid frame pair ({0}, {1}) for a {2}-frame scene")]
    InvalidFrames(usize, usize, usize),
    #[error("query point ({x}, {y}) is outside the first frame")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid degradation model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<SynthError> for BackendError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidFrames(i, j, n) => BackendError::InvalidRequest {
                source_frame: i,
                target_frame: j,
                frames: n,
            },
            SynthError::Geometry(g) => BackendError::Geometry(g),
            other => BackendError::Io(other.to_string()),
        }
    }
}

/// Exact displacement of one surface point between two frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub target: Point,
    /// Hidden by a nearer layer at the target frame, or outside the image.
    pub occluded: bool,
}

fn check_pair(scene: &SceneSpec, i: usize, j: usize) -> Result<(), SynthError> {
    if i < 1 || i >= j || j > scene.frames() {
        return Err(SynthError::InvalidFrames(i, j, scene.frames()));
    }
    Ok(())
}

/// Where the surface visible at `x` in frame `i` is in frame `j`.
pub fn transfer(scene: &SceneSpec, x: Point, i: usize, j: usize) -> Transfer {
    let layer = scene.layer_at(x, i);
    let target = scene.transfer(layer, x, i, j);
    let occluded = !in_footprint(target, scene.extent()) || scene.layer_at(target, j) != layer;
    Transfer { target, occluded }
}

/// Exact flow: displacement from each pixel center of frame `i` to frame
/// `j`, binary occlusion, zero variance.
pub fn gt_flow(scene: &SceneSpec, i: usize, j: usize) -> Result<FlowBundle, SynthError> {
    check_pair(scene, i, j)?;
    let extent = scene.extent();
    let per_pixel: Vec<(f32, f32, f32)> = (0..extent.len())
        .into_par_iter()
        .map(|k| {
            let x = extent.pixel_center(k);
            let t = transfer(scene, x, i, j);
            (
                (t.target.x - x.x) as f32,
                (t.target.y - x.y) as f32,
                if t.occluded { 1.0 } else { 0.0 },
            )
        })
        .collect();
    Ok(assemble(extent, per_pixel, vec![0.0; extent.len()])?)
}

fn assemble(
    extent: ImageExtent,
    per_pixel: Vec<(f32, f32, f32)>,
    variance: Vec<f32>,
) -> Result<FlowBundle, GeometryError> {
    let mut u = Vec::with_capacity(per_pixel.len());
    let mut v = Vec::with_capacity(per_pixel.len());
    let mut o = Vec::with_capacity(per_pixel.len());
    for (a, b, c) in per_pixel {
        u.push(a);
        v.push(b);
        o.push(c);
    }
    FlowBundle::new(
        FlowField::new(extent, u, v)?,
        ScalarField::new(extent, FieldRole::Variance, variance)?,
        ScalarField::new(extent, FieldRole::Occlusion, o)?,
    )
}

/// What variance a degraded estimator reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum VarianceReport {
    /// The true noise variance `σ_n²` of the pair.
    Honest,
    /// The same constant for every pair.
    Miscalibrated { value: f64 },
}

/// How a simulated estimator corrupts the exact flow.
///
/// Per-axis noise has standard deviation `noise_base + noise_per_frame · |j - i|`,
/// so long jumps are noisier than short ones. Occlusion flags are flipped at
/// the given rates. A false occlusion flag marks a match the estimator got
/// wrong: when `outlier_magnitude > 0` the flow there is additionally offset
/// by a uniform error in `±outlier_magnitude` px per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationModel {
    pub noise_base: f64,
    pub noise_per_frame: f64,
    pub variance_report: VarianceReport,
    pub false_occlusion_rate: f64,
    pub missed_occlusion_rate: f64,
    #[serde(default)]
    pub outlier_magnitude: f64,
    pub seed: u64,
}

const STREAM_NOISE_U: u64 = 0;
const STREAM_NOISE_V: u64 = 1;
const STREAM_OCCLUSION_FLIP: u64 = 2;
const STREAM_OUTLIER_U: u64 = 3;
const STREAM_OUTLIER_V: u64 = 4;

impl DegradationModel {
    /// No noise, no flips: reproduces the exact flow.
    pub fn exact(seed: u64) -> Self {
        Self {
            noise_base: 0.0,
            noise_per_frame: 0.0,
            variance_report: VarianceReport::Honest,
            false_occlusion_rate: 0.0,
            missed_occlusion_rate: 0.0,
            outlier_magnitude: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let nonneg = |name: &str, v: f64| {
            if !(v >= 0.0) || !v.is_finite() {
                Err(SynthError::InvalidModel(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            } else {
                Ok(())
            }
        };
        nonneg("noise_base", self.noise_base)?;
        nonneg("noise_per_frame", self.noise_per_frame)?;
        nonneg("outlier_magnitude", self.outlier_magnitude)?;
        for (name, r) in [
            ("false_occlusion_rate", self.false_occlusion_rate),
            ("missed_occlusion_rate", self.missed_occlusion_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SynthError::InvalidModel(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        if let VarianceReport::Miscalibrated { value } = self.variance_report {
            nonneg("variance_report.value", value)?;
        }
        Ok(())
    }

    /// Per-axis noise standard deviation for the pair.
    pub fn noise_scale(&self, i: usize, j: usize) -> f64 {
        self.noise_base + self.noise_per_frame * i.abs_diff(j) as f64
    }

    pub fn reported_variance(&self, i: usize, j: usize) -> f64 {
        match self.variance_report {
            VarianceReport::Honest => self.noise_scale(i, j).powi(2),
            VarianceReport::Miscalibrated { value } => value,
        }
    }
}

/// Exact flow corrupted per `model`. Deterministic in `(scene, i, j, seed)`.
pub fn degraded_flow(
    scene: &SceneSpec,
    i: usize,
    j: usize,
    model: &DegradationModel,
) -> Result<FlowBundle, SynthError> {
    model.validate()?;
    let exact = gt_flow(scene, i, j)?;
    let extent = scene.extent();
    let scale = model.noise_scale(i, j);
    let reported = model.reported_variance(i, j) as f32;
    let (gu, gv) = (exact.flow.u(), exact.flow.v());
    let go = exact.occlusion.values();

    let per_pixel: Vec<(f32, f32, f32)> = (0..extent.len())
        .into_par_iter()
        .map(|k| {
            let key = NoiseKey::new(model.seed, i, j, k);
            let mut du = gu[k] as f64;
            let mut dv = gv[k] as f64;
            if scale > 0.0 {
                du += scale * key.normal(STREAM_NOISE_U);
                dv += scale * key.normal(STREAM_NOISE_V);
            }
            let flip = key.uniform(STREAM_OCCLUSION_FLIP);
            let occluded = if go[k] > 0.5 {
                flip >= model.missed_occlusion_rate
            } else {
                let false_flag = flip < model.false_occlusion_rate;
                if false_flag && model.outlier_magnitude > 0.0 {
                    du += model.outlier_magnitude * (2.0 * key.uniform(STREAM_OUTLIER_U) - 1.0);
                    dv += model.outlier_magnitude * (2.0 * key.uniform(STREAM_OUTLIER_V) - 1.0);
                }
                false_flag
            };
            (du as f32, dv as f32, if occluded { 1.0 } else { 0.0 })
        })
        .collect();
    Ok(assemble(extent, per_pixel, vec![reported; extent.len()])?)
}

/// Exact trajectories of frame-1 query points. Frame 1 is always visible.
pub fn gt_tracks(scene: &SceneSpec, queries: &[Point]) -> Result<GroundTruth, SynthError> {
    let extent = scene.extent();
    let mut tracks = Vec::with_capacity(queries.len());
    for (id, &q) in queries.iter().enumerate() {
        if !in_bounds(q, extent) {
            return Err(SynthError::OutOfBounds { x: q.x, y: q.y });
        }
        let layer = scene.layer_at(q, 1);
        let mut points = Vec::with_capacity(scene.frames());
        points.push(Observation::new(q, true));
        for t in 2..=scene.frames() {
            let tr = transfer(scene, q, 1, t);
            debug_assert_eq!(tr.target, scene.transfer(layer, q, 1, t));
            points.push(Observation::new(tr.target, !tr.occluded));
        }
        tracks.push(GtTrack {
            id: id as u64,
            query: q,
            points,
        });
    }
    Ok(GroundTruth {
        extent,
        frames: scene.frames(),
        tracks,
    })
}

/// Regular grid of query points with the given spacing, offset by half a step.
pub fn grid_queries(extent: ImageExtent, step: usize) -> Vec<Point> {
    let step = step.max(1);
    let off = step / 2;
    let mut out = Vec::new();
    for y in (off..extent.height()).step_by(step) {
        for x in (off..extent.width()).step_by(step) {
            out.push(Point::new(x as f64, y as f64));
        }
    }
    out
}

/// Serves exact flows of a scene.
#[derive(Debug, Clone)]
pub struct OracleProvider {
    scene: SceneSpec,
}

impl OracleProvider {
    pub fn new(scene: SceneSpec) -> Self {
        Self { scene }
    }

    pub fn scene(&self) -> &SceneSpec {
        &self.scene
    }
}

impl FlowProvider for OracleProvider {
    fn extent(&self) -> ImageExtent {
        self.scene.extent()
    }
    fn frames(&self) -> usize {
        self.scene.frames()
    }
    fn kind(&self) -> ProviderKind {
        ProviderKind::Oracle
    }
    fn provide(&self, r: FlowRequest) -> Result<FlowBundle, BackendError> {
        Ok(gt_flow(&self.scene, r.source_frame, r.target_frame)?)
    }
}

/// Serves degraded flows: a stand-in for a consecutive-flow estimator.
#[derive(Debug, Clone)]
pub struct SimulatedFlow {
    scene: SceneSpec,
    model: DegradationModel,
}

impl SimulatedFlow {
    pub fn new(scene: SceneSpec, model: DegradationModel) -> Result<Self, SynthError> {
        model.validate()?;
        Ok(Self { scene, model })
    }

    pub fn scene(&self) -> &SceneSpec {
        &self.scene
    }

    pub fn model(&self) -> &DegradationModel {
        &self.model
    }
}

impl FlowProvider for SimulatedFlow {
    fn extent(&self) -> ImageExtent {
        self.scene.extent()
    }
    fn frames(&self) -> usize {
        self.scene.frames()
    }
    fn kind(&self) -> ProviderKind {
        ProviderKind::ConsecutiveFlow
    }
    fn provide(&self, r: FlowRequest) -> Result<FlowBundle, BackendError> {
        Ok(degraded_flow(&self.scene, r.source_frame, r.target_frame, &self.model)?)
    }
}

/// A matcher-style source: degraded flow plus a certainty that is high where
/// the simulated estimator reports the match as visible and low elsewhere.
#[derive(Debug, Clone)]
pub struct SimulatedMatcher {
    inner: SimulatedFlow,
    confident: f32,
    unconfident: f32,
}

impl SimulatedMatcher {
    pub fn new(
        scene: SceneSpec,
        model: DegradationModel,
        confident: f32,
        unconfident: f32,
    ) -> Result<Self, SynthError> {
        for c in [confident, unconfident] {
            if !(0.0..=1.0).contains(&c) {
                return Err(SynthError::InvalidModel(format!("certainty {c} outside [0, 1]")));
            }
        }
        Ok(Self {
            inner: SimulatedFlow::new(scene, model)?,
            confident,
            unconfident,
        })
    }
}

impl MatcherSource for SimulatedMatcher {
    fn extent(&self) -> ImageExtent {
        self.inner.extent()
    }
    fn frames(&self) -> usize {
        self.inner.frames()
    }
    fn correspond(&self, r: FlowRequest) -> Result<Correspondence, BackendError> {
        let b = self.inner.provide(r)?;
        let certainty = b
            .occlusion
            .values()
            .iter()
            .map(|&o| if o > 0.5 { self.unconfident } else { self.confident })
            .collect();
        Ok(Correspondence {
            flow: b.flow,
            certainty: ScalarField::new(b.variance.extent(), FieldRole::Certainty, certainty)?,
        })
    }
}
