//! Long-term flow by chaining: for every reference pixel and every new frame
//! `j`, try each candidate intermediate frame `i = j - Δ`, extend the chain
//! that ended at `i` by the flow `i → j`, and keep the candidate whose chained
//! variance is lowest among those that did not pass through an occlusion.
//!
//! Chained quantities compose as
//!
//! ```text
//! σ(1→i→j) = σ(1→i) + σ_step(p_i)
//! o(1→i→j) = max(o(1→i), o_step(p_i))
//! S        = -σ(1→i→j), or -∞ if o(1→i→j) > θ_o or p_i left the image
//! p_j      = p_i + F(i→j)(p_i)
//! ```
//!
//! The frame loop is sequential; within a frame every pixel is independent
//! and is processed in parallel.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::backend::{BackendError, FlowProvider, FlowRequest};
use crate::geometry::{in_bounds, FlowBundle, GeometryError, ImageExtent, Point};

/// Default cap on the number of candidate intermediate frames.
pub const DEFAULT_MAX_CANDIDATES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("frame {0} has no predecessor to chain from (frames are 1-based, first tracked frame is 2)")]
    InvalidFrame(usize),
    #[error("no chain state retained for frame {0}")]
    MissingState(usize),
    #[error("requested {requested} frames but the provider has {available}")]
    SequenceTooShort { requested: usize, available: usize },
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
    #[error("state extent {state} does not match provider extent {provider}")]
    ExtentMismatch { state: ImageExtent, provider: ImageExtent },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T, E = ChainError> = std::result::Result<T, E>;

/// Which candidate intermediate frames a frame `j` may chain from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// `{1, 2, 4, ..., j-1}`, at most `K` entries.
    #[default]
    #[serde(alias = "mft")]
    Logarithmic,
    /// Only the previous frame: plain consecutive chaining.
    #[serde(alias = "chain")]
    Consecutive,
    /// Only the reference frame: one flow `1 → j` per frame.
    Direct,
}

impl Schedule {
    pub fn deltas(&self, j: usize, max_candidates: usize) -> Result<Vec<usize>> {
        match self {
            Schedule::Logarithmic => delta_schedule(j, max_candidates),
            Schedule::Consecutive => check_frame(j).map(|_| vec![1]),
            Schedule::Direct => check_frame(j).map(|_| vec![j - 1]),
        }
    }

    /// Largest delta other than `j - 1` this schedule can produce. Frames
    /// older than that (except the reference) are never chained from again.
    pub fn max_short_delta(&self, max_candidates: usize) -> usize {
        match self {
            Schedule::Logarithmic if max_candidates >= 2 => 1 << (max_candidates - 2),
            Schedule::Logarithmic => 0,
            Schedule::Consecutive => 1,
            Schedule::Direct => 0,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schedule::Logarithmic => "mft",
            Schedule::Consecutive => "chain",
            Schedule::Direct => "direct",
        })
    }
}

impl FromStr for Schedule {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mft" | "logarithmic" => Ok(Schedule::Logarithmic),
            "chain" | "consecutive" => Ok(Schedule::Consecutive),
            "direct" => Ok(Schedule::Direct),
            other => Err(ChainError::InvalidConfig(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainConfig {
    pub max_candidates: usize,
    pub occlusion_threshold: f64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl ChainConfig {
    pub fn new(occlusion_threshold: f64) -> Self {
        Self {
            max_candidates: DEFAULT_MAX_CANDIDATES,
            occlusion_threshold,
            schedule: Schedule::Logarithmic,
        }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_max_candidates(mut self, k: usize) -> Self {
        self.max_candidates = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_candidates < 1 {
            return Err(ChainError::InvalidConfig("max_candidates must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.occlusion_threshold) {
            return Err(ChainError::InvalidConfig(format!(
                "occlusion threshold {} outside [0, 1]",
                self.occlusion_threshold
            )));
        }
        Ok(())
    }
}

fn check_frame(j: usize) -> Result<()> {
    if j < 2 {
        return Err(ChainError::InvalidFrame(j));
    }
    Ok(())
}

/// Logarithmically spaced deltas for frame `j`, ascending.
///
/// Powers of two `1, 2, 4, ...` for the first `K - 1` slots, keeping only
/// those that leave an intermediate frame after the reference (`j - Δ > 1`),
/// then `j - 1` (the direct jump from the reference frame).
pub fn delta_schedule(j: usize, max_candidates: usize) -> Result<Vec<usize>> {
    check_frame(j)?;
    if max_candidates < 1 {
        return Err(ChainError::InvalidConfig("max_candidates must be >= 1".into()));
    }
    let last = j - 1;
    let mut deltas: Vec<usize> = (0..max_candidates - 1)
        .map(|k| 1usize << k)
        .take_while(|&d| d < last)
        .collect();
    deltas.push(last);
    Ok(deltas)
}

#[inline]
pub fn chain_variance(prefix: f64, step: f64) -> f64 {
    prefix + step
}

#[inline]
pub fn chain_occlusion(prefix: f64, step: f64) -> f64 {
    prefix.max(step)
}

/// `-σ`, or `-∞` for chains that are occluded or left the image.
#[inline]
pub fn score_candidate(chained_variance: f64, chained_occlusion: f64, threshold: f64, left_bounds: bool) -> f64 {
    if left_bounds || chained_occlusion > threshold {
        f64::NEG_INFINITY
    } else {
        -chained_variance
    }
}

/// One candidate chain `1 → i → j` evaluated for one reference pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub intermediate_frame: usize,
    pub delta: usize,
    pub variance: f64,
    pub occlusion: f64,
    pub score: f64,
    pub left_bounds: bool,
    /// Where the chain puts the point in frame `j`.
    pub position: Point,
}

/// Picks the winning candidate.
///
/// Highest score wins; equal scores go to the larger delta. When every
/// candidate scores `-∞` the one with the lowest chained occlusion is kept
/// (then lowest variance, then larger delta) so the pixel still has a
/// position, flagged occluded through its chained values.
pub fn select_candidate(candidates: &[CandidateScore]) -> Option<&CandidateScore> {
    let mut best: Option<&CandidateScore> = None;
    for c in candidates {
        best = match best {
            None => Some(c),
            Some(b) if c.score > b.score || (c.score == b.score && c.delta > b.delta) => Some(c),
            keep => keep,
        };
    }
    match best {
        Some(b) if b.score == f64::NEG_INFINITY => candidates.iter().reduce(|b, c| {
            let better = c.occlusion < b.occlusion
                || (c.occlusion == b.occlusion
                    && (c.variance < b.variance || (c.variance == b.variance && c.delta > b.delta)));
            if better {
                c
            } else {
                b
            }
        }),
        other => other,
    }
}

/// Dense tracking state of every reference pixel at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    extent: ImageExtent,
    frame: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    variance: Vec<f64>,
    occlusion: Vec<f64>,
}

impl AsRef<ChainState> for ChainState {
    fn as_ref(&self) -> &ChainState {
        self
    }
}

impl ChainState {
    /// Frame-1 state: every pixel at its own center, `σ = 0`, `o = 0`.
    pub fn identity(extent: ImageExtent) -> Self {
        let n = extent.len();
        let (xs, ys) = extent.pixel_centers().map(|p| (p.x, p.y)).unzip();
        Self {
            extent,
            frame: 1,
            xs,
            ys,
            variance: vec![0.0; n],
            occlusion: vec![0.0; n],
        }
    }

    pub fn from_parts(
        extent: ImageExtent,
        frame: usize,
        xs: Vec<f64>,
        ys: Vec<f64>,
        variance: Vec<f64>,
        occlusion: Vec<f64>,
    ) -> Result<Self> {
        let n = extent.len();
        for len in [xs.len(), ys.len(), variance.len(), occlusion.len()] {
            if len != n {
                return Err(GeometryError::LengthMismatch {
                    expected: n,
                    actual: len,
                }
                .into());
            }
        }
        if variance.iter().any(|v| !(*v >= 0.0)) || occlusion.iter().any(|o| !(0.0..=1.0).contains(o)) {
            return Err(ChainError::InvalidConfig(
                "state variance/occlusion out of range".into(),
            ));
        }
        Ok(Self {
            extent,
            frame,
            xs,
            ys,
            variance,
            occlusion,
        })
    }

    pub fn extent(&self) -> ImageExtent {
        self.extent
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn position(&self, index: usize) -> Point {
        Point::new(self.xs[index], self.ys[index])
    }

    pub fn variance(&self, index: usize) -> f64 {
        self.variance[index]
    }

    pub fn occlusion(&self, index: usize) -> f64 {
        self.occlusion[index]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn variances(&self) -> &[f64] {
        &self.variance
    }

    pub fn occlusions(&self) -> &[f64] {
        &self.occlusion
    }

    /// Score of the chain this state holds for `index`.
    pub fn score(&self, index: usize, threshold: f64) -> f64 {
        score_candidate(self.variance[index], self.occlusion[index], threshold, false)
    }

    /// Whether the reference point `p` is occluded at this frame (`o > θ_o`).
    pub fn is_occluded(&self, p: Point, threshold: f64) -> Result<bool> {
        Ok(self.sample_occlusion(p)? > threshold)
    }

    fn plane_f32(plane: &[f64]) -> Vec<f32> {
        plane.iter().map(|&v| v as f32).collect()
    }

    /// Bilinear sample of the occlusion map at a reference-frame point.
    pub fn sample_occlusion(&self, p: Point) -> Result<f64> {
        self.sample_plane(&self.occlusion, p)
    }

    pub fn sample_variance(&self, p: Point) -> Result<f64> {
        self.sample_plane(&self.variance, p)
    }

    /// Bilinear sample of the position map at a reference-frame point.
    pub fn sample_position(&self, p: Point) -> Result<Point> {
        Ok(Point::new(
            self.sample_plane(&self.xs, p)?,
            self.sample_plane(&self.ys, p)?,
        ))
    }

    fn sample_plane(&self, plane: &[f64], p: Point) -> Result<f64> {
        if !in_bounds(p, self.extent) {
            return Err(GeometryError::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.extent.width(),
                height: self.extent.height(),
            }
            .into());
        }
        let x0 = p.x.floor() as usize;
        let y0 = p.y.floor() as usize;
        let fx = p.x - x0 as f64;
        let fy = p.y - y0 as f64;
        let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
        let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
        let at = |x: usize, y: usize| plane[self.extent.index(x, y)];
        let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
        let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
        Ok(top + (bottom - top) * fy)
    }

    /// Displacement planes `(position - reference)` as f32, for dumps.
    pub fn displacement_planes(&self) -> (Vec<f32>, Vec<f32>) {
        let mut u = Vec::with_capacity(self.xs.len());
        let mut v = Vec::with_capacity(self.ys.len());
        for (k, p) in self.extent.pixel_centers().enumerate() {
            u.push((self.xs[k] - p.x) as f32);
            v.push((self.ys[k] - p.y) as f32);
        }
        (u, v)
    }

    pub fn variance_plane(&self) -> Vec<f32> {
        Self::plane_f32(&self.variance)
    }

    pub fn occlusion_plane(&self) -> Vec<f32> {
        Self::plane_f32(&self.occlusion)
    }
}

/// Chain states indexed by frame.
#[derive(Debug, Clone, Default)]
pub struct StateHistory {
    states: BTreeMap<usize, Arc<ChainState>>,
}

impl StateHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, state: ChainState) -> Arc<ChainState> {
        let state = Arc::new(state);
        self.states.insert(state.frame(), state.clone());
        state
    }

    pub fn get(&self, frame: usize) -> Option<&ChainState> {
        self.states.get(&frame).map(Arc::as_ref)
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Drops states no frame after `current` can chain from: everything but
    /// the reference frame and the last `max_short_delta` frames.
    pub fn prune(&mut self, current: usize, cfg: &ChainConfig) {
        let window = cfg.schedule.max_short_delta(cfg.max_candidates);
        let oldest_needed = (current + 1).saturating_sub(window);
        self.states.retain(|&f, _| f == 1 || f >= oldest_needed);
    }
}

/// Evaluates one candidate for the pixel whose chain ended at `prefix` in frame `i`.
fn evaluate_candidate(
    prefix: &ChainState,
    index: usize,
    delta: usize,
    bundle: &FlowBundle,
    threshold: f64,
) -> CandidateScore {
    let p_i = prefix.position(index);
    let prefix_variance = prefix.variance(index);
    let prefix_occlusion = prefix.occlusion(index);
    match bundle.sample(p_i) {
        Ok(step) => {
            let variance = chain_variance(prefix_variance, step.variance);
            let occlusion = chain_occlusion(prefix_occlusion, step.occlusion);
            CandidateScore {
                intermediate_frame: prefix.frame(),
                delta,
                variance,
                occlusion,
                score: score_candidate(variance, occlusion, threshold, false),
                left_bounds: false,
                position: p_i.offset(step.du, step.dv),
            }
        }
        Err(_) => CandidateScore {
            intermediate_frame: prefix.frame(),
            delta,
            variance: prefix_variance,
            occlusion: 1.0,
            score: f64::NEG_INFINITY,
            left_bounds: true,
            position: p_i,
        },
    }
}

/// Computes the state at frame `j` from retained prior states.
pub fn update_frame<P: FlowProvider + ?Sized>(
    history: &StateHistory,
    j: usize,
    provider: &P,
    cfg: &ChainConfig,
) -> Result<ChainState> {
    cfg.validate()?;
    let deltas = cfg.schedule.deltas(j, cfg.max_candidates)?;
    let extent = provider.extent();

    // Longest jump first so ties resolve to the larger delta.
    let mut steps: Vec<(usize, &ChainState)> = Vec::with_capacity(deltas.len());
    for &delta in deltas.iter().rev() {
        let prefix = history.get(j - delta).ok_or(ChainError::MissingState(j - delta))?;
        if prefix.extent() != extent {
            return Err(ChainError::ExtentMismatch {
                state: prefix.extent(),
                provider: extent,
            });
        }
        steps.push((delta, prefix));
    }
    let bundles: Vec<FlowBundle> = steps
        .par_iter()
        .map(|&(delta, _)| provider.provide(FlowRequest::new(j - delta, j)))
        .collect::<std::result::Result<_, _>>()?;
    for b in &bundles {
        if b.extent() != extent {
            return Err(BackendError::ExtentMismatch {
                expected: extent,
                actual: b.extent(),
            }
            .into());
        }
    }

    let threshold = cfg.occlusion_threshold;
    let updates: Vec<(f64, f64, f64, f64)> = (0..extent.len())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(steps.len()),
            |candidates, index| {
                candidates.clear();
                for ((delta, prefix), bundle) in steps.iter().zip(&bundles) {
                    candidates.push(evaluate_candidate(prefix, index, *delta, bundle, threshold));
                }
                let w = select_candidate(candidates).expect("schedule is never empty");
                (w.position.x, w.position.y, w.variance, w.occlusion)
            },
        )
        .collect();

    let n = extent.len();
    let mut state = ChainState {
        extent,
        frame: j,
        xs: Vec::with_capacity(n),
        ys: Vec::with_capacity(n),
        variance: Vec::with_capacity(n),
        occlusion: Vec::with_capacity(n),
    };
    for (x, y, s, o) in updates {
        state.xs.push(x);
        state.ys.push(y);
        state.variance.push(s);
        state.occlusion.push(o);
    }
    Ok(state)
}

/// Streaming tracker: yields one state per frame and keeps only the states
/// future frames can still chain from.
pub struct Tracker<P> {
    provider: P,
    cfg: ChainConfig,
    history: StateHistory,
    next_frame: usize,
    last_frame: usize,
}

impl<P: FlowProvider> Tracker<P> {
    pub fn new(provider: P, cfg: ChainConfig) -> Result<Self> {
        Self::with_frames(provider, cfg, None)
    }

    /// Tracks only the first `frames` frames of the provider's sequence.
    pub fn with_frames(provider: P, cfg: ChainConfig, frames: Option<usize>) -> Result<Self> {
        cfg.validate()?;
        let available = provider.frames();
        let last_frame = frames.unwrap_or(available);
        if last_frame < 1 || last_frame > available {
            return Err(ChainError::SequenceTooShort {
                requested: last_frame,
                available,
            });
        }
        Ok(Self {
            provider,
            cfg,
            history: StateHistory::new(),
            next_frame: 1,
            last_frame,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }

    pub fn history(&self) -> &StateHistory {
        &self.history
    }

    /// Computes the next frame's state, or `None` past the last frame.
    pub fn step(&mut self) -> Option<Result<Arc<ChainState>>> {
        if self.next_frame > self.last_frame {
            return None;
        }
        let j = self.next_frame;
        let state = if j == 1 {
            Ok(ChainState::identity(self.provider.extent()))
        } else {
            update_frame(&self.history, j, &self.provider, &self.cfg)
        };
        Some(state.map(|s| {
            let s = self.history.insert(s);
            self.history.prune(j, &self.cfg);
            self.next_frame += 1;
            s
        }))
    }
}

impl<P: FlowProvider> Iterator for Tracker<P> {
    type Item = Result<Arc<ChainState>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.step()
    }
}

/// Tracks frames `1..=frames` and returns every state.
pub fn track<P: FlowProvider + ?Sized>(frames: usize, provider: &P, cfg: &ChainConfig) -> Result<Vec<Arc<ChainState>>> {
    cfg.validate()?;
    if frames < 1 || frames > provider.frames() {
        return Err(ChainError::SequenceTooShort {
            requested: frames,
            available: provider.frames(),
        });
    }
    let mut history = StateHistory::new();
    let mut out = Vec::with_capacity(frames);
    out.push(history.insert(ChainState::identity(provider.extent())));
    for j in 2..=frames {
        let state = update_frame(&history, j, provider, cfg)?;
        out.push(history.insert(state));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ProviderKind;
    use crate::geometry::{FieldRole, FlowField, ScalarField};
    use std::collections::HashMap;

    #[test]
    fn schedule_examples() {
        assert_eq!(delta_schedule(10, 5).unwrap(), vec![1, 2, 4, 8, 9]);
        assert_eq!(delta_schedule(2, 5).unwrap(), vec![1]);
        assert_eq!(delta_schedule(5, 5).unwrap(), vec![1, 2, 4]);
        assert!(matches!(delta_schedule(1, 5), Err(ChainError::InvalidFrame(1))));
        assert!(delta_schedule(4, 0).is_err());
    }

    #[test]
    fn baseline_schedules() {
        assert_eq!(Schedule::Consecutive.deltas(7, 5).unwrap(), vec![1]);
        assert_eq!(Schedule::Direct.deltas(7, 5).unwrap(), vec![6]);
        assert!(Schedule::Direct.deltas(1, 5).is_err());
    }

    #[test]
    fn compose_rules() {
        assert_eq!(chain_variance(1.0, 2.0), 3.0);
        assert_eq!(chain_variance(0.0, 0.0), 0.0);
        assert_eq!(chain_variance(0.0, 1000.0), 1000.0);
        assert_eq!(chain_occlusion(0.1, 0.3), 0.3);
        assert_eq!(chain_occlusion(0.0, 0.0), 0.0);
        assert_eq!(chain_occlusion(0.95, 0.2), 0.95);
    }

    #[test]
    fn scoring() {
        assert_eq!(score_candidate(3.0, 0.01, 0.02, false), -3.0);
        assert_eq!(score_candidate(3.0, 0.5, 0.02, false), f64::NEG_INFINITY);
        assert_eq!(score_candidate(0.0, 0.0, 0.7, false), 0.0);
        assert_eq!(score_candidate(0.0, 0.0, 0.7, true), f64::NEG_INFINITY);
        // at the threshold is not "exceeding" it
        assert_eq!(score_candidate(1.0, 0.02, 0.02, false), -1.0);
    }

    fn cand(delta: usize, variance: f64, occlusion: f64, threshold: f64) -> CandidateScore {
        CandidateScore {
            intermediate_frame: 10 - delta,
            delta,
            variance,
            occlusion,
            score: score_candidate(variance, occlusion, threshold, false),
            left_bounds: false,
            position: Point::new(delta as f64, 0.0),
        }
    }

    #[test]
    fn selection_prefers_low_variance() {
        let c = [cand(1, 5.0, 0.0, 0.02), cand(2, 2.0, 0.0, 0.02)];
        assert_eq!(select_candidate(&c).unwrap().variance, 2.0);
    }

    #[test]
    fn selection_skips_occluded_chains() {
        let c = [cand(1, 2.0, 0.5, 0.02), cand(2, 5.0, 0.0, 0.02)];
        assert_eq!(select_candidate(&c).unwrap().variance, 5.0);
    }

    #[test]
    fn ties_go_to_the_longer_jump() {
        let c = [cand(1, 2.0, 0.0, 0.5), cand(4, 2.0, 0.0, 0.5), cand(2, 2.0, 0.0, 0.5)];
        assert_eq!(select_candidate(&c).unwrap().delta, 4);
    }

    #[test]
    fn fallback_keeps_least_occluded() {
        let c = [cand(1, 1.0, 0.9, 0.5), cand(2, 3.0, 0.6, 0.5), cand(4, 0.5, 0.6, 0.5)];
        let w = select_candidate(&c).unwrap();
        assert_eq!((w.delta, w.occlusion), (4, 0.6));
        assert_eq!(w.score, f64::NEG_INFINITY);
    }

    /// Provider serving fixed bundles from a map.
    struct MapProvider {
        extent: ImageExtent,
        frames: usize,
        bundles: HashMap<(usize, usize), FlowBundle>,
    }

    impl FlowProvider for MapProvider {
        fn extent(&self) -> ImageExtent {
            self.extent
        }
        fn frames(&self) -> usize {
            self.frames
        }
        fn kind(&self) -> ProviderKind {
            ProviderKind::Oracle
        }
        fn provide(&self, r: FlowRequest) -> crate::backend::Result<FlowBundle> {
            self.bundles
                .get(&(r.source_frame, r.target_frame))
                .cloned()
                .ok_or(BackendError::MissingPair {
                    source_frame: r.source_frame,
                    target_frame: r.target_frame,
                })
        }
    }

    fn bundle(extent: ImageExtent, du: f32, var: f32, occ: f32) -> FlowBundle {
        FlowBundle::new(
            FlowField::constant(extent, du, 0.0).unwrap(),
            ScalarField::constant(extent, FieldRole::Variance, var).unwrap(),
            ScalarField::constant(extent, FieldRole::Occlusion, occ).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn second_frame_is_the_provider_bundle() {
        let e = ImageExtent::new(3, 2).unwrap();
        let b = FlowBundle::new(
            FlowField::new(e, vec![0.5, -1.0, 0.0, 2.0, 0.25, -0.5], vec![1.0; 6]).unwrap(),
            ScalarField::new(e, FieldRole::Variance, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap(),
            ScalarField::new(e, FieldRole::Occlusion, vec![0.0, 0.01, 0.5, 0.0, 1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let p = MapProvider {
            extent: e,
            frames: 2,
            bundles: HashMap::from([((1, 2), b.clone())]),
        };
        let states = track(2, &p, &ChainConfig::new(0.02)).unwrap();
        let s = &states[1];
        for k in 0..e.len() {
            let c = e.pixel_center(k);
            assert_eq!(s.position(k), c.offset(b.flow.u()[k] as f64, b.flow.v()[k] as f64));
            assert_eq!(s.variance(k), b.variance.values()[k] as f64);
            assert_eq!(s.occlusion(k), b.occlusion.values()[k] as f64);
        }
    }

    #[test]
    fn disqualified_chain_loses_to_noisier_clean_one() {
        // frame 3 candidates: via 2 (Δ=1) accumulates 1+1 = 2 but passes an
        // occlusion of 0.5; direct 1→3 has variance 5 and no occlusion.
        let e = ImageExtent::new(1, 1).unwrap();
        let p = MapProvider {
            extent: e,
            frames: 3,
            bundles: HashMap::from([
                ((1, 2), bundle(e, 0.0, 1.0, 0.5)),
                ((2, 3), bundle(e, 0.0, 1.0, 0.0)),
                ((1, 3), bundle(e, 0.0, 5.0, 0.0)),
            ]),
        };
        let states = track(3, &p, &ChainConfig::new(0.02)).unwrap();
        assert_eq!(states[2].variance(0), 5.0);
        assert_eq!(states[2].occlusion(0), 0.0);
    }

    #[test]
    fn out_of_bounds_chain_is_marked_occluded() {
        let e = ImageExtent::new(2, 1).unwrap();
        let p = MapProvider {
            extent: e,
            frames: 3,
            bundles: HashMap::from([
                ((1, 2), bundle(e, 5.0, 0.0, 0.0)),
                ((2, 3), bundle(e, 0.0, 0.0, 0.0)),
                ((1, 3), bundle(e, 0.0, 0.0, 0.9)),
            ]),
        };
        let cfg = ChainConfig::new(0.5);
        let states = track(3, &p, &cfg).unwrap();
        // frame 2: pushed off the image but still a tracked position
        assert_eq!(states[1].position(0), Point::new(5.0, 0.0));
        // frame 3: via 2 left bounds (o = 1); direct is occluded at 0.9 -> fallback picks direct
        assert_eq!(states[2].occlusion(0), 0.9f32 as f64);
        assert!(states[2]
            .is_occluded(Point::new(0.0, 0.0), cfg.occlusion_threshold)
            .unwrap());
        assert_eq!(states[2].score(0, cfg.occlusion_threshold), f64::NEG_INFINITY);
    }

    #[test]
    fn all_out_of_bounds_pins_occlusion_to_one() {
        let e = ImageExtent::new(2, 1).unwrap();
        let p = MapProvider {
            extent: e,
            frames: 3,
            bundles: HashMap::from([((1, 2), bundle(e, 5.0, 0.0, 0.0)), ((2, 3), bundle(e, 0.0, 0.0, 0.0))]),
        };
        let cfg = ChainConfig::new(0.5).with_schedule(Schedule::Consecutive);
        let states = track(3, &p, &cfg).unwrap();
        assert_eq!(states[2].occlusion(0), 1.0);
        assert_eq!(states[2].position(0), states[1].position(0));
    }

    #[test]
    fn missing_state_and_pair_errors() {
        let e = ImageExtent::new(1, 1).unwrap();
        let p = MapProvider {
            extent: e,
            frames: 3,
            bundles: HashMap::from([((1, 2), bundle(e, 0.0, 0.0, 0.0))]),
        };
        let mut h = StateHistory::new();
        h.insert(ChainState::identity(e));
        let cfg = ChainConfig::new(0.02);
        assert!(matches!(
            update_frame(&h, 3, &p, &cfg),
            Err(ChainError::MissingState(2))
        ));
        assert!(matches!(
            track(3, &p, &cfg),
            Err(ChainError::Backend(BackendError::MissingPair { .. }))
        ));
        assert!(matches!(track(4, &p, &cfg), Err(ChainError::SequenceTooShort { .. })));
    }

    #[test]
    fn occlusion_query_is_strict() {
        let e = ImageExtent::new(2, 2).unwrap();
        let mut s = ChainState::identity(e);
        assert!(!s.is_occluded(Point::new(0.5, 0.5), 0.02).unwrap());
        s.occlusion = vec![1.0; 4];
        assert!(s.is_occluded(Point::new(1.0, 1.0), 0.02).unwrap());
        s.occlusion = vec![0.021; 4];
        assert!(s.is_occluded(Point::new(0.0, 0.0), 0.02).unwrap());
        s.occlusion = vec![0.02; 4];
        assert!(!s.is_occluded(Point::new(0.0, 0.0), 0.02).unwrap());
        assert!(s.is_occluded(Point::new(2.0, 0.0), 0.02).is_err());
    }

    #[test]
    fn pruning_keeps_reference_and_window() {
        let e = ImageExtent::new(1, 1).unwrap();
        let mut h = StateHistory::new();
        for f in 1..=20 {
            let mut s = ChainState::identity(e);
            s.frame = f;
            h.insert(s);
        }
        h.prune(20, &ChainConfig::new(0.02));
        assert_eq!(h.frames().collect::<Vec<_>>(), vec![1, 13, 14, 15, 16, 17, 18, 19, 20]);
        for j in 21..=22 {
            for d in delta_schedule(j, 5).unwrap() {
                if j - d <= 20 {
                    assert!(h.get(j - d).is_some(), "frame {} needed by {}", j - d, j);
                }
            }
        }
    }
}
