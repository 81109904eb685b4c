//! Query-first evaluation of point tracks.
//!
//! Every metric counts `(point, frame)` pairs over frames `2..=N`; the query
//! frame is excluded. Position errors are measured after rescaling both the
//! prediction and the ground truth to the evaluation resolution, and a pair
//! is "within" threshold `t` when its error is strictly below `t`.
//!
//! - occlusion accuracy: fraction of pairs whose predicted visibility matches GT
//! - `delta_at[t]`: among GT-visible pairs, fraction within `t`
//! - Jaccard at `t`: `TP / (TP + FP + FN)` with
//!   `TP` = predicted visible, GT visible, within;
//!   `FP` = predicted visible and (GT occluded or not within);
//!   `FN` = GT visible and (predicted occluded or not within)
//! - AJ and `delta_avg`: means over the thresholds

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, ChainState};
use crate::geometry::{ImageExtent, Point};
use crate::tracks::{GroundTruth, Observation, TrackSet};

pub const DEFAULT_THRESHOLDS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("record {0} has no ground truth")]
    MissingGt(usize),
    #[error("no ground-truth-visible pairs to evaluate")]
    EmptyEvalSet,
    #[error("denominator is zero for {0}")]
    DegenerateDenominator(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

/// Prediction and (optional) ground truth of one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub query: Point,
    /// Frames `1..=N`.
    pub predicted: Vec<Observation>,
    pub truth: Option<Vec<Observation>>,
}

/// Pairs predictions with ground truth by track id.
pub fn join_records(pred: &TrackSet, gt: &GroundTruth) -> Result<Vec<TrackRecord>> {
    if pred.frames != gt.frames {
        return Err(MetricsError::ShapeMismatch(format!(
            "prediction has {} frames, ground truth {}",
            pred.frames, gt.frames
        )));
    }
    if pred.tracks.len() != gt.tracks.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "prediction has {} tracks, ground truth {}",
            pred.tracks.len(),
            gt.tracks.len()
        )));
    }
    let by_id: std::collections::HashMap<u64, &crate::tracks::GtTrack> = gt.tracks.iter().map(|t| (t.id, t)).collect();
    pred.tracks
        .iter()
        .map(|t| {
            let g = by_id
                .get(&t.id)
                .ok_or_else(|| MetricsError::ShapeMismatch(format!("point id {} has no ground truth", t.id)))?;
            if t.points.len() != pred.frames || g.points.len() != gt.frames {
                return Err(MetricsError::ShapeMismatch(format!(
                    "point id {} has incomplete frames",
                    t.id
                )));
            }
            Ok(TrackRecord {
                query: t.query,
                predicted: t.points.iter().map(|p| p.observation()).collect(),
                truth: Some(g.points.clone()),
            })
        })
        .collect()
}

/// Resolution at which pixel thresholds are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EvalResolution {
    /// Thresholds in pixels of the tracked sequence.
    Native,
    /// Coordinates rescaled to this extent first.
    Rescaled(ImageExtent),
}

impl Default for EvalResolution {
    fn default() -> Self {
        EvalResolution::Rescaled(ImageExtent::new(256, 256).expect("non-empty"))
    }
}

impl std::fmt::Display for EvalResolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalResolution::Native => f.write_str("native"),
            EvalResolution::Rescaled(e) => write!(f, "{e}"),
        }
    }
}

impl std::str::FromStr for EvalResolution {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "native" {
            return Ok(EvalResolution::Native);
        }
        let bad = || MetricsError::InvalidConfig(format!("resolution {s:?} is neither `native` nor WxH"));
        let (w, h) = s.split_once('x').ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        Ok(EvalResolution::Rescaled(ImageExtent::new(w, h).map_err(|_| bad())?))
    }
}

impl TryFrom<String> for EvalResolution {
    type Error = MetricsError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EvalResolution> for String {
    fn from(r: EvalResolution) -> String {
        r.to_string()
    }
}

/// Thresholds plus the coordinate scale for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    thresholds: Vec<f64>,
    scale: [f64; 2],
    resolution: EvalResolution,
}

impl EvalSettings {
    pub fn new(thresholds: Vec<f64>, resolution: EvalResolution, source: ImageExtent) -> Result<Self> {
        if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(MetricsError::InvalidConfig(format!(
                "thresholds must be positive, got {thresholds:?}"
            )));
        }
        let scale = match resolution {
            EvalResolution::Native => [1.0, 1.0],
            EvalResolution::Rescaled(e) => [
                e.width() as f64 / source.width() as f64,
                e.height() as f64 / source.height() as f64,
            ],
        };
        Ok(Self {
            thresholds,
            scale,
            resolution,
        })
    }

    /// Default thresholds, no rescaling.
    pub fn native() -> Self {
        Self {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            scale: [1.0, 1.0],
            resolution: EvalResolution::Native,
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn resolution(&self) -> EvalResolution {
        self.resolution
    }

    pub fn error(&self, pred: Point, truth: Point) -> f64 {
        ((pred.x - truth.x) * self.scale[0]).hypot((pred.y - truth.y) * self.scale[1])
    }
}

/// An integer fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }
}

/// One evaluated `(point, frame)` pair.
#[derive(Debug, Clone, Copy)]
struct Pair {
    pred_visible: bool,
    gt_visible: bool,
    error: f64,
}

fn pairs<'a>(records: &'a [TrackRecord], settings: Option<&'a EvalSettings>) -> Result<Vec<Pair>> {
    let mut out = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        let truth = rec.truth.as_ref().ok_or(MetricsError::MissingGt(r))?;
        if truth.len() != rec.predicted.len() {
            return Err(MetricsError::ShapeMismatch(format!(
                "record {r}: {} predicted frames vs {} ground-truth frames",
                rec.predicted.len(),
                truth.len()
            )));
        }
        for (p, g) in rec.predicted.iter().zip(truth).skip(1) {
            let error = settings.map_or(f64::NAN, |s| s.error(p.position, g.position));
            out.push(Pair {
                pred_visible: p.visible,
                gt_visible: g.visible,
                error,
            });
        }
    }
    Ok(out)
}

/// Fraction of pairs with correct visibility.
pub fn occlusion_accuracy(records: &[TrackRecord]) -> Result<Ratio> {
    let ps = pairs(records, None)?;
    Ok(Ratio {
        num: ps.iter().filter(|p| p.pred_visible == p.gt_visible).count() as u64,
        den: ps.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRatio {
    pub threshold: f64,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionAccuracy {
    pub delta_at: Vec<ThresholdRatio>,
    pub delta_avg: f64,
}

impl PositionAccuracy {
    pub fn at(&self, threshold: f64) -> Option<f64> {
        self.delta_at
            .iter()
            .find(|t| t.threshold == threshold)
            .and_then(|t| t.ratio.value())
    }
}

fn position_accuracy_of(ps: &[Pair], settings: &EvalSettings) -> Result<PositionAccuracy> {
    let visible: Vec<f64> = ps.iter().filter(|p| p.gt_visible).map(|p| p.error).collect();
    if visible.is_empty() {
        return Err(MetricsError::EmptyEvalSet);
    }
    let delta_at: Vec<ThresholdRatio> = settings
        .thresholds
        .iter()
        .map(|&t| ThresholdRatio {
            threshold: t,
            ratio: Ratio {
                num: visible.iter().filter(|&&e| e < t).count() as u64,
                den: visible.len() as u64,
            },
        })
        .collect();
    let delta_avg = delta_at.iter().map(|t| t.ratio.value().unwrap_or(0.0)).sum::<f64>() / delta_at.len() as f64;
    Ok(PositionAccuracy { delta_at, delta_avg })
}

/// Fraction of GT-visible pairs within each threshold, and their mean.
pub fn position_accuracy(records: &[TrackRecord], settings: &EvalSettings) -> Result<PositionAccuracy> {
    position_accuracy_of(&pairs(records, Some(settings))?, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdJaccard {
    pub threshold: f64,
    pub counts: Confusion,
    pub jaccard: f64,
    /// `TP + FP + FN = 0`; reported as 1.0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageJaccard {
    pub per_threshold: Vec<ThresholdJaccard>,
    pub average: f64,
}

fn jaccard_of(ps: &[Pair], settings: &EvalSettings) -> AverageJaccard {
    let per_threshold: Vec<ThresholdJaccard> = settings
        .thresholds
        .iter()
        .map(|&t| {
            let mut c = Confusion::default();
            for p in ps {
                let within = p.error < t;
                if p.pred_visible && p.gt_visible && within {
                    c.true_positives += 1;
                }
                if p.pred_visible && (!p.gt_visible || !within) {
                    c.false_positives += 1;
                }
                if p.gt_visible && (!p.pred_visible || !within) {
                    c.false_negatives += 1;
                }
            }
            let den = c.true_positives + c.false_positives + c.false_negatives;
            ThresholdJaccard {
                threshold: t,
                counts: c,
                jaccard: if den == 0 {
                    1.0
                } else {
                    c.true_positives as f64 / den as f64
                },
                degenerate: den == 0,
            }
        })
        .collect();
    let average = per_threshold.iter().map(|t| t.jaccard).sum::<f64>() / per_threshold.len() as f64;
    AverageJaccard { per_threshold, average }
}

pub fn average_jaccard(records: &[TrackRecord], settings: &EvalSettings) -> Result<AverageJaccard> {
    Ok(jaccard_of(&pairs(records, Some(settings))?, settings))
}

/// Precision and recall of the "visible" class.
pub fn visibility_precision_recall(records: &[TrackRecord]) -> Result<(Ratio, Ratio)> {
    let ps = pairs(records, None)?;
    Ok(precision_recall_of(&ps))
}

fn precision_recall_of(ps: &[Pair]) -> (Ratio, Ratio) {
    let tp = ps.iter().filter(|p| p.pred_visible && p.gt_visible).count() as u64;
    let fp = ps.iter().filter(|p| p.pred_visible && !p.gt_visible).count() as u64;
    let fneg = ps.iter().filter(|p| !p.pred_visible && p.gt_visible).count() as u64;
    (
        Ratio { num: tp, den: tp + fp },
        Ratio {
            num: tp,
            den: tp + fneg,
        },
    )
}

/// Position accuracy on the predicted-visible pairs, the predicted-occluded
/// pairs, and all pairs. A slice without GT-visible pairs is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicedAccuracy {
    pub visible: Option<PositionAccuracy>,
    pub occluded: Option<PositionAccuracy>,
    pub all: PositionAccuracy,
}

pub fn slice_by_predicted_visibility(records: &[TrackRecord], settings: &EvalSettings) -> Result<SlicedAccuracy> {
    let ps = pairs(records, Some(settings))?;
    let all = position_accuracy_of(&ps, settings)?;
    let slice = |want: bool| {
        let sub: Vec<Pair> = ps.iter().copied().filter(|p| p.pred_visible == want).collect();
        match position_accuracy_of(&sub, settings) {
            Ok(acc) => Ok(Some(acc)),
            Err(MetricsError::EmptyEvalSet) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(SlicedAccuracy {
        visible: slice(true)?,
        occluded: slice(false)?,
        all,
    })
}

/// Everything [`evaluate`] computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub resolution: String,
    pub occlusion_accuracy: f64,
    pub delta_avg: f64,
    pub delta_at: Vec<ThresholdRatio>,
    pub average_jaccard: f64,
    pub jaccard_at: Vec<ThresholdJaccard>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub pairs: u64,
    pub gt_visible_pairs: u64,
    pub pred_visible_pairs: u64,
    pub occlusion_correct: u64,
    pub visibility_counts: Confusion,
}

pub fn evaluate(records: &[TrackRecord], settings: &EvalSettings) -> Result<EvalReport> {
    let ps = pairs(records, Some(settings))?;
    let oa = Ratio {
        num: ps.iter().filter(|p| p.pred_visible == p.gt_visible).count() as u64,
        den: ps.len() as u64,
    };
    let pos = position_accuracy_of(&ps, settings)?;
    let aj = jaccard_of(&ps, settings);
    let (precision, recall) = precision_recall_of(&ps);
    Ok(EvalReport {
        resolution: settings.resolution.to_string(),
        occlusion_accuracy: oa.value().ok_or(MetricsError::EmptyEvalSet)?,
        delta_avg: pos.delta_avg,
        delta_at: pos.delta_at,
        average_jaccard: aj.average,
        jaccard_at: aj.per_threshold,
        precision: precision.value(),
        recall: recall.value(),
        pairs: ps.len() as u64,
        gt_visible_pairs: ps.iter().filter(|p| p.gt_visible).count() as u64,
        pred_visible_pairs: ps.iter().filter(|p| p.pred_visible).count() as u64,
        occlusion_correct: oa.num,
        visibility_counts: Confusion {
            true_positives: precision.num,
            false_positives: precision.den - precision.num,
            false_negatives: recall.den - recall.num,
        },
    })
}

fn threshold_key(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

impl EvalReport {
    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
        kv("resolution", self.resolution.clone());
        kv("oa", self.occlusion_accuracy.to_string());
        kv("delta_avg", self.delta_avg.to_string());
        for t in &self.delta_at {
            kv(&format!("delta_{}", threshold_key(t.threshold)), opt(t.ratio.value()));
        }
        kv("aj", self.average_jaccard.to_string());
        for t in &self.jaccard_at {
            kv(
                &format!("jaccard_{}", threshold_key(t.threshold)),
                t.jaccard.to_string(),
            );
            if t.degenerate {
                kv(
                    &format!("jaccard_{}_degenerate", threshold_key(t.threshold)),
                    "true".into(),
                );
            }
        }
        kv("precision", opt(self.precision));
        kv("recall", opt(self.recall));
        kv("pairs", self.pairs.to_string());
        kv("gt_visible_pairs", self.gt_visible_pairs.to_string());
        kv("pred_visible_pairs", self.pred_visible_pairs.to_string());
        out
    }
}

/// Position and visibility of a reference query read off a dense state.
///
/// Position is the bilinear sample of the position map; the point is visible
/// when the sampled occlusion is at most `occlusion_threshold`.
pub fn sample_dense_prediction(
    state: &ChainState,
    query: Point,
    occlusion_threshold: f64,
) -> Result<(Point, bool), ChainError> {
    let position = state.sample_position(query)?;
    let occlusion = state.sample_occlusion(query)?;
    Ok((position, occlusion <= occlusion_threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImageExtent;

    fn obs(x: f64, visible: bool) -> Observation {
        Observation::new(Point::new(x, 0.0), visible)
    }

    /// One record with a frame-1 placeholder followed by the given pairs.
    fn record(pairs: &[(f64, bool, f64, bool)]) -> TrackRecord {
        let mut predicted = vec![obs(0.0, true)];
        let mut truth = vec![obs(0.0, true)];
        for &(px, pv, gx, gv) in pairs {
            predicted.push(obs(px, pv));
            truth.push(obs(gx, gv));
        }
        TrackRecord {
            query: Point::new(0.0, 0.0),
            predicted,
            truth: Some(truth),
        }
    }

    #[test]
    fn oa_examples() {
        let perfect = [record(&[(1.0, true, 1.0, true), (1.0, false, 1.0, false)])];
        assert_eq!(occlusion_accuracy(&perfect).unwrap().value(), Some(1.0));
        let negated = [record(&[(1.0, false, 1.0, true), (1.0, true, 1.0, false)])];
        assert_eq!(occlusion_accuracy(&negated).unwrap().value(), Some(0.0));
        let recs: Vec<TrackRecord> = [true, true, true, false]
            .iter()
            .map(|&ok| record(&[(0.0, ok, 0.0, true)]))
            .collect();
        assert_eq!(occlusion_accuracy(&recs).unwrap().value(), Some(0.75));
    }

    #[test]
    fn delta_examples() {
        let s = EvalSettings::native();
        let zero = [record(&[(2.0, true, 2.0, true)])];
        let acc = position_accuracy(&zero, &s).unwrap();
        assert_eq!(acc.delta_avg, 1.0);
        let three = [record(&[(3.0, true, 0.0, true)])];
        let acc = position_accuracy(&three, &s).unwrap();
        let got: Vec<f64> = acc.delta_at.iter().map(|t| t.ratio.value().unwrap()).collect();
        assert_eq!(got, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!((acc.delta_avg - 0.6).abs() < 1e-15);
        let two = [record(&[(0.5, true, 0.0, true), (20.0, true, 0.0, true)])];
        assert_eq!(position_accuracy(&two, &s).unwrap().delta_avg, 0.5);
    }

    #[test]
    fn threshold_is_strict() {
        let s = EvalSettings::native();
        let at_one = [record(&[(1.0, true, 0.0, true)])];
        assert_eq!(position_accuracy(&at_one, &s).unwrap().at(1.0), Some(0.0));
        assert_eq!(position_accuracy(&at_one, &s).unwrap().at(2.0), Some(1.0));
    }

    #[test]
    fn occluded_gt_is_excluded_from_delta() {
        let s = EvalSettings::native();
        let r = [record(&[(0.0, true, 0.0, true), (100.0, true, 0.0, false)])];
        assert_eq!(position_accuracy(&r, &s).unwrap().delta_avg, 1.0);
        let none = [record(&[(0.0, true, 0.0, false)])];
        assert_eq!(position_accuracy(&none, &s), Err(MetricsError::EmptyEvalSet));
    }

    #[test]
    fn missing_gt() {
        let mut r = record(&[(0.0, true, 0.0, true)]);
        r.truth = None;
        assert_eq!(occlusion_accuracy(&[r]), Err(MetricsError::MissingGt(0)));
    }

    #[test]
    fn jaccard_examples() {
        let s = EvalSettings::native();
        let perfect = [record(&[(1.0, true, 1.0, true), (5.0, false, 1.0, false)])];
        assert_eq!(average_jaccard(&perfect, &s).unwrap().average, 1.0);
        let all_occluded = [record(&[(1.0, false, 1.0, true), (1.0, false, 1.0, true)])];
        assert_eq!(average_jaccard(&all_occluded, &s).unwrap().average, 0.0);
        // errors 0.5 and 3.0, both visible: t=1,2 -> 1/(1+1+1); t=4,8,16 -> 1
        let two = [record(&[(0.5, true, 0.0, true)]), record(&[(3.0, true, 0.0, true)])];
        let aj = average_jaccard(&two, &s).unwrap();
        assert_eq!(
            aj.per_threshold[0].counts,
            Confusion {
                true_positives: 1,
                false_positives: 1,
                false_negatives: 1
            }
        );
        assert!((aj.average - (2.0 / 3.0 + 3.0) / 5.0).abs() < 1e-15);
    }

    #[test]
    fn jaccard_degenerate_denominator() {
        let s = EvalSettings::native();
        let r = [record(&[(0.0, false, 0.0, false)])];
        let aj = average_jaccard(&r, &s).unwrap();
        assert!(aj.per_threshold.iter().all(|t| t.degenerate && t.jaccard == 1.0));
    }

    #[test]
    fn precision_recall_examples() {
        let both = [record(&[(0.0, true, 0.0, true), (0.0, false, 0.0, false)])];
        let (p, r) = visibility_precision_recall(&both).unwrap();
        assert_eq!((p.value(), r.value()), (Some(1.0), Some(1.0)));
        let all_vis = [record(&[
            (0.0, true, 0.0, true),
            (0.0, true, 0.0, false),
            (0.0, true, 0.0, false),
        ])];
        let (p, r) = visibility_precision_recall(&all_vis).unwrap();
        assert_eq!(r.value(), Some(1.0));
        assert_eq!(p.value(), Some(1.0 / 3.0));
        let mixed = [record(&[
            (0.0, true, 0.0, true),
            (0.0, true, 0.0, true),
            (0.0, false, 0.0, true),
            (0.0, true, 0.0, false),
        ])];
        let (p, r) = visibility_precision_recall(&mixed).unwrap();
        assert_eq!((p.num, p.den, r.num, r.den), (2, 3, 2, 3));
        let none_vis = [record(&[(0.0, false, 0.0, false)])];
        let (p, _) = visibility_precision_recall(&none_vis).unwrap();
        assert_eq!(p.value(), None);
    }

    #[test]
    fn slices() {
        let s = EvalSettings::native();
        let all_vis = [record(&[(0.0, true, 0.0, true), (3.0, true, 0.0, true)])];
        let sl = slice_by_predicted_visibility(&all_vis, &s).unwrap();
        assert_eq!(sl.visible.as_ref(), Some(&sl.all));
        assert!(sl.occluded.is_none());
        // calibrated: large errors exactly where the predictor says occluded
        let calibrated = [record(&[
            (0.2, true, 0.0, true),
            (0.5, true, 0.0, true),
            (1.5, true, 0.0, true),
            (30.0, false, 0.0, true),
            (12.0, false, 0.0, true),
            (5.0, false, 0.0, true),
        ])];
        let sl = slice_by_predicted_visibility(&calibrated, &s).unwrap();
        assert!(sl.visible.unwrap().delta_avg >= sl.all.delta_avg);
        assert!(sl.occluded.unwrap().delta_avg <= sl.all.delta_avg);
    }

    #[test]
    fn rescaling() {
        let src = ImageExtent::new(64, 32).unwrap();
        let s = EvalSettings::new(DEFAULT_THRESHOLDS.to_vec(), EvalResolution::default(), src).unwrap();
        // 1 px in x at 64 wide -> 4 px at 256 wide
        assert_eq!(s.error(Point::new(1.0, 0.0), Point::new(0.0, 0.0)), 4.0);
        assert_eq!(s.error(Point::new(0.0, 1.0), Point::new(0.0, 0.0)), 8.0);
        assert_eq!(
            "512x512".parse::<EvalResolution>().unwrap(),
            EvalResolution::Rescaled(ImageExtent::new(512, 512).unwrap())
        );
        assert_eq!("native".parse::<EvalResolution>().unwrap(), EvalResolution::Native);
        assert!("512".parse::<EvalResolution>().is_err());
        assert!(EvalSettings::new(vec![], EvalResolution::Native, src).is_err());
    }

    #[test]
    fn dense_sampling() {
        let e = ImageExtent::new(2, 1).unwrap();
        let state =
            ChainState::from_parts(e, 3, vec![0.0, 2.0], vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.04]).unwrap();
        assert_eq!(
            sample_dense_prediction(&state, Point::new(1.0, 0.0), 0.02).unwrap(),
            (Point::new(2.0, 0.0), false)
        );
        assert_eq!(
            sample_dense_prediction(&state, Point::new(0.5, 0.0), 0.02).unwrap(),
            (Point::new(1.0, 0.0), true)
        );
        assert!(sample_dense_prediction(&state, Point::new(1.5, 0.0), 0.02).is_err());
    }

    #[test]
    fn report_text() {
        let s = EvalSettings::native();
        let r = [record(&[(3.0, true, 0.0, true)])];
        let text = evaluate(&r, &s).unwrap().to_key_values();
        assert!(text.contains("delta_avg=0.6"));
        assert!(text.contains("delta_4=1\n"));
        assert!(text.contains("resolution=native"));
    }
}
