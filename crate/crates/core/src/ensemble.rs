//! Combining two trackers: one trusted for visibility (A), one for position (B).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::FlowProvider;
use crate::chain::{ChainConfig, ChainError};
use crate::geometry::Point;
use crate::tracks::{track_queries, Track, TrackPoint, TrackSet, TrackerTag};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown ensemble strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleStrategy {
    AOnly,
    BOnly,
    /// Visibility from A, position from B.
    PositionBOcclusionA,
    /// Visibility from A; position from B where B says visible, else from A.
    SelectiveBPosition,
}

impl EnsembleStrategy {
    pub const ALL: [EnsembleStrategy; 4] = [
        EnsembleStrategy::AOnly,
        EnsembleStrategy::BOnly,
        EnsembleStrategy::PositionBOcclusionA,
        EnsembleStrategy::SelectiveBPosition,
    ];
}

impl fmt::Display for EnsembleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleStrategy::AOnly => "a-only",
            EnsembleStrategy::BOnly => "b-only",
            EnsembleStrategy::PositionBOcclusionA => "position-b-occlusion-a",
            EnsembleStrategy::SelectiveBPosition => "selective-b-position",
        })
    }
}

impl FromStr for EnsembleStrategy {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, EnsembleError> {
        EnsembleStrategy::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| EnsembleError::UnknownStrategy(s.to_string()))
    }
}

fn check_shapes(a: &TrackSet, b: &TrackSet) -> Result<(), EnsembleError> {
    if a.extent != b.extent {
        return Err(EnsembleError::ShapeMismatch(format!(
            "extents {} and {}",
            a.extent, b.extent
        )));
    }
    if a.frames != b.frames {
        return Err(EnsembleError::ShapeMismatch(format!(
            "{} and {} frames",
            a.frames, b.frames
        )));
    }
    if a.tracks.len() != b.tracks.len() {
        return Err(EnsembleError::ShapeMismatch(format!(
            "{} and {} query points",
            a.tracks.len(),
            b.tracks.len()
        )));
    }
    for (ta, tb) in a.tracks.iter().zip(&b.tracks) {
        if ta.id != tb.id || ta.query != tb.query {
            return Err(EnsembleError::ShapeMismatch(format!(
                "query {} at {:?} vs query {} at {:?}",
                ta.id, ta.query, tb.id, tb.query
            )));
        }
        if ta.points.len() != a.frames || tb.points.len() != b.frames {
            return Err(EnsembleError::ShapeMismatch(format!(
                "query {} has incomplete frames",
                ta.id
            )));
        }
    }
    Ok(())
}

fn merge(a: &TrackPoint, b: &TrackPoint, strategy: EnsembleStrategy) -> TrackPoint {
    let position_from = |p: &TrackPoint| TrackPoint {
        position: p.position,
        visible: a.visible,
        variance: p.variance,
        source: p.source,
    };
    match strategy {
        EnsembleStrategy::AOnly => *a,
        EnsembleStrategy::BOnly => *b,
        EnsembleStrategy::PositionBOcclusionA => position_from(b),
        EnsembleStrategy::SelectiveBPosition if b.visible => position_from(b),
        EnsembleStrategy::SelectiveBPosition => position_from(a),
    }
}

/// Combines the outputs of tracker A and tracker B point by point.
///
/// The returned points keep the `source` tag and the variance of whichever
/// tracker supplied the position.
pub fn combine(a: &TrackSet, b: &TrackSet, strategy: EnsembleStrategy) -> Result<TrackSet, EnsembleError> {
    check_shapes(a, b)?;
    let tracks = a
        .tracks
        .iter()
        .zip(&b.tracks)
        .map(|(ta, tb)| Track {
            id: ta.id,
            query: ta.query,
            points: ta
                .points
                .iter()
                .zip(&tb.points)
                .map(|(pa, pb)| merge(pa, pb, strategy))
                .collect(),
        })
        .collect();
    Ok(TrackSet {
        extent: a.extent,
        frames: a.frames,
        tracks,
    })
}

/// One tracker of an ensemble.
pub struct TrackerSpec<'a> {
    pub provider: &'a dyn FlowProvider,
    pub config: ChainConfig,
}

fn run_one(
    spec: &TrackerSpec<'_>,
    frames: Option<usize>,
    queries: &[Point],
    tag: TrackerTag,
) -> Result<TrackSet, ChainError> {
    track_queries(spec.provider, spec.config, frames, queries, tag, |_| Ok(()))
}

/// Runs both trackers concurrently over the first `frames` frames (all by
/// default) and returns their raw predictions.
pub fn run_pair(
    a: &TrackerSpec<'_>,
    b: &TrackerSpec<'_>,
    frames: Option<usize>,
    queries: &[Point],
) -> Result<(TrackSet, TrackSet), EnsembleError> {
    if a.provider.extent() != b.provider.extent() {
        return Err(EnsembleError::ShapeMismatch(format!(
            "tracker extents {} and {}",
            a.provider.extent(),
            b.provider.extent()
        )));
    }
    let (ra, rb) = rayon::join(
        || run_one(a, frames, queries, TrackerTag::A),
        || run_one(b, frames, queries, TrackerTag::B),
    );
    Ok((ra?, rb?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImageExtent;

    fn set(tag: TrackerTag, pos: (f64, f64), visible: &[bool]) -> TrackSet {
        TrackSet {
            extent: ImageExtent::new(16, 16).unwrap(),
            frames: visible.len(),
            tracks: vec![Track {
                id: 0,
                query: Point::new(1.0, 1.0),
                points: visible
                    .iter()
                    .map(|&v| TrackPoint {
                        position: Point::new(pos.0, pos.1),
                        visible: v,
                        variance: if tag == TrackerTag::A { 2.0 } else { 1.0 },
                        source: tag,
                    })
                    .collect(),
            }],
        }
    }

    #[test]
    fn pass_through() {
        let a = set(TrackerTag::A, (9.0, 9.0), &[true, false]);
        let b = set(TrackerTag::B, (5.0, 5.0), &[true, true]);
        assert_eq!(combine(&a, &b, EnsembleStrategy::AOnly).unwrap(), a);
        assert_eq!(combine(&a, &b, EnsembleStrategy::BOnly).unwrap(), b);
    }

    #[test]
    fn position_b_occlusion_a() {
        let a = set(TrackerTag::A, (9.0, 9.0), &[true, true]);
        let b = set(TrackerTag::B, (5.0, 5.0), &[true, false]);
        let c = combine(&a, &b, EnsembleStrategy::PositionBOcclusionA).unwrap();
        for p in &c.tracks[0].points {
            assert_eq!(p.position, Point::new(5.0, 5.0));
            assert!(p.visible);
            assert_eq!(p.source, TrackerTag::B);
        }
    }

    #[test]
    fn selective_prefers_a_where_b_is_occluded() {
        let a = set(TrackerTag::A, (9.0, 9.0), &[true, false]);
        let b = set(TrackerTag::B, (5.0, 5.0), &[false, true]);
        let c = combine(&a, &b, EnsembleStrategy::SelectiveBPosition).unwrap();
        let pts = &c.tracks[0].points;
        assert_eq!(
            (pts[0].position, pts[0].visible, pts[0].source),
            (Point::new(9.0, 9.0), true, TrackerTag::A)
        );
        assert_eq!(pts[0].variance, 2.0);
        assert_eq!(
            (pts[1].position, pts[1].visible, pts[1].source),
            (Point::new(5.0, 5.0), false, TrackerTag::B)
        );
    }

    #[test]
    fn selective_degenerate_cases() {
        let a = set(TrackerTag::A, (9.0, 9.0), &[true, false, true]);
        let all_vis = set(TrackerTag::B, (5.0, 5.0), &[true, true, true]);
        assert_eq!(
            combine(&a, &all_vis, EnsembleStrategy::SelectiveBPosition).unwrap(),
            combine(&a, &all_vis, EnsembleStrategy::PositionBOcclusionA).unwrap()
        );
        let none_vis = set(TrackerTag::B, (5.0, 5.0), &[false, false, false]);
        assert_eq!(combine(&a, &none_vis, EnsembleStrategy::SelectiveBPosition).unwrap(), a);
    }

    #[test]
    fn shape_mismatch() {
        let a = set(TrackerTag::A, (9.0, 9.0), &[true, true]);
        let b = set(TrackerTag::B, (5.0, 5.0), &[true, true, true]);
        assert!(matches!(
            combine(&a, &b, EnsembleStrategy::AOnly),
            Err(EnsembleError::ShapeMismatch(_))
        ));
        let mut c = set(TrackerTag::B, (5.0, 5.0), &[true, true]);
        c.tracks[0].id = 4;
        assert!(matches!(
            combine(&a, &c, EnsembleStrategy::AOnly),
            Err(EnsembleError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn strategy_names() {
        for s in EnsembleStrategy::ALL {
            assert_eq!(s.to_string().parse::<EnsembleStrategy>().unwrap(), s);
        }
        assert!("both".parse::<EnsembleStrategy>().is_err());
    }
}
