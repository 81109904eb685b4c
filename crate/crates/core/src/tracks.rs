//! Sparse trajectories: what trackers emit for query points and what ground
//! truth provides for them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::FlowProvider;
use crate::chain::{ChainConfig, ChainError, ChainState, Tracker};
use crate::geometry::{ImageExtent, Point};

/// Position and visibility of a point at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub position: Point,
    pub visible: bool,
}

impl Observation {
    pub fn new(position: Point, visible: bool) -> Self {
        Self { position, visible }
    }
}

/// Which tracker of an ensemble produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerTag {
    #[default]
    A,
    B,
}

impl fmt::Display for TrackerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackerTag::A => "a",
            TrackerTag::B => "b",
        })
    }
}

impl FromStr for TrackerTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "a" | "A" => Ok(TrackerTag::A),
            "b" | "B" => Ok(TrackerTag::B),
            other => Err(format!("unknown tracker tag {other:?}")),
        }
    }
}

/// One predicted point at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub position: Point,
    pub visible: bool,
    /// Chained variance reported by the tracker that supplied `position`.
    pub variance: f64,
    pub source: TrackerTag,
}

impl TrackPoint {
    pub fn observation(&self) -> Observation {
        Observation::new(self.position, self.visible)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub query: Point,
    /// Frames `1..=N` in order.
    pub points: Vec<TrackPoint>,
}

/// Predicted trajectories for a set of frame-1 queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub extent: ImageExtent,
    pub frames: usize,
    pub tracks: Vec<Track>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtTrack {
    pub id: u64,
    pub query: Point,
    pub points: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub extent: ImageExtent,
    pub frames: usize,
    pub tracks: Vec<GtTrack>,
}

impl GroundTruth {
    pub fn queries(&self) -> Vec<Point> {
        self.tracks.iter().map(|t| t.query).collect()
    }
}

fn empty_tracks(queries: &[Point], frames: usize) -> Vec<Track> {
    queries
        .iter()
        .enumerate()
        .map(|(id, &q)| Track {
            id: id as u64,
            query: q,
            points: Vec::with_capacity(frames),
        })
        .collect()
}

fn push_frame(
    tracks: &mut [Track],
    state: &ChainState,
    occlusion_threshold: f64,
    source: TrackerTag,
) -> Result<(), ChainError> {
    for track in tracks {
        let (position, visible) = crate::metrics::sample_dense_prediction(state, track.query, occlusion_threshold)?;
        track.points.push(TrackPoint {
            position,
            visible,
            variance: state.sample_variance(track.query)?,
            source,
        });
    }
    Ok(())
}

/// Samples dense per-frame states at each query point.
///
/// `states` must hold frames `1..=N` in order. Ids are assigned in query order.
pub fn predict_tracks<S: AsRef<ChainState>>(
    states: &[S],
    queries: &[Point],
    occlusion_threshold: f64,
    source: TrackerTag,
) -> Result<TrackSet, ChainError> {
    let first = states.first().ok_or(ChainError::MissingState(1))?.as_ref();
    let extent = first.extent();
    let mut tracks = empty_tracks(queries, states.len());
    for (n, state) in states.iter().enumerate() {
        let state = state.as_ref();
        if state.frame() != n + 1 {
            return Err(ChainError::MissingState(n + 1));
        }
        push_frame(&mut tracks, state, occlusion_threshold, source)?;
    }
    Ok(TrackSet {
        extent,
        frames: states.len(),
        tracks,
    })
}

/// Tracks `queries` through the first `frames` frames (all by default)
/// without keeping every dense state. `visit` sees each state as it is made.
pub fn track_queries<P, E, F>(
    provider: P,
    cfg: ChainConfig,
    frames: Option<usize>,
    queries: &[Point],
    source: TrackerTag,
    mut visit: F,
) -> Result<TrackSet, E>
where
    P: FlowProvider,
    E: From<ChainError>,
    F: FnMut(&ChainState) -> Result<(), E>,
{
    let extent = provider.extent();
    let occlusion_threshold = cfg.occlusion_threshold;
    let tracker = Tracker::with_frames(provider, cfg, frames)?;
    let mut tracks = empty_tracks(queries, frames.unwrap_or(0));
    let mut count = 0;
    for state in tracker {
        let state = state?;
        push_frame(&mut tracks, &state, occlusion_threshold, source)?;
        visit(&state)?;
        count += 1;
    }
    Ok(TrackSet {
        extent,
        frames: count,
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::track;
    use crate::geometry::ImageExtent;
    use crate::synth::{OracleProvider, SceneSpec};

    #[test]
    fn streaming_matches_batch() {
        let scene = SceneSpec::translating(ImageExtent::new(12, 10).unwrap(), 6, 0.5, 0.25).unwrap();
        let p = OracleProvider::new(scene);
        let cfg = ChainConfig::new(0.02);
        let queries = [Point::new(1.0, 1.0), Point::new(3.5, 2.25)];
        let states = track(6, &p, &cfg).unwrap();
        let batch = predict_tracks(&states, &queries, 0.02, TrackerTag::A).unwrap();
        let mut seen = 0;
        let streamed = track_queries(&p, cfg, None, &queries, TrackerTag::A, |_| {
            seen += 1;
            Ok::<_, ChainError>(())
        })
        .unwrap();
        assert_eq!(streamed, batch);
        assert_eq!(seen, 6);
        assert_eq!(batch.tracks[1].points[5].position, Point::new(6.0, 3.5));
    }

    #[test]
    fn query_outside_the_image() {
        let p = OracleProvider::new(SceneSpec::static_scene(ImageExtent::new(4, 4).unwrap(), 2).unwrap());
        let r = track_queries(
            &p,
            ChainConfig::new(0.02),
            None,
            &[Point::new(4.0, 0.0)],
            TrackerTag::A,
            |_| Ok::<_, ChainError>(()),
        );
        assert!(r.is_err());
    }

    #[test]
    fn tags_round_trip() {
        assert_eq!("b".parse::<TrackerTag>().unwrap(), TrackerTag::B);
        assert_eq!(TrackerTag::A.to_string(), "a");
        assert!("c".parse::<TrackerTag>().is_err());
    }
}
