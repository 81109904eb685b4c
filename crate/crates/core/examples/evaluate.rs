//! Scoring predictions against ground truth by hand: two points over four
//! frames, one of them lost behind an occluder.
//!
//! ```bash
//! cargo run --example evaluate
//! ```

use mft::geometry::{ImageExtent, Point};
use mft::metrics::{evaluate, join_records, slice_by_predicted_visibility, EvalResolution, EvalSettings};
use mft::tracks::{GroundTruth, GtTrack, Observation, Track, TrackPoint, TrackSet, TrackerTag};

fn obs(x: f64, y: f64, visible: bool) -> Observation {
    Observation::new(Point::new(x, y), visible)
}

pub fn run_example() -> mft::Result<String> {
    let extent = ImageExtent::new(64, 64)?;
    let truth = [
        vec![
            obs(10.0, 10.0, true),
            obs(12.0, 10.0, true),
            obs(14.0, 10.0, true),
            obs(16.0, 10.0, true),
        ],
        vec![
            obs(40.0, 30.0, true),
            obs(38.0, 31.0, false),
            obs(36.0, 32.0, false),
            obs(34.0, 33.0, true),
        ],
    ];
    let predicted = [
        vec![
            obs(10.0, 10.0, true),
            obs(12.5, 10.0, true),
            obs(15.5, 10.0, true),
            obs(19.0, 14.0, true),
        ],
        vec![
            obs(40.0, 30.0, true),
            obs(38.0, 31.0, true),
            obs(30.0, 30.0, false),
            obs(34.2, 33.1, true),
        ],
    ];

    let gt = GroundTruth {
        extent,
        frames: 4,
        tracks: truth
            .iter()
            .enumerate()
            .map(|(id, points)| GtTrack {
                id: id as u64,
                query: points[0].position,
                points: points.clone(),
            })
            .collect(),
    };
    let pred = TrackSet {
        extent,
        frames: 4,
        tracks: predicted
            .iter()
            .enumerate()
            .map(|(id, points)| Track {
                id: id as u64,
                query: points[0].position,
                points: points
                    .iter()
                    .map(|o| TrackPoint {
                        position: o.position,
                        visible: o.visible,
                        variance: 0.0,
                        source: TrackerTag::A,
                    })
                    .collect(),
            })
            .collect(),
    };

    let records = join_records(&pred, &gt)?;
    let native = EvalSettings::native();
    let mut out = evaluate(&records, &native)?.to_key_values();

    // Same data on a 256x256 grid: every error is scaled by 4.
    let rescaled = EvalSettings::new(native.thresholds().to_vec(), EvalResolution::default(), extent)?;
    let r = evaluate(&records, &rescaled)?;
    out.push_str(&format!(
        "at {}: delta_avg={} aj={:.4}\n",
        r.resolution, r.delta_avg, r.average_jaccard
    ));

    let slices = slice_by_predicted_visibility(&records, &native)?;
    if let Some(v) = slices.visible {
        out.push_str(&format!("predicted-visible slice: delta_avg={}\n", v.delta_avg));
    }
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
