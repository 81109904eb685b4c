//! Track every pixel of a translating scene with an exact flow oracle and
//! read a few sparse tracks off the dense state.
//!
//! ```bash
//! cargo run --example track_translation
//! ```

use std::fmt::Write;

use mft::chain::{ChainConfig, Tracker};
use mft::geometry::{ImageExtent, Point};
use mft::synth::{OracleProvider, SceneSpec};
use mft::tracks::{predict_tracks, TrackerTag};

pub fn run_example() -> mft::Result<String> {
    let extent = ImageExtent::new(24, 16)?;
    let scene = SceneSpec::translating(extent, 8, 1.5, -0.5)?;
    let cfg = ChainConfig::new(0.02);

    // The tracker is an iterator over dense per-frame states.
    let mut states = Vec::new();
    let mut retained = 0;
    for state in Tracker::new(OracleProvider::new(scene), cfg)? {
        states.push(state?);
        retained = retained.max(states.len());
    }

    let queries = [Point::new(2.0, 10.0), Point::new(5.5, 8.25), Point::new(20.0, 3.0)];
    let tracks = predict_tracks(&states, &queries, cfg.occlusion_threshold, TrackerTag::A)?;

    let mut out = String::new();
    for t in &tracks.tracks {
        write!(out, "query {:>2} ({:>5.2}, {:>5.2}):", t.id, t.query.x, t.query.y).unwrap();
        for p in &t.points {
            if p.visible {
                write!(out, " ({:.2},{:.2})", p.position.x, p.position.y).unwrap();
            } else {
                out.push_str(" occluded");
            }
        }
        out.push('\n');
    }
    let last = states.last().expect("eight states");
    let worst = (0..extent.len()).map(|i| last.variance(i)).fold(0.0, f64::max);
    writeln!(out, "frame {} max chained variance: {worst}", last.frame()).unwrap();
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
