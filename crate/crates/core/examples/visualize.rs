//! Render tracked points over the scene layers as PNG frames. Filled markers
//! are predictions (green visible, red occluded), hollow white ones are
//! ground truth.
//!
//! ```bash
//! cargo run --release --example visualize -- out/viz
//! ```

use std::path::PathBuf;

use mft::backend::RAFT_OCCLUSION_THRESHOLD;
use mft::chain::{ChainConfig, ChainError};
use mft::cli::render_frame;
use mft::synth::{grid_queries, gt_tracks, DegradationModel, SceneSpec, SimulatedFlow};
use mft::tracks::{track_queries, TrackerTag};
use mft::Error;

const SCENE: &str = include_str!("../scenes/acceptance.toml");

pub fn run_example_in(out_dir: PathBuf) -> mft::Result<String> {
    let scene = SceneSpec::from_toml_str(SCENE)?;
    let mut model = DegradationModel::exact(3);
    model.noise_base = 0.1;
    model.noise_per_frame = 0.15;
    let flow = SimulatedFlow::new(scene.clone(), model)?;
    let gt = gt_tracks(&scene, &grid_queries(scene.extent(), 8))?;
    let frames = 24;
    let tracks = track_queries(
        &flow,
        ChainConfig::new(RAFT_OCCLUSION_THRESHOLD),
        Some(frames),
        &gt.queries(),
        TrackerTag::A,
        |_| Ok::<_, ChainError>(()),
    )?;
    let gt = mft::tracks::GroundTruth {
        frames,
        tracks: gt
            .tracks
            .into_iter()
            .map(|mut t| {
                t.points.truncate(frames);
                t
            })
            .collect(),
        ..gt
    };

    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Usage(e.to_string()))?;
    let mut written = Vec::new();
    for frame in [1, 8, 16, 24] {
        let img = render_frame(&tracks, Some(&gt), Some(&scene), frame, 6);
        let path = out_dir.join(format!("frame_{frame:05}.png"));
        img.save(&path).map_err(|e| Error::Usage(e.to_string()))?;
        written.push(format!(
            "{} ({}x{})",
            path.file_name().unwrap().to_string_lossy(),
            img.width(),
            img.height()
        ));
    }
    Ok(format!("wrote {} to {}\n", written.join(", "), out_dir.display()))
}

pub fn run_example() -> mft::Result<String> {
    let dir = tempfile::tempdir().map_err(|e| Error::Usage(e.to_string()))?;
    let text = run_example_in(dir.path().to_path_buf())?;
    Ok(text.replace(&dir.path().display().to_string(), "<tmp>"))
}

fn main() -> mft::Result<()> {
    match std::env::args_os().nth(1) {
        Some(dir) => print!("{}", run_example_in(PathBuf::from(dir))?),
        None => print!("{}", run_example()?),
    }
    Ok(())
}
