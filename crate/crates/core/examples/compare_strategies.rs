//! Logarithmic multi-flow chaining against plain consecutive chaining and
//! direct matching on a scene with affine background motion and two moving
//! occluders, using a simulated flow estimator whose error grows with the
//! frame gap.
//!
//! ```bash
//! cargo run --release --example compare_strategies
//! ```

use std::fmt::Write;

use mft::chain::{ChainConfig, ChainError, Schedule};
use mft::metrics::{evaluate, join_records, EvalSettings};
use mft::synth::{grid_queries, gt_tracks, DegradationModel, SceneSpec, SimulatedFlow, VarianceReport};
use mft::tracks::{track_queries, TrackerTag};

const SCENE: &str = include_str!("../scenes/acceptance.toml");

pub fn run_example() -> mft::Result<String> {
    let scene = SceneSpec::from_toml_str(SCENE)?;
    let model = DegradationModel {
        noise_base: 0.1,
        noise_per_frame: 0.15,
        variance_report: VarianceReport::Honest,
        false_occlusion_rate: 0.05,
        missed_occlusion_rate: 0.05,
        outlier_magnitude: 24.0,
        seed: 1,
    };
    let flow = SimulatedFlow::new(scene.clone(), model)?;
    let gt = gt_tracks(&scene, &grid_queries(scene.extent(), 4))?;
    let settings = EvalSettings::native();

    let mut out = format!("{:<7} {:>9} {:>7} {:>7}\n", "", "delta_avg", "AJ", "OA");
    for schedule in [Schedule::Logarithmic, Schedule::Consecutive, Schedule::Direct] {
        let cfg = ChainConfig::new(0.02).with_schedule(schedule);
        let tracks = track_queries(&flow, cfg, None, &gt.queries(), TrackerTag::A, |_| {
            Ok::<_, ChainError>(())
        })?;
        let r = evaluate(&join_records(&tracks, &gt)?, &settings)?;
        writeln!(
            out,
            "{:<7} {:>9.3} {:>7.3} {:>7.3}",
            schedule.to_string(),
            r.delta_avg,
            r.average_jaccard,
            r.occlusion_accuracy
        )
        .unwrap();
    }
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
