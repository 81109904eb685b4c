//! Two trackers with complementary strengths: A flags occlusions reliably but
//! drifts, B is precise but unreliable about occlusion. Each ensemble
//! strategy takes visibility and position from a different source.
//!
//! ```bash
//! cargo run --release --example ensemble
//! ```

use std::fmt::Write;

use mft::backend::{adapter_defaults, BackendName, MatcherAdapter};
use mft::chain::ChainConfig;
use mft::ensemble::{combine, run_pair, EnsembleStrategy, TrackerSpec};
use mft::metrics::{evaluate, join_records, EvalSettings};
use mft::synth::{
    grid_queries, gt_tracks, DegradationModel, SceneSpec, SimulatedFlow, SimulatedMatcher, VarianceReport,
};

const SCENE: &str = include_str!("../scenes/acceptance.toml");

pub fn run_example() -> mft::Result<String> {
    let scene = SceneSpec::from_toml_str(SCENE)?;
    let a_model = DegradationModel {
        noise_base: 0.1,
        noise_per_frame: 0.3,
        variance_report: VarianceReport::Honest,
        false_occlusion_rate: 0.01,
        missed_occlusion_rate: 0.01,
        outlier_magnitude: 24.0,
        seed: 1,
    };
    let b_model = DegradationModel {
        noise_per_frame: 0.05,
        false_occlusion_rate: 0.3,
        missed_occlusion_rate: 0.3,
        seed: 1001,
        ..a_model
    };
    let a = SimulatedFlow::new(scene.clone(), a_model)?;
    let b = MatcherAdapter::new(
        SimulatedMatcher::new(scene.clone(), b_model, 0.9, 0.01)?,
        adapter_defaults(BackendName::RomaLike).with_certainty_threshold(0.05),
    )?;
    let gt = gt_tracks(&scene, &grid_queries(scene.extent(), 4))?;

    let (ta, tb) = run_pair(
        &TrackerSpec {
            provider: &a,
            config: ChainConfig::new(0.02),
        },
        &TrackerSpec {
            provider: &b,
            config: ChainConfig::new(0.95),
        },
        None,
        &gt.queries(),
    )?;

    let settings = EvalSettings::native();
    let mut out = format!("{:<24} {:>6} {:>6} {:>9}\n", "strategy", "AJ", "OA", "delta_avg");
    for s in EnsembleStrategy::ALL {
        let r = evaluate(&join_records(&combine(&ta, &tb, s)?, &gt)?, &settings)?;
        writeln!(
            out,
            "{:<24} {:>6.3} {:>6.3} {:>9.3}",
            s.to_string(),
            r.average_jaccard,
            r.occlusion_accuracy,
            r.delta_avg
        )
        .unwrap();
    }
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
