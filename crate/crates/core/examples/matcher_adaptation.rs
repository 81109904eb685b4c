//! Wide-baseline matchers report a certainty instead of variance and
//! occlusion. The adapter turns certainty into both, with a per-backend
//! threshold.
//!
//! ```bash
//! cargo run --example matcher_adaptation
//! ```

use std::fmt::Write;

use mft::backend::{
    adapter_defaults, certainty_to_occlusion, certainty_to_variance, BackendName, FlowProvider, FlowRequest,
    MatcherAdapter,
};
use mft::chain::{track, ChainConfig};
use mft::geometry::{FieldRole, ImageExtent, Point, ScalarField};
use mft::synth::{DegradationModel, SceneSpec, SimulatedMatcher};
use mft::Error;

pub fn run_example() -> mft::Result<String> {
    let mut out = String::new();
    let extent = ImageExtent::new(5, 1)?;
    let rho = ScalarField::new(extent, FieldRole::Certainty, vec![0.0, 0.04, 0.06, 0.5, 1.0])?;

    let dkm = adapter_defaults(BackendName::DkmLike);
    writeln!(out, "certainty  {:?}", rho.values()).unwrap();
    writeln!(out, "occlusion  {:?}", certainty_to_occlusion(&rho)?.values()).unwrap();
    writeln!(
        out,
        "variance   {:?} (dkm-like)",
        certainty_to_variance(&rho, &dkm)?.values()
    )
    .unwrap();

    // roma-like ships without a threshold; the caller has to pick one.
    let roma = adapter_defaults(BackendName::RomaLike);
    match certainty_to_variance(&rho, &roma) {
        Err(e) => writeln!(out, "roma-like without threshold: {}", Error::from(e)).unwrap(),
        Ok(_) => unreachable!("roma-like has no default threshold"),
    }
    let roma = roma.with_certainty_threshold(0.5);
    writeln!(
        out,
        "variance   {:?} (roma-like, 0.5)",
        certainty_to_variance(&rho, &roma)?.values()
    )
    .unwrap();

    // A simulated matcher that is unsure of 20% of its matches, tracked
    // through the adapter with the matcher occlusion threshold.
    let scene = SceneSpec::translating(ImageExtent::new(32, 32)?, 12, 0.75, 0.25)?;
    let mut model = DegradationModel::exact(9);
    model.false_occlusion_rate = 0.2;
    let matcher = SimulatedMatcher::new(scene, model, 0.9, 0.01)?;
    let provider = MatcherAdapter::new(matcher, dkm)?;
    let bundle = provider.provide(FlowRequest::new(1, 12))?;
    let unsure = bundle.variance.values().iter().filter(|&&v| v > 0.0).count();
    writeln!(
        out,
        "pair (1,12): {unsure} of {} pixels get variance 1000",
        bundle.variance.values().len()
    )
    .unwrap();

    let cfg = ChainConfig::new(dkm.occlusion_threshold);
    let states = track(12, &provider, &cfg)?;
    let last = states.last().expect("twelve states");
    let p = last.sample_position(Point::new(8.0, 8.0))?;
    writeln!(
        out,
        "(8,8) at frame 12 -> ({:.2}, {:.2}), exact (16.25, 10.75)",
        p.x, p.y
    )
    .unwrap();
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
