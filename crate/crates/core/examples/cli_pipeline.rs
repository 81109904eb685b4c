//! The full command-line pipeline, driven in-process: synthesize a provider
//! directory and ground truth, track, evaluate, and compare schedules. The
//! same commands work with the `mft` binary.
//!
//! ```bash
//! cargo run --release --example cli_pipeline
//! ```

use std::path::Path;

use mft::cli;

fn mft(args: &[&str]) -> mft::Result<String> {
    let mut out = Vec::new();
    cli::run(std::iter::once("mft").chain(args.iter().copied()), &mut out)?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn run_example() -> mft::Result<String> {
    let dir = tempfile::tempdir().map_err(|e| mft::Error::Usage(e.to_string()))?;
    let root = dir.path();
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/acceptance.toml");
    let model = root.join("model.toml");
    std::fs::write(
        &model,
        "noise_base = 0.1\nnoise_per_frame = 0.15\nvariance_report = { mode = \"honest\" }\n\
         false_occlusion_rate = 0.05\nmissed_occlusion_rate = 0.05\noutlier_magnitude = 24.0\nseed = 1\n",
    )
    .map_err(|e| mft::Error::Usage(e.to_string()))?;
    let provider = root.join("provider");
    let tracks = root.join("mft.tracks");
    let report = root.join("report.json");

    let mut out = mft(&[
        "synth",
        "--scene",
        s(&scene),
        "--out",
        s(&provider),
        "--kind",
        "consecutive-flow",
        "--model",
        s(&model),
    ])?;
    let gt = provider.join("gt.txt");
    out += &mft(&["track", "--provider", s(&provider), "--gt", s(&gt), "--out", s(&tracks)])?;
    out += &mft(&[
        "eval",
        "--pred",
        s(&tracks),
        "--gt",
        s(&gt),
        "--resolution",
        "native",
        "--out",
        s(&report),
    ])?;
    out += &mft(&[
        "compare",
        "--provider",
        s(&provider),
        "--gt",
        s(&gt),
        "--resolution",
        "native",
    ])?;
    Ok(out.replace(s(root), "<tmp>"))
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
