//! The `mft` binary: exit codes, error categories and file contracts.

use std::path::Path;
use std::process::Command;

use mft::io::config::RunConfig;
use mft::io::trackfile::{read_gt, read_tracks, write_gt};

const SCENE: &str = "width = 20\nheight = 16\nframes = 9\n\n[background]\nstep = [1.0, 0.0, 0.5, 0.0, 1.0, 0.25]\n\n\
[[objects]]\nshape = \"rectangle\"\ncenter = [4.0, 8.0]\nsize = [5.0, 5.0]\n[objects.motion]\nvelocity = [1.0, 0.0]\n";

const MODEL: &str = "noise_base = 0.1\nnoise_per_frame = 0.15\nvariance_report = { mode = \"honest\" }\n\
false_occlusion_rate = 0.05\nmissed_occlusion_rate = 0.05\noutlier_magnitude = 8.0\nseed = 4\n";

fn mft(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mft"))
        .args(args)
        .output()
        .expect("run mft");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = mft(args);
    assert_eq!(code, 0, "mft {}: {stderr}", args.join(" "));
    stdout
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthesizes a degraded provider directory; returns (provider, gt).
fn setup(root: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let scene = root.join("scene.toml");
    let model = root.join("model.toml");
    std::fs::write(&scene, SCENE).unwrap();
    std::fs::write(&model, MODEL).unwrap();
    let provider = root.join("provider");
    ok(&[
        "synth",
        "--scene",
        p(&scene),
        "--out",
        p(&provider),
        "--kind",
        "consecutive-flow",
        "--model",
        p(&model),
        "--query-step",
        "2",
    ]);
    let gt = provider.join("gt.txt");
    (provider, gt)
}

#[test]
fn track_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let (provider, gt) = setup(dir.path());
    let tracks = dir.path().join("out.tracks");
    let stdout = ok(&["track", "--provider", p(&provider), "--gt", p(&gt), "--out", p(&tracks)]);
    assert!(stdout.contains("tracked 80 points over 9 frames"), "{stdout}");
    let set = read_tracks(&tracks).unwrap();
    assert_eq!((set.frames, set.tracks.len()), (9, 80));

    let report = dir.path().join("report.json");
    let stdout = ok(&["eval", "--pred", p(&tracks), "--gt", p(&gt), "--out", p(&report)]);
    assert!(stdout.starts_with("resolution=256x256\n"), "{stdout}");
    let json = mft::io::report::read_report(&report).unwrap();
    assert_eq!(json.pairs, 80 * 8);
}

#[test]
fn eval_with_mismatched_ids_is_a_shape_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (provider, gt) = setup(dir.path());
    let tracks = dir.path().join("out.tracks");
    ok(&["track", "--provider", p(&provider), "--gt", p(&gt), "--out", p(&tracks)]);

    let mut other = read_gt(&gt).unwrap();
    other.tracks[3].id = 999;
    let renamed = dir.path().join("renamed.txt");
    write_gt(&other, &renamed).unwrap();
    let (code, stdout, stderr) = mft(&["eval", "--pred", p(&tracks), "--gt", p(&renamed)]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    assert!(stderr.starts_with("error[ShapeMismatch]:"), "{stderr}");
}

#[test]
fn compare_puts_mft_on_top() {
    let dir = tempfile::tempdir().unwrap();
    let (provider, gt) = setup(dir.path());
    let out_dir = dir.path().join("cmp");
    let stdout = ok(&[
        "compare",
        "--provider",
        p(&provider),
        "--gt",
        p(&gt),
        "--resolution",
        "native",
        "--out-dir",
        p(&out_dir),
    ]);
    let avg = |name: &str| -> f64 {
        let line = stdout.lines().find(|l| l.starts_with(name)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(avg("mft") > avg("chain") && avg("mft") > avg("direct"), "{stdout}");
    for s in ["mft", "chain", "direct"] {
        assert!(out_dir.join(format!("{s}.tracks")).exists());
        assert!(out_dir.join(format!("{s}.json")).exists());
    }
}

#[test]
fn viz_writes_requested_frames() {
    let dir = tempfile::tempdir().unwrap();
    let (provider, gt) = setup(dir.path());
    let tracks = dir.path().join("out.tracks");
    ok(&["track", "--provider", p(&provider), "--gt", p(&gt), "--out", p(&tracks)]);
    let viz = dir.path().join("viz");
    ok(&[
        "viz",
        "--tracks",
        p(&tracks),
        "--gt",
        p(&gt),
        "--out",
        p(&viz),
        "--frames",
        "1,9",
        "--scale",
        "2",
    ]);
    let mut names: Vec<_> = std::fs::read_dir(&viz)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["frame_00001.png", "frame_00009.png"]);
}

#[test]
fn usage_errors_exit_2() {
    let (code, _, stderr) = mft(&["track"]);
    assert_eq!(code, 2);
    assert!(
        stderr.starts_with("error[Usage]:") && stderr.contains("--out"),
        "{stderr}"
    );
    let (code, _, stderr) = mft(&["frobnicate"]);
    assert_eq!(code, 2, "{stderr}");
    assert!(ok(&["--help"]).contains("track"));
}

#[test]
fn missing_provider_pair_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (provider, gt) = setup(dir.path());
    std::fs::remove_file(provider.join("flow_00001_00005.mftflow")).unwrap();
    let (code, _, stderr) = mft(&[
        "track",
        "--provider",
        p(&provider),
        "--gt",
        p(&gt),
        "--out",
        p(&dir.path().join("t")),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error[MissingPair]:"), "{stderr}");
}

#[test]
fn config_round_trips_and_roma_needs_a_threshold() {
    let text = ok(&["config"]);
    let parsed = RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(parsed.tracker_a, RunConfig::default().tracker_a.resolved());
    assert_eq!(parsed.tracker_a.occlusion_threshold, Some(0.02));
    assert_eq!(parsed.to_toml_string(), text);

    let dir = tempfile::tempdir().unwrap();
    let (provider, gt) = setup(dir.path());
    let cfg = dir.path().join("roma.toml");
    std::fs::write(&cfg, "[tracker_a]\nbackend = \"roma-like\"\n").unwrap();
    let (code, _, stderr) = mft(&[
        "track",
        "--config",
        p(&cfg),
        "--provider",
        p(&provider),
        "--gt",
        p(&gt),
        "--out",
        p(&dir.path().join("t")),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("certainty"), "{stderr}");
}
