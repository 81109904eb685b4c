//! Every example runs and prints what it claims.

#[allow(dead_code)]
#[path = "../examples/cli_pipeline.rs"]
mod cli_pipeline;
#[allow(dead_code)]
#[path = "../examples/compare_strategies.rs"]
mod compare_strategies;
#[allow(dead_code)]
#[path = "../examples/custom_provider.rs"]
mod custom_provider;
#[allow(dead_code)]
#[path = "../examples/delta_schedule.rs"]
mod delta_schedule;
#[allow(dead_code)]
#[path = "../examples/ensemble.rs"]
mod ensemble;
#[allow(dead_code)]
#[path = "../examples/evaluate.rs"]
mod evaluate;
#[allow(dead_code)]
#[path = "../examples/flow_files.rs"]
mod flow_files;
#[allow(dead_code)]
#[path = "../examples/matcher_adaptation.rs"]
mod matcher_adaptation;
#[allow(dead_code)]
#[path = "../examples/track_translation.rs"]
mod track_translation;
#[allow(dead_code)]
#[path = "../examples/visualize.rs"]
mod visualize;

fn column(out: &str, row: &str, col: usize) -> f64 {
    let line = out
        .lines()
        .find(|l| l.starts_with(row))
        .unwrap_or_else(|| panic!("no row {row} in\n{out}"));
    line.split_whitespace().nth(col).unwrap().parse().unwrap()
}

#[test]
fn track_translation_is_exact() {
    let out = track_translation::run_example().unwrap();
    assert!(out.contains("(12.50,6.50)"), "{out}");
    assert!(out.contains("(16.00,4.75)"), "{out}");
    assert!(out.contains("occluded"), "{out}");
    assert!(out.ends_with("max chained variance: 0\n"), "{out}");
}

#[test]
fn delta_schedule_table() {
    let out = delta_schedule::run_example().unwrap();
    let row = out.lines().find(|l| l.trim_start().starts_with("10 |")).unwrap();
    assert!(row.ends_with("1,2,4,8,9"), "{row}");
    assert!(out.contains("direct at j=9: [8]"));
}

#[test]
fn compare_strategies_ranks_mft_first() {
    let out = compare_strategies::run_example().unwrap();
    let mft = column(&out, "mft", 1);
    assert!(mft > column(&out, "chain", 1) + 0.02, "{out}");
    assert!(mft > column(&out, "direct", 1) + 0.02, "{out}");
}

#[test]
fn matcher_adaptation_thresholds() {
    let out = matcher_adaptation::run_example().unwrap();
    assert!(out.contains("[1000.0, 1000.0, 0.0, 0.0, 0.0] (dkm-like)"), "{out}");
    assert!(out.contains("roma-like without threshold"), "{out}");
    assert!(out.contains("-> (16.25, 10.75)"), "{out}");
}

#[test]
fn ensemble_orders_strategies() {
    let out = ensemble::run_example().unwrap();
    let aj = |s| column(&out, s, 1);
    let oa = |s| column(&out, s, 2);
    assert!(aj("position-b-occlusion-a") > aj("a-only"));
    assert!(aj("position-b-occlusion-a") > aj("b-only"));
    assert!(aj("selective-b-position") >= aj("position-b-occlusion-a"));
    assert_eq!(oa("selective-b-position"), oa("a-only"));
}

#[test]
fn evaluate_hand_fixture() {
    let out = evaluate::run_example().unwrap();
    for kv in [
        "oa=0.8333333333333334",
        "delta_1=0.5",
        "delta_avg=0.8",
        "precision=0.8",
        "recall=1",
        "pairs=6",
    ] {
        assert!(out.lines().any(|l| l == kv), "missing {kv} in\n{out}");
    }
    assert!(out.contains("at 256x256: delta_avg=0.5"), "{out}");
}

#[test]
fn flow_files_round_trip() {
    let out = flow_files::run_example().unwrap();
    assert!(out.contains("3092 bytes"), "{out}");
    assert!(out.contains(".flo: 1548 bytes"), "{out}");
    assert!(out.contains("read back bit-exact: true"), "{out}");
}

#[test]
fn custom_provider_tracks_pan() {
    let out = custom_provider::run_example().unwrap();
    assert!(out.contains("x=   3: 5 7 9 11 13 15 17 19 21"), "{out}");
    assert!(out.contains("40*"), "{out}");
}

#[test]
fn cli_pipeline_runs_every_command() {
    let out = cli_pipeline::run_example().unwrap();
    assert!(out.contains("tracked 256 points over 48 frames"), "{out}");
    assert!(out.contains("pairs=12032"), "{out}");
    let mft = column(&out, "mft ", 1);
    assert!(
        mft > column(&out, "chain ", 1) && mft > column(&out, "direct ", 1),
        "{out}"
    );
}

#[test]
fn visualize_writes_pngs() {
    let out = visualize::run_example().unwrap();
    assert!(out.contains("frame_00024.png (384x384)"), "{out}");
}
