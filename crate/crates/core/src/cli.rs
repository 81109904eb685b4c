//! The `mft` command line: `track`, `synth`, `eval`, `compare`, `viz`.
//!
//! Failures print one line, `error[<Category>]: <message>`, to stderr and
//! exit with status 1 (2 for usage errors).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use image::{Rgb, RgbImage};

use crate::backend::{BackendName, FlowProvider};
use crate::chain::{ChainError, ChainState, Schedule};
use crate::ensemble::{combine, run_pair, EnsembleStrategy, TrackerSpec};
use crate::geometry::{ImageExtent, Point};
use crate::io::config::{RunConfig, TrackerConfig};
use crate::io::flowpack::{write_flowpack, FlowPack};
use crate::io::provider_dir::{emit_matcher_dir, emit_provider_dir, required_pairs, FileProvider, FlowLayout};
use crate::io::report::write_report;
use crate::io::trackfile::{read_gt, read_tracks, write_gt, write_tracks};
use crate::io::IoError;
use crate::metrics::{evaluate, join_records, EvalReport, EvalResolution};
use crate::synth::{
    grid_queries, gt_tracks, DegradationModel, Layer, OracleProvider, SceneSpec, SimulatedFlow, SimulatedMatcher,
};
use crate::tracks::{track_queries, GroundTruth, TrackSet, TrackerTag};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mft",
    version,
    about = "Long-term dense point tracking by multi-flow chaining"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track query points through one or two provider directories.
    Track(TrackArgs),
    /// Render a scene file into a provider directory and a ground-truth file.
    Synth(SynthArgs),
    /// Score a track file against ground truth.
    Eval(EvalArgs),
    /// Run the direct, chain and mft schedules on one provider and tabulate.
    Compare(CompareArgs),
    /// Draw tracked points over each frame as PNG images.
    Viz(VizArgs),
    /// Print the default run configuration.
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Mft,
    Chain,
    Direct,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Schedule {
        match s {
            ScheduleArg::Mft => Schedule::Logarithmic,
            ScheduleArg::Chain => Schedule::Consecutive,
            ScheduleArg::Direct => Schedule::Direct,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct TrackArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Provider directory for tracker A.
    #[arg(long)]
    pub provider: Option<PathBuf>,
    /// Provider directory for tracker B.
    #[arg(long)]
    pub provider_b: Option<PathBuf>,
    /// Chaining schedule for every tracker.
    #[arg(long, value_enum)]
    pub strategy: Option<ScheduleArg>,
    /// How to combine trackers A and B.
    #[arg(long)]
    pub ensemble: Option<EnsembleStrategy>,
    /// Take query points from the frame-1 positions of this ground-truth file.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Grid spacing of query points when no ground truth is given.
    #[arg(long)]
    pub query_step: Option<usize>,
    /// Track only the first N frames.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Output track file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every dense per-frame state of tracker A as FlowPack files.
    #[arg(long)]
    pub dump_states: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Oracle,
    ConsecutiveFlow,
    WideBaselineMatcher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Pack,
    Flo,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Scene file (TOML).
    #[arg(long)]
    pub scene: PathBuf,
    /// Output provider directory.
    #[arg(long)]
    pub out: PathBuf,
    /// What the emitted flows imitate.
    #[arg(long, value_enum, default_value = "oracle")]
    pub kind: KindArg,
    /// Degradation model (TOML) for the simulated kinds.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Certainty of matches the simulated matcher gets right.
    #[arg(long, default_value_t = 0.9)]
    pub confident: f32,
    /// Certainty of matches it flags as wrong.
    #[arg(long, default_value_t = 0.01)]
    pub unconfident: f32,
    #[arg(long, value_enum, default_value = "pack")]
    pub layout: LayoutArg,
    /// Schedules are emitted for this many candidates.
    #[arg(long, default_value_t = crate::chain::DEFAULT_MAX_CANDIDATES)]
    pub max_candidates: usize,
    /// Grid spacing of ground-truth query points.
    #[arg(long, default_value_t = 4)]
    pub query_step: usize,
    /// Ground-truth output; defaults to `<out>/gt.txt`.
    #[arg(long)]
    pub gt: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Predicted track file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth file.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `native`, or WxH such as 256x256.
    #[arg(long)]
    pub resolution: Option<EvalResolution>,
    /// Report file; `.json` for JSON, otherwise key=value lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub provider: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<EvalResolution>,
    /// Directory for per-schedule track files and JSON reports.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct VizArgs {
    #[arg(long)]
    pub tracks: PathBuf,
    /// Output directory for `frame_NNNNN.png`.
    #[arg(long)]
    pub out: PathBuf,
    /// Draw ground-truth positions as hollow markers.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Shade the background by scene layer.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Frames to draw (1-based); all by default.
    #[arg(long, value_delimiter = ',')]
    pub frames: Vec<usize>,
    /// Pixels per image pixel.
    #[arg(long, default_value_t = 4)]
    pub scale: u32,
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(
                e.kind(),
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                return emit(out, &e.render().to_string());
            }
            let msg = e.render().to_string();
            let head = msg.split("\nUsage:").next().unwrap_or_default();
            let line = head
                .trim_start_matches("error: ")
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            return Err(Error::Usage(line));
        }
    };
    execute(cli.command, out)
}

/// Entry point for the binary: returns the process exit status.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(args, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| {
        Error::Io(IoError::Os {
            path: "<stdout>".into(),
            message: e.to_string(),
        })
    })
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Track(a) => cmd_track(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Viz(a) => cmd_viz(a, out),
        Command::Config => emit(out, &RunConfig::default().to_toml_string()),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

/// Opens the provider directory of one tracker.
pub fn open_provider(dir: Option<&Path>, tracker: &TrackerConfig, which: &str) -> Result<FileProvider> {
    let dir = dir
        .or(tracker.provider.as_deref())
        .ok_or_else(|| Error::Usage(format!("no provider directory for tracker {which}")))?;
    Ok(FileProvider::open(dir, Some(tracker.adapter()))?)
}

fn queries_for(gt: Option<&GroundTruth>, extent: ImageExtent, step: usize) -> Result<Vec<Point>> {
    match gt {
        Some(g) if g.extent != extent => Err(Error::Metrics(crate::metrics::MetricsError::ShapeMismatch(format!(
            "ground truth extent {} differs from provider extent {extent}",
            g.extent
        )))),
        Some(g) => Ok(g.queries()),
        None => Ok(grid_queries(extent, step)),
    }
}

fn state_pack(state: &ChainState) -> FlowPack {
    let (u, v) = state.displacement_planes();
    FlowPack {
        u: Some(u),
        v: Some(v),
        variance: Some(state.variance_plane()),
        occlusion: Some(state.occlusion_plane()),
        ..FlowPack::empty(state.extent())
    }
}

fn cmd_track(a: TrackArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.strategy {
        cfg.tracker_a.schedule = s.into();
        if let Some(b) = cfg.tracker_b.as_mut() {
            b.schedule = s.into();
        }
    }
    if let Some(e) = a.ensemble {
        cfg.strategy = e;
    }
    if let Some(step) = a.query_step {
        cfg.query_step = step;
    }
    if a.provider_b.is_some() && cfg.tracker_b.is_none() {
        cfg.tracker_b = Some(TrackerConfig::new(BackendName::RaftLike));
    }
    cfg.validate()?;
    let gt =
        a.gt.as_deref()
            .or(cfg.paths.ground_truth.as_deref())
            .map(read_gt)
            .transpose()?;
    let provider_a = open_provider(a.provider.as_deref(), &cfg.tracker_a, "A")?;
    let queries = queries_for(gt.as_ref(), provider_a.extent(), cfg.query_step)?;

    let result = match (&cfg.tracker_b, cfg.strategy) {
        (Some(tb), s) if s != EnsembleStrategy::AOnly => {
            if a.dump_states.is_some() {
                return Err(Error::Usage(
                    "--dump-states is supported for single-tracker runs only".into(),
                ));
            }
            let provider_b = open_provider(a.provider_b.as_deref(), tb, "B")?;
            let spec_a = TrackerSpec {
                provider: &provider_a,
                config: cfg.tracker_a.chain(),
            };
            let spec_b = TrackerSpec {
                provider: &provider_b,
                config: tb.chain(),
            };
            let (ta, tbs) = run_pair(&spec_a, &spec_b, a.frames, &queries)?;
            combine(&ta, &tbs, s)?
        }
        _ => {
            if let Some(d) = &a.dump_states {
                std::fs::create_dir_all(d).map_err(|e| crate::io::os_error(d, e))?;
            }
            track_queries(
                &provider_a,
                cfg.tracker_a.chain(),
                a.frames,
                &queries,
                TrackerTag::A,
                |state| {
                    if let Some(d) = &a.dump_states {
                        write_flowpack(
                            &state_pack(state),
                            &d.join(format!("state_{:05}.mftflow", state.frame())),
                        )?;
                    }
                    Ok::<_, Error>(())
                },
            )?
        }
    };
    write_tracks(&result, &a.out)?;
    emit(
        out,
        &format!(
            "tracked {} points over {} frames -> {}\n",
            result.tracks.len(),
            result.frames,
            a.out.display()
        ),
    )
}

fn load_model(path: Option<&Path>, kind: KindArg) -> Result<DegradationModel> {
    match (path, kind) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| crate::io::os_error(p, e))?;
            let m: DegradationModel =
                toml::from_str(&text).map_err(|e| IoError::Config(format!("{}: {e}", p.display())))?;
            m.validate()?;
            Ok(m)
        }
        (None, KindArg::Oracle) => Ok(DegradationModel::exact(0)),
        (None, _) => Err(Error::Usage("--model is required for simulated flow kinds".into())),
    }
}

pub fn load_scene(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::io::os_error(path, e))?;
    Ok(SceneSpec::from_toml_str(&text)?)
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let model = load_model(a.model.as_deref(), a.kind)?;
    let layout = match a.layout {
        LayoutArg::Pack => FlowLayout::Pack,
        LayoutArg::Flo => FlowLayout::FloWithSidecar,
    };
    if a.max_candidates < 1 {
        return Err(Error::Usage("--max-candidates must be >= 1".into()));
    }
    let pairs = required_pairs(
        scene.frames(),
        &[Schedule::Logarithmic, Schedule::Consecutive, Schedule::Direct],
        a.max_candidates,
    );
    match a.kind {
        KindArg::Oracle => emit_provider_dir(&OracleProvider::new(scene.clone()), &a.out, &pairs, layout)?,
        KindArg::ConsecutiveFlow => {
            emit_provider_dir(&SimulatedFlow::new(scene.clone(), model)?, &a.out, &pairs, layout)?
        }
        KindArg::WideBaselineMatcher => {
            let m = SimulatedMatcher::new(scene.clone(), model, a.confident, a.unconfident)?;
            emit_matcher_dir(&m, &a.out, &pairs, layout)?
        }
    }
    let gt = gt_tracks(&scene, &grid_queries(scene.extent(), a.query_step))?;
    let gt_path = a.gt.unwrap_or_else(|| a.out.join("gt.txt"));
    write_gt(&gt, &gt_path)?;
    emit(
        out,
        &format!(
            "wrote {} flow pairs to {} and {} ground-truth points to {}\n",
            pairs.len(),
            a.out.display(),
            gt.tracks.len(),
            gt_path.display()
        ),
    )
}

fn evaluate_sets(pred: &TrackSet, gt: &GroundTruth, cfg: &RunConfig) -> Result<EvalReport> {
    if pred.extent != gt.extent {
        return Err(Error::Metrics(crate::metrics::MetricsError::ShapeMismatch(format!(
            "prediction extent {} differs from ground truth {}",
            pred.extent, gt.extent
        ))));
    }
    let settings = cfg.eval.settings(gt.extent)?;
    Ok(evaluate(&join_records(pred, gt)?, &settings)?)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(r) = a.resolution {
        cfg.eval.resolution = r;
    }
    let report = evaluate_sets(&read_tracks(&a.pred)?, &read_gt(&a.gt)?, &cfg)?;
    if let Some(p) = &a.out {
        write_report(&report, p)?;
    }
    emit(out, &report.to_key_values())
}

/// Tracks with each baseline schedule and evaluates against `gt`.
pub fn compare_schedules<P: FlowProvider>(
    provider: &P,
    tracker: &TrackerConfig,
    gt: &GroundTruth,
    cfg: &RunConfig,
) -> Result<Vec<(Schedule, TrackSet, EvalReport)>> {
    [Schedule::Direct, Schedule::Consecutive, Schedule::Logarithmic]
        .into_iter()
        .map(|s| {
            let chain = tracker.chain().with_schedule(s);
            let tracks = track_queries(provider, chain, Some(gt.frames), &gt.queries(), TrackerTag::A, |_| {
                Ok::<_, ChainError>(())
            })?;
            let report = evaluate_sets(&tracks, gt, cfg)?;
            Ok((s, tracks, report))
        })
        .collect()
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(r) = a.resolution {
        cfg.eval.resolution = r;
    }
    let gt = read_gt(&a.gt)?;
    let provider = open_provider(Some(&a.provider), &cfg.tracker_a, "A")?;
    let rows = compare_schedules(&provider, &cfg.tracker_a, &gt, &cfg)?;
    if let Some(d) = &a.out_dir {
        std::fs::create_dir_all(d).map_err(|e| crate::io::os_error(d, e))?;
    }
    let mut table = format!("{:<8} {:>9} {:>9} {:>9}\n", "schedule", "delta_avg", "aj", "oa");
    for (s, tracks, report) in &rows {
        if let Some(d) = &a.out_dir {
            write_tracks(tracks, &d.join(format!("{s}.tracks")))?;
            write_report(report, &d.join(format!("{s}.json")))?;
        }
        table.push_str(&format!(
            "{:<8} {:>9.4} {:>9.4} {:>9.4}\n",
            s.to_string(),
            report.delta_avg,
            report.average_jaccard,
            report.occlusion_accuracy
        ));
    }
    emit(out, &table)
}

const VISIBLE: Rgb<u8> = Rgb([60, 220, 90]);
const OCCLUDED: Rgb<u8> = Rgb([230, 60, 50]);
const TRUTH: Rgb<u8> = Rgb([250, 250, 250]);

fn layer_shade(layer: Layer) -> Rgb<u8> {
    match layer {
        Layer::Background => Rgb([28, 30, 38]),
        Layer::Object(k) => {
            let c = 60 + (k as u8 % 4) * 25;
            Rgb([c, c / 2 + 20, 110])
        }
    }
}

fn mark(img: &mut RgbImage, p: Point, scale: u32, color: Rgb<u8>, hollow: bool) {
    let r = scale.max(2) as i64;
    let cx = ((p.x + 0.5) * scale as f64).floor() as i64;
    let cy = ((p.y + 0.5) * scale as f64).floor() as i64;
    for dy in -r..=r {
        for dx in -r..=r {
            let edge = dx.abs() == r || dy.abs() == r;
            if hollow && !edge {
                continue;
            }
            let (x, y) = (cx + dx, cy + dy);
            if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// Draws frame `frame` (1-based) of `tracks`.
pub fn render_frame(
    tracks: &TrackSet,
    gt: Option<&GroundTruth>,
    scene: Option<&SceneSpec>,
    frame: usize,
    scale: u32,
) -> RgbImage {
    let e = tracks.extent;
    let scale = scale.max(1);
    let mut img = RgbImage::from_pixel(
        e.width() as u32 * scale,
        e.height() as u32 * scale,
        layer_shade(Layer::Background),
    );
    if let Some(s) = scene {
        for (x, y, px) in img.enumerate_pixels_mut() {
            let p = Point::new((x / scale) as f64, (y / scale) as f64);
            *px = layer_shade(s.layer_at(p, frame));
        }
    }
    if let Some(g) = gt {
        for t in &g.tracks {
            if let Some(o) = t.points.get(frame - 1).filter(|o| o.visible) {
                mark(&mut img, o.position, scale, TRUTH, true);
            }
        }
    }
    for t in &tracks.tracks {
        if let Some(p) = t.points.get(frame - 1) {
            mark(
                &mut img,
                p.position,
                scale,
                if p.visible { VISIBLE } else { OCCLUDED },
                false,
            );
        }
    }
    img
}

fn cmd_viz(a: VizArgs, out: &mut dyn Write) -> Result<()> {
    let tracks = read_tracks(&a.tracks)?;
    let gt = a.gt.as_deref().map(read_gt).transpose()?;
    let scene = a.scene.as_deref().map(load_scene).transpose()?;
    let frames: Vec<usize> = if a.frames.is_empty() {
        (1..=tracks.frames).collect()
    } else {
        a.frames.clone()
    };
    if let Some(&bad) = frames.iter().find(|&&f| f < 1 || f > tracks.frames) {
        return Err(Error::Usage(format!("frame {bad} outside 1..={}", tracks.frames)));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| crate::io::os_error(&a.out, e))?;
    for &f in &frames {
        let img = render_frame(&tracks, gt.as_ref(), scene.as_ref(), f, a.scale);
        let mut png = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
            .map_err(|e| IoError::Config(format!("png encoding: {e}")))?;
        crate::io::write_atomic(&a.out.join(format!("frame_{f:05}.png")), &png)?;
    }
    emit(out, &format!("wrote {} images to {}\n", frames.len(), a.out.display()))
}
