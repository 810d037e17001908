//! `scanfilter` command-line tool.
//!
//! Exit codes: 0 success, 2 usage error, 3 IO or parse error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scanfilter_core::io_log::{self, LogError};
use scanfilter_core::replay::{self, Replay};
use scanfilter_core::synth::{self, OfficeLayout, Scene, SensorModel};
use scanfilter_core::{
    derive_common_threshold, derive_window_size, FilterParams, HistogramMode, SpeedProfile,
    WindowPolicy,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Fewest scans `bench` will time.
const BENCH_MIN_SCANS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "scanfilter",
    version,
    about = "Correlation filter for 2D laser scan streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter a scan log, writing only the kept scans.
    Filter(FilterArgs),
    /// Derive window size and common threshold from robot speed.
    Params(ParamsArgs),
    /// Generate a synthetic scan log.
    Gen(GenArgs),
    /// Time the filter against a reference scan-matcher workload.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    FastRobot,
    SlowRobot,
}

#[derive(Debug, Args)]
struct ParamFlags {
    /// Start from a parameter preset; other flags override it.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    p_pair: Option<f64>,
    #[arg(long)]
    p_common: Option<f64>,
    /// range-count, range-avg, angle-avg or angle-disp.
    #[arg(long)]
    histogram_mode: Option<HistogramMode>,
    #[arg(long)]
    columns: Option<usize>,
    /// Range error bound used by the corridor detector, meters.
    #[arg(long)]
    range_error_delta: Option<f64>,
    #[arg(long)]
    corridor_threshold: Option<f64>,
    #[arg(long)]
    corridor_min_pairs: Option<usize>,
    #[arg(long)]
    no_corridor_detector: bool,
    /// all-recent or kept-only.
    #[arg(long)]
    window_policy: Option<WindowPolicy>,
}

impl ParamFlags {
    fn resolve(&self) -> Result<FilterParams, CliError> {
        let mut p = match self.preset {
            None => FilterParams::default(),
            Some(Preset::FastRobot) => FilterParams::fast_robot(),
            Some(Preset::SlowRobot) => FilterParams::slow_robot(),
        };
        if let Some(v) = self.window_size {
            p.window_size = v;
        }
        if let Some(v) = self.p_pair {
            p.p_pair = v;
        }
        if let Some(v) = self.p_common {
            p.p_common = v;
        }
        if let Some(v) = self.histogram_mode {
            p.histogram.mode = v;
        }
        if let Some(v) = self.columns {
            p.histogram.columns = v;
        }
        if let Some(v) = self.range_error_delta {
            p.corridor.range_error_delta = v;
        }
        if let Some(v) = self.corridor_threshold {
            p.corridor.score_threshold = v;
        }
        if let Some(v) = self.corridor_min_pairs {
            p.corridor.min_pairs = v;
        }
        if self.no_corridor_detector {
            p.corridor_enabled = false;
        }
        if let Some(v) = self.window_policy {
            p.window_policy = v;
        }
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Input scan log.
    #[arg(long, short)]
    input: PathBuf,
    /// Output scan log holding the kept scans.
    #[arg(long, short)]
    output: PathBuf,
    /// Per-scan decision table.
    #[arg(long)]
    decisions: Option<PathBuf>,
    /// Run statistics.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[command(flatten)]
    params: ParamFlags,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    /// Average distance travelled per quantum, centimeters.
    #[arg(long)]
    avg_speed_cm: f64,
    #[arg(long)]
    p_pair: f64,
    /// Quantum length, seconds.
    #[arg(long, default_value_t = synth::DEFAULT_QUANTUM)]
    quantum: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SceneKind {
    Corridor,
    Room,
    OfficeLoop,
    Stationary,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    scene: SceneKind,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, env = "SCANFILTER_SEED", default_value_t = 0)]
    seed: u64,
    /// Distance per quantum, centimeters.
    #[arg(long, default_value_t = 2.2)]
    speed_cm: f64,
    /// Scan count for room and stationary scenes.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Corridor length, meters.
    #[arg(long, default_value_t = 10.0)]
    length: f64,
    /// Corridor half-width, meters.
    #[arg(long, default_value_t = 1.5)]
    half_width: f64,
    /// Room width, meters.
    #[arg(long, default_value_t = 6.0)]
    width: f64,
    /// Room height, meters.
    #[arg(long, default_value_t = 4.0)]
    height: f64,
    #[arg(long, default_value_t = 1000)]
    beams: usize,
    /// Range noise standard deviation, meters.
    #[arg(long, default_value_t = 0.01)]
    noise_sigma: f64,
    #[arg(long, default_value_t = synth::DEFAULT_QUANTUM)]
    quantum: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    params: ParamFlags,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn at(path: &std::path::Path) -> impl Fn(LogError) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Filter(args) => cmd_filter(args),
        Command::Params(args) => cmd_params(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn cmd_filter(args: FilterArgs) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let reader = io_log::open_scan_log(&args.input).map_err(at(&args.input))?;
    let file = File::create(&args.output).map_err(|e| at(&args.output)(e.into()))?;
    let mut out = BufWriter::new(file);
    let mut replay = Replay::new(params).map_err(|e| CliError::Usage(e.to_string()))?;
    for scan in reader {
        let scan = scan.map_err(at(&args.input))?;
        if replay.push(&scan).decision.is_keep() {
            io_log::write_scan_record(&mut out, &scan)?;
        }
    }
    out.flush()?;

    if let Some(path) = &args.decisions {
        io_log::write_decisions(path, replay.decisions()).map_err(at(path))?;
    }
    let stats = replay.stats();
    if let Some(path) = &args.stats {
        io_log::write_stats(path, &stats).map_err(at(path))?;
    }
    println!(
        "drop_pct: {:.2} ({} of {} scans dropped, {} corridor keeps)",
        stats.drop_pct, stats.dropped, stats.total, stats.corridor_keeps
    );
    Ok(())
}

fn cmd_params(args: ParamsArgs) -> Result<(), CliError> {
    let profile = SpeedProfile::new(args.avg_speed_cm, args.quantum)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !(args.p_pair > 0.0 && args.p_pair <= 1.0) {
        return Err(CliError::Usage(format!(
            "p_pair must be in (0, 1], got {}",
            args.p_pair
        )));
    }
    let k = derive_window_size(&profile);
    println!("window_size: {k}");
    println!("p_common: {:.6}", derive_common_threshold(args.p_pair, k));
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let scene = match args.scene {
        SceneKind::Corridor => Scene::Corridor {
            length: args.length,
            half_width: args.half_width,
            speed_cm: args.speed_cm,
        },
        SceneKind::Room => Scene::Room {
            width: args.width,
            height: args.height,
            speed_cm: args.speed_cm,
            count: args.count,
        },
        SceneKind::OfficeLoop => Scene::OfficeLoop {
            speed_cm: args.speed_cm,
            layout: OfficeLayout::default(),
        },
        SceneKind::Stationary => Scene::Stationary { count: args.count },
    };
    let sensor = SensorModel {
        beams: args.beams,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
        ..SensorModel::default()
    };
    let sensor = SensorModel {
        fov: std::f64::consts::TAU * (sensor.beams.max(1) - 1) as f64 / sensor.beams.max(1) as f64,
        ..sensor
    };
    sensor
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if args.quantum.is_nan() || args.quantum <= 0.0 {
        return Err(CliError::Usage(format!(
            "quantum must be positive, got {}",
            args.quantum
        )));
    }
    let (world, trajectory) =
        synth::make_scene(&scene, args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let scans = synth::render(&world, &trajectory, &sensor, args.quantum);
    io_log::write_scan_log(&args.output, &scans).map_err(at(&args.output))?;
    println!("wrote {} scans ({})", scans.len(), scene.kind());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let params = args.params.resolve()?;
    let scans = io_log::read_scan_log(&args.input).map_err(at(&args.input))?;
    if scans.len() < BENCH_MIN_SCANS {
        return Err(CliError::Io(format!(
            "bench needs at least {BENCH_MIN_SCANS} scans, input has {}",
            scans.len()
        )));
    }
    let report = replay::bench(params, &scans).map_err(|e| CliError::Usage(e.to_string()))?;
    println!(
        "scans: {}  points/scan: {}  columns: {}  window: {}",
        report.scans, report.points_per_scan, params.histogram.columns, params.window_size
    );
    println!(
        "filter   p50 {} ns  p95 {} ns",
        report.stats.p50_filter_time_ns, report.stats.p95_filter_time_ns
    );
    println!(
        "matcher  p50 {} ns  p95 {} ns  ({} passes)",
        report.p50_matcher_time_ns,
        report.p95_matcher_time_ns,
        replay::MATCHER_PASSES
    );
    println!("ratio: {:.4}", report.ratio);
    println!("drop_pct: {:.2}", report.stats.drop_pct);
    Ok(())
}
