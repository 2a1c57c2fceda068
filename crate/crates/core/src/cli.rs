//! Command-line front end: `simulate`, `track`, `eval` and `compare`.
//!
//! Exit codes: 0 success, 2 validation error, 3 undefined metric, 4 I/O error.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::assoc::AssociationMode;
use crate::experiment::{self, Comparison};
use crate::metrics::{self, EvalOptions, DEFAULT_PERSISTENCE};
use crate::scenario::{self, ObservationModel, Preset};
use crate::tracker::{self, TrackerConfig};
use crate::{io, plot, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "azitrack", version, about = "Multi-speaker azimuth tracking with spatial, spectral and joint association")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an observation stream and ground truth for a scenario.
    Simulate(SimulateArgs),
    /// Track an observation stream.
    Track(TrackArgs),
    /// Score tracks against ground truth.
    Eval(EvalArgs),
    /// Run all association modes over a range of seeds and tabulate.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset name or path to a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    /// Observation-model JSON overriding the scenario's.
    #[arg(long)]
    pub obs_model: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub obs: PathBuf,
    /// Tracker configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured association mode.
    #[arg(long)]
    pub mode: Option<AssociationMode>,
    /// Number of frames to emit (default: through the last observation).
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub tracks: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Report path: JSON, or a CSV table if it ends in `.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum run length, in frames, of a counted identity switch.
    #[arg(long, default_value_t = DEFAULT_PERSISTENCE)]
    pub persistence: usize,
    /// Also score frames in which a speaker is silent.
    #[arg(long)]
    pub eval_silent: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Preset name or path to a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    /// Half-open seed range `A..B` (or inclusive `A..=B`).
    #[arg(long, default_value = "0..100", value_parser = parse_seed_range)]
    pub seeds: Range<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write SVG plots for at most this many seeds (default: all).
    #[arg(long)]
    pub max_plots: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn parse_seed_range(s: &str) -> std::result::Result<Range<u64>, String> {
    let err = || format!("expected a seed range like 0..100, got `{s}`");
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(err());
    };
    let a: u64 = a.trim().parse().map_err(|_| err())?;
    let mut b: u64 = b.trim().parse().map_err(|_| err())?;
    if inclusive {
        b += 1;
    }
    if b <= a {
        return Err(format!("empty seed range `{s}`"));
    }
    Ok(a..b)
}

/// Resolves a preset name, falling back to a scenario JSON file.
pub fn load_scenario(name_or_path: &str) -> Result<Preset> {
    if scenario::PRESET_NAMES.contains(&name_or_path) {
        return scenario::preset(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        let p: Preset = io::read_json(path)?;
        p.trajectory.validate()?;
        p.obs_model.validate()?;
        p.tracker.validate()?;
        return Ok(p);
    }
    scenario::preset(name_or_path)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let preset = load_scenario(&args.scenario)?;
    let mut model = match &args.obs_model {
        Some(p) => io::read_json::<ObservationModel>(p)?,
        None => preset.obs_model.clone(),
    };
    if let Some(seed) = args.seed {
        model.seed = seed;
    }
    let (obs, truth) = scenario::generate(&preset.trajectory, &model)?;
    std::fs::create_dir_all(&args.out)?;
    io::write_observations(&args.out.join("observations.jsonl"), &obs)?;
    io::write_truth(&args.out.join("truth.csv"), &truth)?;
    let mut cfg = preset.tracker.clone();
    cfg.motion.dt = 1.0 / model.frame_rate;
    io::write_json(&args.out.join("tracker.json"), &cfg)?;
    println!(
        "{}: {} frames, {} speakers, {} observations -> {}",
        preset.name,
        truth.num_frames(),
        truth.num_speakers(),
        obs.len(),
        args.out.display()
    );
    Ok(())
}

fn track(args: &TrackArgs) -> Result<()> {
    let obs = io::read_observations(&args.obs)?;
    let mut cfg: TrackerConfig = io::read_json(&args.config)?;
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    let result = match args.frames {
        Some(n) => tracker::run_frames(&obs, &cfg, n)?,
        None => tracker::run(&obs, &cfg)?,
    };
    std::fs::create_dir_all(&args.out)?;
    io::write_tracks(
        &args.out.join("tracks.csv"),
        Some(&args.out.join("diagnostics.jsonl")),
        &result,
    )?;
    let underflows: usize = result
        .frames
        .iter()
        .flat_map(|f| &f.diagnostics.updates)
        .filter(|u| u.underflow)
        .count();
    let gated: usize = result.frames.iter().map(|f| f.diagnostics.gated).sum();
    println!(
        "{} mode: {} frames x {} tracks ({} observations, {} gated, {} underflows) -> {}",
        cfg.mode,
        result.frames.len(),
        result.num_speakers(),
        obs.len(),
        gated,
        underflows,
        args.out.display()
    );
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let tracks = io::read_tracks(&args.tracks, None)?;
    let truth = io::read_truth(&args.truth)?;
    let opts = EvalOptions {
        eval_silent: args.eval_silent,
        persistence: args.persistence,
    };
    let report = metrics::evaluate(&tracks, &truth, opts)?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    io::write_report(&args.out, &report)?;
    println!(
        "rlmae {:.3} deg, {} identity switches, {} frames",
        report.rlmae_deg, report.identity_switches, report.frames_evaluated
    );
    Ok(())
}

fn print_summary(c: &Comparison) {
    println!("{:<10} {:>12} {:>12} {:>16}", "mode", "median (deg)", "mean (deg)", "runs w/ switches");
    for m in &c.summary {
        println!(
            "{:<10} {:>12.3} {:>12.3} {:>10}/{:<5}",
            m.mode.as_str(),
            m.median_rlmae_deg,
            m.mean_rlmae_deg,
            m.runs_with_switches,
            m.runs
        );
    }
}

pub fn compare(args: &CompareArgs) -> Result<Comparison> {
    let preset = load_scenario(&args.scenario)?;
    let plots_dir = args.out.join("plots");
    std::fs::create_dir_all(&plots_dir)?;
    let max_plots = args.max_plots.unwrap_or(usize::MAX);
    let mut plotted = 0;
    let frame_rate = preset.obs_model.frame_rate;
    let mut run = |preset: &Preset| {
        experiment::compare_with(preset, args.seeds.clone(), EvalOptions::default(), |run| {
            if plotted >= max_plots {
                return Ok(());
            }
            plotted += 1;
            let modes: Vec<_> = run.modes.iter().map(|(m, t, _)| (*m, t)).collect();
            let svg = plot::render_run(
                &format!("{} seed {}", preset.name, run.seed),
                &run.observations,
                &run.truth,
                &modes,
                frame_rate,
            );
            std::fs::write(plots_dir.join(format!("{}_seed{:04}.svg", preset.name, run.seed)), svg)?;
            Ok(())
        })
    };
    let comparison = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| run(&preset))?,
        None => run(&preset)?,
    };
    experiment::write_comparison(&args.out, &comparison)?;
    Ok(comparison)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Track(a) => track(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => {
            let c = compare(a)?;
            print_summary(&c);
            Ok(())
        }
    }
}

/// Entry point used by the `azitrack` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
