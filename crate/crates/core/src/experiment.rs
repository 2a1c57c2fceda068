//! Seeded ablation runs: one scenario, many seeds, all three association modes.

use std::fmt::Write as _;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use crate::assoc::AssociationMode;
use crate::metrics::{self, EvalOptions, EvalReport};
use crate::scenario::{self, GroundTruth, Preset};
use crate::tracker::{self, Observation, TrackResult};
use crate::Result;

pub const SUMMARY_HEADER: &str =
    "scenario,mode,runs,median_rlmae_deg,mean_rlmae_deg,switch_free_runs,runs_with_switches,total_switches";
pub const RUNS_HEADER: &str = "scenario,mode,seed,rlmae_deg,identity_switches";

/// Everything produced by one seed of a scenario.
pub struct SeedRun {
    pub seed: u64,
    pub observations: Vec<Observation>,
    pub truth: GroundTruth,
    /// In [`AssociationMode::ALL`] order.
    pub modes: Vec<(AssociationMode, TrackResult, EvalReport)>,
}

/// Simulates `preset` with `seed` and tracks it in every mode.
pub fn run_seed(preset: &Preset, seed: u64, opts: EvalOptions) -> Result<SeedRun> {
    let mut obs_model = preset.obs_model.clone();
    obs_model.seed = seed;
    let (observations, truth) = scenario::generate(&preset.trajectory, &obs_model)?;
    let modes = AssociationMode::ALL
        .iter()
        .map(|&mode| {
            let mut cfg = preset.tracker.clone();
            cfg.mode = mode;
            cfg.seed = seed;
            let tracks = tracker::run_frames(&observations, &cfg, truth.num_frames())?;
            let report = metrics::evaluate(&tracks, &truth, opts)?;
            Ok((mode, tracks, report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun {
        seed,
        observations,
        truth,
        modes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub mode: AssociationMode,
    pub seed: u64,
    pub rlmae_deg: f64,
    pub identity_switches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub mode: AssociationMode,
    pub runs: usize,
    pub median_rlmae_deg: f64,
    pub mean_rlmae_deg: f64,
    pub switch_free_runs: usize,
    pub runs_with_switches: usize,
    pub total_switches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    /// Ordered by (mode, seed).
    pub runs: Vec<RunRecord>,
    pub summary: Vec<ModeSummary>,
}

impl Comparison {
    pub fn mode(&self, mode: AssociationMode) -> &ModeSummary {
        self.summary.iter().find(|s| s.mode == mode).expect("all modes summarised")
    }

    pub fn runs_of(&self, mode: AssociationMode) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.mode == mode)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarise(mode: AssociationMode, runs: &[RunRecord]) -> ModeSummary {
    let errors: Vec<f64> = runs.iter().map(|r| r.rlmae_deg).collect();
    let with_switches = runs.iter().filter(|r| r.identity_switches > 0).count();
    ModeSummary {
        mode,
        runs: runs.len(),
        median_rlmae_deg: median(&errors),
        mean_rlmae_deg: errors.iter().sum::<f64>() / errors.len().max(1) as f64,
        switch_free_runs: runs.len() - with_switches,
        runs_with_switches: with_switches,
        total_switches: runs.iter().map(|r| r.identity_switches).sum(),
    }
}

/// Runs every seed in parallel and, for each finished seed, hands the full
/// run to `inspect` (in seed order) before it is dropped.
pub fn compare_with<F>(preset: &Preset, seeds: Range<u64>, opts: EvalOptions, mut inspect: F) -> Result<Comparison>
where
    F: FnMut(&SeedRun) -> Result<()>,
{
    let seeds: Vec<u64> = seeds.collect();
    let runs: Vec<SeedRun> = seeds
        .par_iter()
        .map(|&seed| run_seed(preset, seed, opts))
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(runs.len() * 3);
    for run in &runs {
        inspect(run)?;
    }
    for mode in AssociationMode::ALL {
        for run in &runs {
            let (_, _, report) = run.modes.iter().find(|m| m.0 == mode).expect("mode ran");
            records.push(RunRecord {
                mode,
                seed: run.seed,
                rlmae_deg: report.rlmae_deg,
                identity_switches: report.identity_switches,
            });
        }
    }
    let summary = AssociationMode::ALL
        .iter()
        .map(|&mode| {
            let subset: Vec<RunRecord> = records.iter().filter(|r| r.mode == mode).cloned().collect();
            summarise(mode, &subset)
        })
        .collect();
    Ok(Comparison {
        scenario: preset.name.clone(),
        runs: records,
        summary,
    })
}

pub fn compare(preset: &Preset, seeds: Range<u64>, opts: EvalOptions) -> Result<Comparison> {
    compare_with(preset, seeds, opts, |_| Ok(()))
}

pub fn summary_csv(c: &Comparison) -> String {
    let mut s = String::new();
    writeln!(s, "{SUMMARY_HEADER}").unwrap();
    for m in &c.summary {
        writeln!(
            s,
            "{},{},{},{:.4},{:.4},{},{},{}",
            c.scenario,
            m.mode,
            m.runs,
            m.median_rlmae_deg,
            m.mean_rlmae_deg,
            m.switch_free_runs,
            m.runs_with_switches,
            m.total_switches
        )
        .unwrap();
    }
    s
}

pub fn runs_csv(c: &Comparison) -> String {
    let mut s = String::new();
    writeln!(s, "{RUNS_HEADER}").unwrap();
    for r in &c.runs {
        writeln!(s, "{},{},{},{:.6},{}", c.scenario, r.mode, r.seed, r.rlmae_deg, r.identity_switches).unwrap();
    }
    s
}

/// Writes `summary.csv` and `runs.csv` into `dir`.
pub fn write_comparison(dir: &Path, c: &Comparison) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::File::create(dir.join("summary.csv"))?.write_all(summary_csv(c).as_bytes())?;
    std::fs::File::create(dir.join("runs.csv"))?.write_all(runs_csv(c).as_bytes())?;
    Ok(())
}
