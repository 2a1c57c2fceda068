//! Track scoring: optimal track-to-speaker assignment, recording-level mean
//! absolute error (RLMAE) and persistent identity-switch counting.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::circular::ang_diff;
use crate::scenario::GroundTruth;
use crate::tracker::TrackResult;
use crate::{Error, Result};

/// Default persistence for switch counting, frames (0.4 s at 62.5 fps).
pub const DEFAULT_PERSISTENCE: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Include frames in which the speaker is silent.
    pub eval_silent: bool,
    pub persistence: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            eval_silent: false,
            persistence: DEFAULT_PERSISTENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `assignment[track] = speaker`.
    pub assignment: Vec<usize>,
    pub rlmae_deg: f64,
    /// Per speaker, `None` when the speaker never contributes a frame.
    pub per_speaker_mae_deg: Vec<Option<f64>>,
    pub identity_switches: usize,
    pub frames_evaluated: usize,
}

fn check_shapes(tracks: &TrackResult, truth: &GroundTruth) -> Result<usize> {
    let q_tracks = tracks.num_speakers();
    let q_truth = truth.num_speakers();
    if q_tracks != q_truth {
        return Err(Error::invalid(format!(
            "{q_tracks} tracks but {q_truth} ground-truth speakers"
        )));
    }
    if tracks.frames.iter().any(|f| f.points.len() != q_tracks)
        || truth.frames.iter().any(|f| f.len() != q_truth)
    {
        return Err(Error::invalid("ragged track or truth table"));
    }
    Ok(q_tracks)
}

/// Frames present in both tables, as `(track frame index, truth frame index)`.
fn paired_frames<'a>(
    tracks: &'a TrackResult,
    truth: &'a GroundTruth,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    tracks
        .frames
        .iter()
        .enumerate()
        .filter(move |(_, f)| f.frame < truth.frames.len())
        .map(|(i, f)| (i, f.frame))
}

fn check_assignment(assignment: &[usize], q: usize) -> Result<()> {
    let mut seen = vec![false; q];
    if assignment.len() != q {
        return Err(Error::invalid("assignment length differs from track count"));
    }
    for &s in assignment {
        if s >= q || seen[s] {
            return Err(Error::invalid("assignment is not a bijection"));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Bijection minimising summed absolute azimuth error over the frames in
/// which each speaker is active. Exhaustive over all permutations; ties go to
/// the lexicographically first permutation.
pub fn assign_tracks(tracks: &TrackResult, truth: &GroundTruth) -> Result<Vec<usize>> {
    let q = check_shapes(tracks, truth)?;
    if q == 0 {
        return Ok(Vec::new());
    }
    // cost[t][s]: track t against speaker s
    let mut cost = vec![vec![0.0; q]; q];
    for (ti, fi) in paired_frames(tracks, truth) {
        let points = &tracks.frames[ti].points;
        for (s, p) in truth.frames[fi].iter().enumerate() {
            if !p.active {
                continue;
            }
            for (t, row) in cost.iter_mut().enumerate() {
                row[s] += ang_diff(points[t].az, p.az).abs();
            }
        }
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..q).permutations(q) {
        let total: f64 = perm.iter().enumerate().map(|(t, &s)| cost[t][s]).sum();
        if best.as_ref().is_none_or(|(c, _)| total < *c) {
            best = Some((total, perm));
        }
    }
    Ok(best.expect("at least one permutation").1)
}

struct ErrorSums {
    total: f64,
    count: usize,
    per_speaker: Vec<(f64, usize)>,
    frames: usize,
}

fn error_sums(tracks: &TrackResult, truth: &GroundTruth, assignment: &[usize], eval_silent: bool) -> Result<ErrorSums> {
    let q = check_shapes(tracks, truth)?;
    check_assignment(assignment, q)?;
    let mut sums = ErrorSums {
        total: 0.0,
        count: 0,
        per_speaker: vec![(0.0, 0); q],
        frames: 0,
    };
    for (ti, fi) in paired_frames(tracks, truth) {
        let points = &tracks.frames[ti].points;
        let mut any = false;
        for (t, &s) in assignment.iter().enumerate() {
            let p = truth.frames[fi][s];
            if !(p.active || eval_silent) {
                continue;
            }
            let e = ang_diff(points[t].az, p.az).abs().to_degrees();
            sums.total += e;
            sums.count += 1;
            sums.per_speaker[s].0 += e;
            sums.per_speaker[s].1 += 1;
            any = true;
        }
        sums.frames += usize::from(any);
    }
    Ok(sums)
}

/// Mean absolute azimuth error in degrees over all evaluated (frame, speaker) pairs.
pub fn rlmae(tracks: &TrackResult, truth: &GroundTruth, assignment: &[usize], eval_silent: bool) -> Result<f64> {
    let sums = error_sums(tracks, truth, assignment, eval_silent)?;
    if sums.count == 0 {
        return Err(Error::UndefinedMetric("no active speaker frames to evaluate".into()));
    }
    Ok(sums.total / sums.count as f64)
}

/// Counts persistent identity changes.
///
/// In every frame where its assigned speaker is active, a track is labelled
/// with the nearest active speaker. Label runs shorter than `persistence`
/// frames are ignored. The first persistent run fixes the track's identity;
/// each later persistent run with a different label counts as one switch.
pub fn identity_switches(
    tracks: &TrackResult,
    truth: &GroundTruth,
    assignment: &[usize],
    persistence: usize,
) -> Result<usize> {
    let q = check_shapes(tracks, truth)?;
    check_assignment(assignment, q)?;
    let persistence = persistence.max(1);
    let mut switches = 0;
    for (t, &own) in assignment.iter().enumerate() {
        let mut committed: Option<usize> = None;
        let mut run: Option<(usize, usize)> = None; // (label, length)
        for (ti, fi) in paired_frames(tracks, truth) {
            let speakers = &truth.frames[fi];
            if !speakers[own].active {
                continue;
            }
            let az = tracks.frames[ti].points[t].az;
            let label = speakers
                .iter()
                .enumerate()
                .filter(|(_, p)| p.active)
                .min_by(|a, b| {
                    ang_diff(az, a.1.az)
                        .abs()
                        .total_cmp(&ang_diff(az, b.1.az).abs())
                })
                .map(|(s, _)| s)
                .expect("own speaker is active");
            let len = match run {
                Some((l, n)) if l == label => n + 1,
                _ => 1,
            };
            run = Some((label, len));
            if len == persistence {
                match committed {
                    None => committed = Some(label),
                    Some(c) if c != label => {
                        switches += 1;
                        committed = Some(label);
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(switches)
}

/// Assignment, RLMAE, per-speaker MAE and switch count in one pass.
pub fn evaluate(tracks: &TrackResult, truth: &GroundTruth, opts: EvalOptions) -> Result<EvalReport> {
    let assignment = assign_tracks(tracks, truth)?;
    let sums = error_sums(tracks, truth, &assignment, opts.eval_silent)?;
    if sums.count == 0 {
        return Err(Error::UndefinedMetric("no active speaker frames to evaluate".into()));
    }
    let identity_switches = identity_switches(tracks, truth, &assignment, opts.persistence)?;
    Ok(EvalReport {
        rlmae_deg: sums.total / sums.count as f64,
        per_speaker_mae_deg: sums
            .per_speaker
            .iter()
            .map(|&(s, n)| (n > 0).then(|| s / n as f64))
            .collect(),
        identity_switches,
        frames_evaluated: sums.frames,
        assignment,
    })
}
