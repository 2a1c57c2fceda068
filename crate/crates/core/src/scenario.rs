//! Synthetic ground truth and observation streams.
//!
//! Speakers follow piecewise-linear azimuth paths (shortest arc between
//! knots) and talk during activity intervals. Each frame has a fixed number
//! of bins; every bin is dominated by one active speaker whose azimuth is
//! observed with Gaussian noise (or replaced by a uniform outlier), and whose
//! mask value is drawn around `mask_fidelity`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::assoc::{AssociationMode, MaskVector};
use crate::circular::{ang_diff, WrappedAngle};
use crate::tracker::{Observation, TrackerConfig};
use crate::wkf::MotionModel;
use crate::{Error, Result};

/// Linear azimuth segment, radians. Interpolation follows the shortest arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_time: f64,
    pub start_az: f64,
    pub end_time: f64,
    pub end_az: f64,
}

/// Closed activity interval `[on, off]`, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub on: f64,
    pub off: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerPath {
    pub segments: Vec<Segment>,
    pub activity: Vec<Interval>,
}

impl SpeakerPath {
    /// Speaker parked at `az` for the whole recording.
    pub fn stationary(az: f64, duration: f64, activity: Vec<Interval>) -> Self {
        SpeakerPath {
            segments: vec![Segment {
                start_time: 0.0,
                start_az: az,
                end_time: duration,
                end_az: az,
            }],
            activity,
        }
    }

    /// Path through `(time, az)` knots, linear in between.
    pub fn through(knots: &[(f64, f64)], activity: Vec<Interval>) -> Self {
        let segments = knots
            .windows(2)
            .map(|k| Segment {
                start_time: k[0].0,
                start_az: k[0].1,
                end_time: k[1].0,
                end_az: k[1].1,
            })
            .collect();
        SpeakerPath { segments, activity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub duration: f64,
    pub speakers: Vec<SpeakerPath>,
}

const TIME_EPS: f64 = 1e-9;

impl TrajectorySpec {
    pub fn num_speakers(&self) -> usize {
        self.speakers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive"));
        }
        if self.speakers.is_empty() {
            return Err(Error::invalid("trajectory has no speakers"));
        }
        for (q, sp) in self.speakers.iter().enumerate() {
            let segs = &sp.segments;
            if segs.is_empty() {
                return Err(Error::invalid(format!("speaker {q}: no segments")));
            }
            if segs[0].start_time.abs() > TIME_EPS {
                return Err(Error::invalid(format!("speaker {q}: first segment must start at 0")));
            }
            if (segs[segs.len() - 1].end_time - self.duration).abs() > TIME_EPS {
                return Err(Error::invalid(format!(
                    "speaker {q}: last segment must end at duration {}",
                    self.duration
                )));
            }
            for (i, s) in segs.iter().enumerate() {
                if !(s.end_time > s.start_time) || !s.start_az.is_finite() || !s.end_az.is_finite() {
                    return Err(Error::invalid(format!("speaker {q}: segment {i} is malformed")));
                }
                if i > 0 && (segs[i - 1].end_time - s.start_time).abs() > TIME_EPS {
                    return Err(Error::invalid(format!(
                        "speaker {q}: segment {i} does not start where segment {} ends",
                        i - 1
                    )));
                }
            }
            for (i, iv) in sp.activity.iter().enumerate() {
                if !(iv.on >= 0.0 && iv.off <= self.duration && iv.on < iv.off) {
                    return Err(Error::invalid(format!("speaker {q}: activity interval {i} is malformed")));
                }
                if i > 0 && sp.activity[i - 1].off > iv.on {
                    return Err(Error::invalid(format!(
                        "speaker {q}: activity intervals {} and {i} overlap or are unsorted",
                        i - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ground-truth azimuth and voice activity of one speaker at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthPoint {
    pub az: WrappedAngle,
    pub active: bool,
}

/// Per-frame ground truth; `frames[k][q]` is speaker `q` at frame `k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub frames: Vec<Vec<TruthPoint>>,
}

impl GroundTruth {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_speakers(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }
}

/// Positions and activity of every speaker at time `t`.
pub fn truth_at(spec: &TrajectorySpec, t: f64) -> Result<Vec<TruthPoint>> {
    if !(t >= -TIME_EPS && t <= spec.duration + TIME_EPS) {
        return Err(Error::invalid(format!(
            "time {t} outside [0, {}]",
            spec.duration
        )));
    }
    spec.speakers
        .iter()
        .map(|sp| {
            let seg = sp
                .segments
                .iter()
                .find(|s| t < s.end_time)
                .unwrap_or_else(|| sp.segments.last().expect("validated path"));
            let start = WrappedAngle::new(seg.start_az)?;
            let end = WrappedAngle::new(seg.end_az)?;
            let frac = ((t - seg.start_time) / (seg.end_time - seg.start_time)).clamp(0.0, 1.0);
            let az = start.rotate(frac * ang_diff(end, start))?;
            let active = sp.activity.iter().any(|iv| iv.on <= t && t <= iv.off);
            Ok(TruthPoint { az, active })
        })
        .collect()
}

/// Statistics of the simulated localisation and separation front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    /// Frames per second.
    pub frame_rate: f64,
    pub bins_per_frame: usize,
    /// Azimuth noise standard deviation, radians.
    pub doa_noise_sigma: f64,
    pub outlier_rate: f64,
    /// Mean mask value of the dominant speaker, in [0.5, 1].
    pub mask_fidelity: f64,
    pub mask_noise_sigma: f64,
    pub seed: u64,
}

impl ObservationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::invalid("frame_rate must be positive"));
        }
        if self.bins_per_frame == 0 {
            return Err(Error::invalid("bins_per_frame must be at least 1"));
        }
        if !(self.doa_noise_sigma > 0.0 && self.doa_noise_sigma.is_finite()) {
            return Err(Error::invalid("doa_noise_sigma must be positive"));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::invalid("outlier_rate must lie in [0, 1]"));
        }
        if !(0.5..=1.0).contains(&self.mask_fidelity) {
            return Err(Error::invalid("mask_fidelity must lie in [0.5, 1]"));
        }
        if !(self.mask_noise_sigma >= 0.0 && self.mask_noise_sigma.is_finite()) {
            return Err(Error::invalid("mask_noise_sigma must be non-negative"));
        }
        Ok(())
    }

    /// Number of frames covering `[0, duration]`.
    pub fn num_frames(&self, duration: f64) -> usize {
        (duration * self.frame_rate + TIME_EPS).floor() as usize + 1
    }

    pub fn frame_time(&self, frame: usize) -> f64 {
        frame as f64 / self.frame_rate
    }
}

/// Mask vector for a bin dominated by `dominant`.
///
/// The dominant channel gets `clamp(fidelity + noise, 0, 1)`; the others
/// share the complement equally. For two speakers the pair sums to exactly 1.
pub fn draw_masks<R: Rng + ?Sized>(
    rng: &mut R,
    num_speakers: usize,
    dominant: usize,
    fidelity: f64,
    noise_sigma: f64,
) -> MaskVector {
    let noise = if noise_sigma > 0.0 {
        Normal::new(0.0, noise_sigma).expect("valid sigma").sample(rng)
    } else {
        0.0
    };
    let mut m = (fidelity + noise).clamp(0.0, 1.0);
    let mut values = vec![0.0; num_speakers];
    if num_speakers == 1 {
        values[0] = m;
    } else if num_speakers == 2 {
        let mut other = 1.0 - m;
        if m < 0.5 {
            // make the pair sum to 1 exactly in floating point
            m = 1.0 - other;
        } else {
            other = 1.0 - m;
        }
        values[dominant] = m;
        values[1 - dominant] = other;
    } else {
        let share = (1.0 - m) / (num_speakers - 1) as f64;
        values.iter_mut().for_each(|v| *v = share);
        values[dominant] = m;
    }
    MaskVector::new(values).expect("mask values in [0, 1]")
}

/// Ground truth sampled at every frame time.
pub fn ground_truth(spec: &TrajectorySpec, model: &ObservationModel) -> Result<GroundTruth> {
    spec.validate()?;
    model.validate()?;
    let frames = (0..model.num_frames(spec.duration))
        .map(|k| truth_at(spec, model.frame_time(k).min(spec.duration)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth { frames })
}

/// Observation stream plus ground truth. Deterministic in `model.seed`.
pub fn generate(spec: &TrajectorySpec, model: &ObservationModel) -> Result<(Vec<Observation>, GroundTruth)> {
    let truth = ground_truth(spec, model)?;
    if !truth.frames.iter().flatten().any(|p| p.active) {
        return Err(Error::EmptyScenario);
    }
    let q = spec.num_speakers();
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let doa_noise = Normal::new(0.0, model.doa_noise_sigma).expect("validated sigma");
    let mut out = Vec::new();
    for (frame, points) in truth.frames.iter().enumerate() {
        let active: Vec<usize> = (0..q).filter(|&i| points[i].active).collect();
        if active.is_empty() {
            continue;
        }
        for bin in 0..model.bins_per_frame {
            let dominant = active[rng.random_range(0..active.len())];
            let az = if model.outlier_rate > 0.0 && rng.random::<f64>() < model.outlier_rate {
                WrappedAngle::new(rng.random_range(-PI..PI))?
            } else {
                points[dominant].az.rotate(doa_noise.sample(&mut rng))?
            };
            let masks = draw_masks(&mut rng, q, dominant, model.mask_fidelity, model.mask_noise_sigma);
            out.push(Observation {
                frame,
                bin,
                az,
                masks,
            });
        }
    }
    Ok((out, truth))
}

/// A named, fully specified experiment: trajectories, front-end statistics
/// and the tracker tuning used for all three association modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub trajectory: TrajectorySpec,
    pub obs_model: ObservationModel,
    pub tracker: TrackerConfig,
}

pub const PRESET_NAMES: [&str; 3] = ["static_far", "static_degraded", "crossing"];

/// Frame rate of a 16 kHz STFT with a 512-sample window and 50 % overlap.
pub const DEFAULT_FRAME_RATE: f64 = 62.5;

fn always(duration: f64) -> Vec<Interval> {
    vec![Interval { on: 0.0, off: duration }]
}

fn base_model(fidelity: f64, mask_noise: f64, doa_deg: f64) -> ObservationModel {
    ObservationModel {
        frame_rate: DEFAULT_FRAME_RATE,
        bins_per_frame: 8,
        doa_noise_sigma: doa_deg.to_radians(),
        outlier_rate: 0.0,
        mask_fidelity: fidelity,
        mask_noise_sigma: mask_noise,
        seed: 0,
    }
}

fn base_tracker(q_accel: f64, r_obs_deg: f64, init_window: f64) -> TrackerConfig {
    let motion = MotionModel::new(1.0 / DEFAULT_FRAME_RATE, q_accel, r_obs_deg.to_radians().powi(2))
        .expect("preset motion model");
    TrackerConfig::new(2, motion, AssociationMode::Joint, init_window)
}

/// Looks up a built-in scenario by name.
pub fn preset(name: &str) -> Result<Preset> {
    let p = match name {
        // two parked speakers 90 degrees apart, good masks
        "static_far" => {
            let d = 10.0;
            Preset {
                name: name.into(),
                trajectory: TrajectorySpec {
                    duration: d,
                    speakers: vec![
                        SpeakerPath::stationary((-45f64).to_radians(), d, always(d)),
                        SpeakerPath::stationary(45f64.to_radians(), d, always(d)),
                    ],
                },
                obs_model: base_model(0.9, 0.05, 2.0),
                tracker: base_tracker(1e-3, 2.0, 0.5),
            }
        }
        // two parked speakers 30 degrees apart, poor masks
        "static_degraded" => {
            let d = 10.0;
            Preset {
                name: name.into(),
                trajectory: TrajectorySpec {
                    duration: d,
                    speakers: vec![
                        SpeakerPath::stationary((-15f64).to_radians(), d, always(d)),
                        SpeakerPath::stationary(15f64.to_radians(), d, always(d)),
                    ],
                },
                obs_model: base_model(0.7, 0.15, 2.0),
                tracker: base_tracker(1e-3, 2.0, 0.5),
            }
        }
        // speakers swap sides along opposite linear arcs that start just before
        // a shared silence and end just after it, crossing at t = 10 s
        "crossing" => {
            let d = 20.0;
            let gap = |d: f64| {
                vec![
                    Interval { on: 0.0, off: 8.5 },
                    Interval { on: 11.5, off: d },
                ]
            };
            let a = (-20f64).to_radians();
            let b = 20f64.to_radians();
            Preset {
                name: name.into(),
                trajectory: TrajectorySpec {
                    duration: d,
                    speakers: vec![
                        SpeakerPath::through(&[(0.0, a), (8.4, a), (11.6, b), (d, b)], gap(d)),
                        SpeakerPath::through(&[(0.0, b), (8.4, b), (11.6, a), (d, a)], gap(d)),
                    ],
                },
                obs_model: base_model(0.95, 0.05, 2.0),
                tracker: base_tracker(1e-2, 2.0, 0.5),
            }
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown scenario preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}
