//! Multi-speaker tracker: clustering initialisation, per-frame prediction and
//! sequential per-bin JPDA corrections.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::assoc::{self, AssociationMode, MaskVector, DEFAULT_MASK_FLOOR};
use crate::circular::{circular_kmeans, WrappedAngle};
use crate::wkf::{self, Innovation, MotionModel, SpeakerState};
use crate::{Error, Result};

/// One time-frequency-bin azimuth estimate with the speakers' mask values.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub frame: usize,
    pub bin: usize,
    pub az: WrappedAngle,
    pub masks: MaskVector,
}

/// How observations within one frame see the filter states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameBatch {
    /// Each observation is associated against the partially updated states.
    #[default]
    Sequential,
    /// Innovations and β for the whole frame are taken from the prediction.
    Frozen,
}

fn default_init_cov_scale() -> f64 {
    1e-4
}

fn default_mask_floor() -> f64 {
    DEFAULT_MASK_FLOOR
}

fn default_kmeans_iters() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub num_speakers: usize,
    pub motion: MotionModel,
    pub mode: AssociationMode,
    /// Seconds of data used for the clustering initialisation.
    pub init_window: f64,
    #[serde(default = "default_init_cov_scale")]
    pub init_cov_scale: f64,
    #[serde(default = "default_mask_floor")]
    pub mask_floor: f64,
    /// Mahalanobis gate; an observation outside it for every speaker is skipped.
    #[serde(default)]
    pub gate_radius: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub frame_batch: FrameBatch,
    #[serde(default = "default_kmeans_iters")]
    pub kmeans_max_iters: usize,
}

impl TrackerConfig {
    pub fn new(num_speakers: usize, motion: MotionModel, mode: AssociationMode, init_window: f64) -> Self {
        TrackerConfig {
            num_speakers,
            motion,
            mode,
            init_window,
            init_cov_scale: default_init_cov_scale(),
            mask_floor: default_mask_floor(),
            gate_radius: None,
            seed: 0,
            frame_batch: FrameBatch::Sequential,
            kmeans_max_iters: default_kmeans_iters(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_speakers == 0 {
            return Err(Error::invalid("num_speakers must be at least 1"));
        }
        self.motion.validate()?;
        if !(self.init_window > 0.0) {
            return Err(Error::invalid("init_window must be positive"));
        }
        if !(self.init_cov_scale > 0.0 && self.init_cov_scale.is_finite()) {
            return Err(Error::invalid("init_cov_scale must be positive"));
        }
        if !(self.mask_floor > 0.0 && self.mask_floor < 0.5) {
            return Err(Error::invalid("mask_floor must lie in (0, 0.5)"));
        }
        if let Some(r) = self.gate_radius {
            if !(r > 0.0) {
                return Err(Error::invalid("gate_radius must be positive"));
            }
        }
        Ok(())
    }

    fn frame_time(&self, frame: usize) -> f64 {
        frame as f64 * self.motion.dt
    }
}

/// β vector produced by one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinUpdate {
    pub bin: usize,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub underflow: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub frame: usize,
    pub updates: Vec<BinUpdate>,
    /// Observations skipped by the gate.
    #[serde(default)]
    pub gated: usize,
}

/// Azimuth estimate and its variance for one speaker in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub az: WrappedAngle,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackFrame {
    pub frame: usize,
    pub points: Vec<TrackPoint>,
    pub diagnostics: FrameDiagnostics,
}

/// Tracker output: one entry per frame, one point per speaker.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackResult {
    pub frames: Vec<TrackFrame>,
}

impl TrackResult {
    pub fn num_speakers(&self) -> usize {
        self.frames.first().map_or(0, |f| f.points.len())
    }

    /// Azimuth series of one speaker's track.
    pub fn track(&self, speaker: usize) -> Vec<WrappedAngle> {
        self.frames.iter().map(|f| f.points[speaker].az).collect()
    }
}

fn check_masks(obs: &Observation, q: usize) -> Result<()> {
    if obs.masks.len() != q {
        return Err(Error::invalid(format!(
            "observation (frame {}, bin {}) has {} mask values for {q} speakers",
            obs.frame,
            obs.bin,
            obs.masks.len()
        )));
    }
    Ok(())
}

/// Checks that the stream is strictly increasing in `(frame, bin)`.
pub fn validate_stream(observations: &[Observation]) -> Result<()> {
    for pair in observations.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if (a.frame, a.bin) == (b.frame, b.bin) {
            return Err(Error::invalid(format!(
                "duplicate observation for frame {}, bin {}",
                b.frame, b.bin
            )));
        }
        if (a.frame, a.bin) > (b.frame, b.bin) {
            return Err(Error::invalid(format!(
                "stream not sorted: (frame {}, bin {}) follows (frame {}, bin {})",
                b.frame, b.bin, a.frame, a.bin
            )));
        }
    }
    Ok(())
}

/// Initial states from k-means over the azimuths seen in the first
/// `init_window` seconds, ordered by ascending azimuth.
pub fn initialize(observations: &[Observation], config: &TrackerConfig) -> Result<Vec<SpeakerState>> {
    config.validate()?;
    let points: Vec<WrappedAngle> = observations
        .iter()
        .filter(|o| config.frame_time(o.frame) < config.init_window)
        .map(|o| o.az)
        .collect();
    let window = format!("first {} s", config.init_window);
    if points.is_empty() {
        return Err(Error::Initialization(format!("no observations in the {window}")));
    }
    let mut distinct: Vec<u64> = points.iter().map(|p| p.radians().to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < config.num_speakers {
        return Err(Error::Initialization(format!(
            "{} distinct azimuths in the {window}, need {}",
            distinct.len(),
            config.num_speakers
        )));
    }
    let mut centers = circular_kmeans(&points, config.num_speakers, config.seed, config.kmeans_max_iters)?;
    centers.sort_by(|a, b| a.radians().total_cmp(&b.radians()));
    let cov = Matrix2::identity() * config.init_cov_scale;
    centers
        .into_iter()
        .map(|c| SpeakerState::new(c, 0.0, cov))
        .collect()
}

/// Advances every state by one prediction, then absorbs the frame's
/// observations one at a time in ascending bin order.
pub fn step_frame(
    states: &[SpeakerState],
    frame: usize,
    frame_obs: &[Observation],
    config: &TrackerConfig,
) -> Result<(Vec<SpeakerState>, FrameDiagnostics)> {
    let q = states.len();
    if q != config.num_speakers {
        return Err(Error::invalid(format!(
            "{q} states for {} speakers",
            config.num_speakers
        )));
    }
    if let Some(o) = frame_obs.iter().find(|o| o.frame != frame) {
        return Err(Error::invalid(format!(
            "observation from frame {} passed to frame {frame}",
            o.frame
        )));
    }
    for o in frame_obs {
        check_masks(o, q)?;
    }
    let motion = &config.motion;
    let mut current: Vec<SpeakerState> = states.iter().map(|s| wkf::predict(s, motion)).collect();
    let predicted = current.clone();

    let mut ordered: Vec<&Observation> = frame_obs.iter().collect();
    ordered.sort_by_key(|o| o.bin);

    let mut diag = FrameDiagnostics {
        frame,
        ..Default::default()
    };
    for obs in ordered {
        let reference = match config.frame_batch {
            FrameBatch::Sequential => &current,
            FrameBatch::Frozen => &predicted,
        };
        let innovations: Vec<Innovation> = reference
            .iter()
            .map(|s| wkf::innovation(s, obs.az, motion))
            .collect();
        if let Some(radius) = config.gate_radius {
            if innovations.iter().all(|i| i.mahalanobis2() > radius * radius) {
                diag.gated += 1;
                continue;
            }
        }
        let likelihoods: Vec<f64> = innovations.iter().map(|i| i.likelihood).collect();
        let detect = assoc::detection_probabilities(&obs.masks, config.mode, config.mask_floor);
        let association = assoc::association_probabilities(&likelihoods, &detect, config.mode)?;
        for ((state, inn), &beta) in current.iter_mut().zip(&innovations).zip(&association.beta) {
            let s = match config.frame_batch {
                FrameBatch::Sequential => inn.s,
                FrameBatch::Frozen => state.cov[(0, 0)] + motion.r_obs,
            };
            *state = wkf::update(state, inn.g, s, beta, motion)?;
        }
        diag.updates.push(BinUpdate {
            bin: obs.bin,
            beta: association.beta,
            underflow: association.underflow,
        });
    }
    Ok((current, diag))
}

/// Runs the filter bank from explicit initial states over frames
/// `0..num_frames`. Frames without observations are prediction-only.
pub fn run_from(
    initial: Vec<SpeakerState>,
    observations: &[Observation],
    config: &TrackerConfig,
    num_frames: usize,
) -> Result<TrackResult> {
    config.validate()?;
    validate_stream(observations)?;
    let mut states = initial;
    let mut frames = Vec::with_capacity(num_frames);
    let mut cursor = 0;
    for frame in 0..num_frames {
        let start = cursor;
        while cursor < observations.len() && observations[cursor].frame == frame {
            cursor += 1;
        }
        let (next, diagnostics) = step_frame(&states, frame, &observations[start..cursor], config)?;
        states = next;
        frames.push(TrackFrame {
            frame,
            points: states
                .iter()
                .map(|s| TrackPoint {
                    az: s.azimuth(),
                    variance: s.azimuth_variance(),
                })
                .collect(),
            diagnostics,
        });
    }
    Ok(TrackResult { frames })
}

/// Initialises on the configured window and tracks over `0..num_frames`.
pub fn run_frames(observations: &[Observation], config: &TrackerConfig, num_frames: usize) -> Result<TrackResult> {
    config.validate()?;
    validate_stream(observations)?;
    let initial = initialize(observations, config)?;
    run_from(initial, observations, config, num_frames)
}

/// Tracks through the last observed frame.
pub fn run(observations: &[Observation], config: &TrackerConfig) -> Result<TrackResult> {
    let num_frames = observations.last().map_or(0, |o| o.frame + 1);
    run_frames(observations, config, num_frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::ang_diff;

    fn w(x: f64) -> WrappedAngle {
        WrappedAngle::new(x).unwrap()
    }

    fn obs(frame: usize, bin: usize, az: f64, masks: &[f64]) -> Observation {
        Observation {
            frame,
            bin,
            az: w(az),
            masks: MaskVector::new(masks.to_vec()).unwrap(),
        }
    }

    fn config(q: usize, mode: AssociationMode) -> TrackerConfig {
        TrackerConfig::new(q, MotionModel::new(0.016, 1e-3, 1e-3).unwrap(), mode, 0.2)
    }

    #[test]
    fn initialize_two_clusters() {
        let stream: Vec<_> = (0..10)
            .flat_map(|f| {
                vec![
                    obs(f, 0, -1.0 + 0.001 * f as f64, &[0.5, 0.5]),
                    obs(f, 1, 2.0 - 0.001 * f as f64, &[0.5, 0.5]),
                ]
            })
            .collect();
        let states = initialize(&stream, &config(2, AssociationMode::Joint)).unwrap();
        assert!((states[0].mean[0] + 1.0).abs() < 0.01);
        assert!((states[1].mean[0] - 2.0).abs() < 0.01);
        for s in &states {
            assert_eq!(s.mean[1], 0.0);
            assert_eq!(s.cov, Matrix2::identity() * 1e-4);
        }
    }

    #[test]
    fn initialize_single_speaker_and_failures() {
        let stream: Vec<_> = (0..5).map(|f| obs(f, 0, 0.3, &[1.0])).collect();
        let states = initialize(&stream, &config(1, AssociationMode::Joint)).unwrap();
        assert_eq!(states[0].mean[0], 0.3);

        let late: Vec<_> = (100..105).map(|f| obs(f, 0, 0.3, &[1.0])).collect();
        let err = initialize(&late, &config(1, AssociationMode::Joint)).unwrap_err();
        assert!(matches!(err, Error::Initialization(ref m) if m.contains("0.2 s")));

        let two = config(2, AssociationMode::Joint);
        let stream: Vec<_> = (0..5).map(|f| obs(f, 0, 0.3, &[0.5, 0.5])).collect();
        assert!(matches!(initialize(&stream, &two), Err(Error::Initialization(_))));
    }

    fn two_states(a: f64, b: f64) -> Vec<SpeakerState> {
        vec![
            SpeakerState::new(w(a), 0.0, Matrix2::identity() * 1e-4).unwrap(),
            SpeakerState::new(w(b), 0.0, Matrix2::identity() * 1e-4).unwrap(),
        ]
    }

    #[test]
    fn empty_frame_is_prediction_only() {
        let cfg = config(2, AssociationMode::Joint);
        let states = two_states(-1.0, 1.0);
        let (next, diag) = step_frame(&states, 3, &[], &cfg).unwrap();
        for (n, s) in next.iter().zip(&states) {
            assert_eq!(*n, wkf::predict(s, &cfg.motion));
        }
        assert!(diag.updates.is_empty());
    }

    #[test]
    fn observation_on_one_speaker_leaves_the_other() {
        let cfg = config(2, AssociationMode::Joint);
        let states = two_states(-1.0, 1.0);
        let predicted = wkf::predict(&states[0], &cfg.motion);
        let o = obs(0, 0, predicted.mean[0], &[0.5, 0.5]);
        let (next, diag) = step_frame(&states, 0, &[o], &cfg).unwrap();
        let beta = &diag.updates[0].beta;
        assert!((beta[0] - 1.0).abs() < 1e-6 && beta[1] < 1e-6);
        let pred_other = wkf::predict(&states[1], &cfg.motion);
        assert!((next[1].mean[0] - pred_other.mean[0]).abs() < 1e-6);
    }

    fn equidistant_beta(masks: &[f64]) -> (Vec<SpeakerState>, Vec<f64>) {
        let cfg = config(2, AssociationMode::Joint);
        let states = two_states(-0.1, 0.1);
        let (next, diag) = step_frame(&states, 0, &[obs(0, 0, 0.0, masks)], &cfg).unwrap();
        let beta = diag.updates[0].beta.clone();
        let p0 = wkf::predict(&states[0], &cfg.motion);
        let inn = wkf::innovation(&p0, w(0.0), &cfg.motion);
        let gain = p0.cov[(0, 0)] / inn.s;
        let expected = p0.mean[0] + gain * beta[0] * inn.g;
        assert!((next[0].mean[0] - expected).abs() < 1e-15);
        (next, beta)
    }

    #[test]
    fn equidistant_observation_follows_masks() {
        // spatial terms cancel: beta = [0.8*0.8, 0.2*0.2] / 0.68
        let (_, beta) = equidistant_beta(&[0.8, 0.2]);
        assert!((beta[0] - 0.941176).abs() < 1e-6 && (beta[1] - 0.058824).abs() < 1e-6);
        // [0.9*0.9, 0.1*0.1] / 0.82
        let (_, beta) = equidistant_beta(&[0.9, 0.1]);
        assert!((beta[0] - 0.81 / 0.82).abs() < 1e-12, "{beta:?}");
    }

    #[test]
    fn mixed_frames_rejected() {
        let cfg = config(2, AssociationMode::Joint);
        let res = step_frame(&two_states(0.0, 1.0), 0, &[obs(1, 0, 0.0, &[0.5, 0.5])], &cfg);
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gate_skips_far_observations() {
        let mut cfg = config(2, AssociationMode::Joint);
        cfg.gate_radius = Some(3.0);
        let (_, diag) = step_frame(&two_states(-1.0, 1.0), 0, &[obs(0, 0, 3.0, &[0.5, 0.5])], &cfg).unwrap();
        assert_eq!(diag.gated, 1);
        assert!(diag.updates.is_empty());
    }

    #[test]
    fn unsorted_and_duplicate_streams_rejected() {
        let cfg = config(1, AssociationMode::Joint);
        let dup = vec![obs(0, 1, 0.1, &[1.0]), obs(0, 1, 0.2, &[1.0])];
        assert!(run(&dup, &cfg).is_err());
        let unsorted = vec![obs(1, 0, 0.1, &[1.0]), obs(0, 1, 0.2, &[1.0])];
        assert!(run(&unsorted, &cfg).is_err());
    }

    #[test]
    fn covers_every_frame_and_predicts_through_gaps() {
        let cfg = config(1, AssociationMode::Joint);
        let stream = vec![obs(0, 0, 0.5, &[1.0]), obs(1, 0, 0.5, &[1.0])];
        let res = run_frames(&stream, &cfg, 40).unwrap();
        assert_eq!(res.frames.len(), 40);
        for (i, f) in res.frames.iter().enumerate() {
            assert_eq!(f.frame, i);
            assert!(f.points[0].variance > 0.0);
        }
        // no velocity information: stays put, variance grows
        assert!(ang_diff(res.frames[39].points[0].az, w(0.5)).abs() < 1e-12);
        assert!(res.frames[39].points[0].variance > res.frames[2].points[0].variance);
    }
}
