use std::f64::consts::PI;

use azitrack::circular::ang_diff;
use azitrack::experiment::compare;
use azitrack::metrics::EvalOptions;
use azitrack::scenario::{generate, preset, Interval, ObservationModel, SpeakerPath, TrajectorySpec};
use azitrack::tracker::{self, Observation, TrackerConfig};
use azitrack::wkf::{self, SpeakerState};
use azitrack::{AssociationMode, MaskVector, MotionModel, WrappedAngle};
use nalgebra::Matrix2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const FR: f64 = 62.5;

fn w(x: f64) -> WrappedAngle {
    WrappedAngle::new(x).unwrap()
}

fn always(d: f64) -> Vec<Interval> {
    vec![Interval { on: 0.0, off: d }]
}

fn model(seed: u64, bins: usize) -> ObservationModel {
    ObservationModel {
        frame_rate: FR,
        bins_per_frame: bins,
        doa_noise_sigma: 2f64.to_radians(),
        outlier_rate: 0.0,
        mask_fidelity: 0.9,
        mask_noise_sigma: 0.05,
        seed,
    }
}

fn motion(q: f64, r: f64) -> MotionModel {
    MotionModel::new(1.0 / FR, q, r).unwrap()
}

#[test]
fn identical_inputs_give_identical_results() {
    let p = preset("crossing").unwrap();
    let mut m = p.obs_model.clone();
    m.seed = 11;
    let (obs, truth) = generate(&p.trajectory, &m).unwrap();
    for mode in AssociationMode::ALL {
        let mut cfg = p.tracker.clone();
        cfg.mode = mode;
        let a = tracker::run_frames(&obs, &cfg, truth.num_frames()).unwrap();
        let b = tracker::run_frames(&obs, &cfg, truth.num_frames()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn every_frame_appears_once() {
    let d = 4.0;
    let spec = TrajectorySpec {
        duration: d,
        speakers: vec![
            SpeakerPath::stationary(-0.5, d, vec![Interval { on: 0.0, off: 1.0 }, Interval { on: 3.0, off: d }]),
            SpeakerPath::stationary(0.7, d, vec![Interval { on: 0.0, off: 1.0 }]),
        ],
    };
    let (obs, truth) = generate(&spec, &model(1, 3)).unwrap();
    let cfg = TrackerConfig::new(2, motion(1e-3, 4e-3), AssociationMode::Joint, 0.5);
    let r = tracker::run(&obs, &cfg).unwrap();
    let last = obs.last().unwrap().frame;
    assert_eq!(r.frames.len(), last + 1);
    assert!(last + 1 <= truth.num_frames());
    for (k, f) in r.frames.iter().enumerate() {
        assert_eq!(f.frame, k);
        assert_eq!(f.points.len(), 2);
        assert!(f.points.iter().all(|p| p.variance > 0.0));
    }
}

/// Single speaker, β = 1 throughout: the bank reduces to one Kalman filter.
#[test]
fn single_speaker_matches_plain_kalman_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let obs: Vec<Observation> = (0..500)
        .map(|frame| Observation {
            frame,
            bin: 0,
            az: w(1.0 + noise.sample(&mut rng)),
            masks: MaskVector::new(vec![1.0]).unwrap(),
        })
        .collect();
    let m = motion(1e-4, 0.05 * 0.05);
    let cfg = TrackerConfig::new(1, m, AssociationMode::Joint, 0.2);
    let r = tracker::run(&obs, &cfg).unwrap();

    let init = tracker::initialize(&obs, &cfg).unwrap()[0];
    let (mut x, mut v) = (init.mean[0], init.mean[1]);
    let mut p = [[1e-4, 0.0], [0.0, 1e-4]];
    let dt = m.dt;
    for (k, o) in obs.iter().enumerate() {
        x += dt * v;
        let (a, b, c) = (p[0][0], p[0][1], p[1][1]);
        p = [
            [a + 2.0 * dt * b + dt * dt * c + m.q_accel * dt.powi(3) / 3.0, b + dt * c + m.q_accel * dt * dt / 2.0],
            [b + dt * c + m.q_accel * dt * dt / 2.0, c + m.q_accel * dt],
        ];
        let s = p[0][0] + m.r_obs;
        let (k0, k1) = (p[0][0] / s, p[1][0] / s);
        let nu = o.az.radians() - x;
        x += k0 * nu;
        v += k1 * nu;
        p = [
            [(1.0 - k0) * p[0][0], (1.0 - k0) * p[0][1]],
            [p[1][0] - k1 * p[0][0], p[1][1] - k1 * p[0][1]],
        ];
        let got = r.frames[k].points[0];
        assert!((got.az.radians() - x).abs() < 1e-9, "frame {k}");
        assert!((got.variance - p[0][0]).abs() < 1e-12, "frame {k}");
    }
    let last = r.frames.last().unwrap().points[0];
    assert!((last.az.radians() - 1.0).abs() < 0.02);
    assert!(last.variance < m.r_obs);
}

#[test]
fn separated_static_speakers_in_spatial_mode() {
    let d = 6.0;
    let spec = TrajectorySpec {
        duration: d,
        speakers: vec![
            SpeakerPath::stationary(-1.2, d, always(d)),
            SpeakerPath::stationary(0.9, d, always(d)),
        ],
    };
    let (obs, truth) = generate(&spec, &model(8, 4)).unwrap();
    let cfg = TrackerConfig::new(2, motion(1e-3, 2f64.to_radians().powi(2)), AssociationMode::Spatial, 0.5);
    let r = tracker::run_frames(&obs, &cfg, truth.num_frames()).unwrap();
    let last = r.frames.last().unwrap();
    assert!(ang_diff(last.points[0].az, w(-1.2)).abs() < 0.05);
    assert!(ang_diff(last.points[1].az, w(0.9)).abs() < 0.05);
}

#[test]
fn silence_after_window_is_pure_prediction() {
    let obs: Vec<Observation> = (0..20)
        .map(|frame| Observation {
            frame,
            bin: 0,
            az: w(if frame % 2 == 0 { -0.4 } else { 0.6 }),
            masks: MaskVector::new(vec![0.5, 0.5]).unwrap(),
        })
        .collect();
    let m = motion(1e-3, 1e-2);
    let cfg = TrackerConfig::new(2, m, AssociationMode::Joint, 0.5);
    let init = tracker::initialize(&obs, &cfg).unwrap();
    let r = tracker::run_from(init.clone(), &[], &cfg, 50).unwrap();
    let mut states = init;
    for f in &r.frames {
        states = states.iter().map(|s| wkf::predict(s, &m)).collect();
        for (p, s) in f.points.iter().zip(&states) {
            assert_eq!(p.az, s.azimuth());
            assert_eq!(p.variance, s.azimuth_variance());
        }
        assert!(f.diagnostics.updates.is_empty());
    }
}

#[test]
fn static_far_all_modes_agree() {
    let p = preset("static_far").unwrap();
    let c = compare(&p, 0..100, EvalOptions::default()).unwrap();
    let medians: Vec<f64> = c.summary.iter().map(|m| m.median_rlmae_deg).collect();
    for m in &c.summary {
        assert_eq!(m.total_switches, 0, "{:?}", m.mode);
    }
    let spread = medians.iter().cloned().fold(f64::MIN, f64::max) - medians.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 2.0, "{medians:?}");
}

#[test]
fn crossing_joint_beats_spatial() {
    let p = preset("crossing").unwrap();
    let c = compare(&p, 0..100, EvalOptions::default()).unwrap();
    assert!(c.mode(AssociationMode::Joint).median_rlmae_deg < c.mode(AssociationMode::Spatial).median_rlmae_deg);
}

fn three_speaker_stream(seed: u64) -> (Vec<Observation>, usize) {
    let d = 5.0;
    let spec = TrajectorySpec {
        duration: d,
        speakers: vec![
            SpeakerPath::through(&[(0.0, -2.0), (d, -1.0)], always(d)),
            SpeakerPath::through(&[(0.0, 0.3), (d, -0.2)], always(d)),
            SpeakerPath::stationary(2.4, d, vec![Interval { on: 0.0, off: 2.0 }, Interval { on: 3.0, off: d }]),
        ],
    };
    let mut m = model(seed, 5);
    m.mask_fidelity = 0.7;
    m.mask_noise_sigma = 0.2;
    m.outlier_rate = 0.05;
    let (obs, truth) = generate(&spec, &m).unwrap();
    (obs, truth.num_frames())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Relabelling masks and initial states together relabels the output exactly.
    #[test]
    fn relabelling_permutes_tracks(seed in 0u64..1000, perm_idx in 0usize..6, mode_idx in 0usize..3) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let perm = perms[perm_idx];
        let (obs, frames) = three_speaker_stream(seed);
        let cfg = TrackerConfig::new(3, motion(1e-2, 3f64.to_radians().powi(2)), AssociationMode::ALL[mode_idx], 0.5);
        let init = tracker::initialize(&obs, &cfg).unwrap();
        let base = tracker::run_from(init.clone(), &obs, &cfg, frames).unwrap();

        let init_p: Vec<SpeakerState> = perm.iter().map(|&i| init[i]).collect();
        let obs_p: Vec<Observation> = obs
            .iter()
            .map(|o| Observation { masks: o.masks.permuted(&perm), ..o.clone() })
            .collect();
        let out = tracker::run_from(init_p, &obs_p, &cfg, frames).unwrap();
        for (a, b) in base.frames.iter().zip(&out.frames) {
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(b.points[k].az.radians().to_bits(), a.points[i].az.radians().to_bits());
                prop_assert_eq!(b.points[k].variance.to_bits(), a.points[i].variance.to_bits());
            }
            for (ua, ub) in a.diagnostics.updates.iter().zip(&b.diagnostics.updates) {
                for (k, &i) in perm.iter().enumerate() {
                    prop_assert_eq!(ub.beta[k].to_bits(), ua.beta[i].to_bits());
                }
            }
        }
    }

    /// A speaker moving at constant speed through ±π is followed without a
    /// 2π slip.
    #[test]
    fn wrap_crossing(start_deg in 150.0f64..175.0, speed in 5.0f64..20.0, ccw in any::<bool>(), seed in 0u64..100) {
        let d = 8.0;
        let sign = if ccw { 1.0 } else { -1.0 };
        let a0 = sign * start_deg.to_radians();
        let a1 = a0 + sign * (speed * d).to_radians();
        let spec = TrajectorySpec {
            duration: d,
            speakers: vec![SpeakerPath::through(&[(0.0, a0), (d, (a1 + PI).rem_euclid(2.0 * PI) - PI)], always(d))],
        };
        let mut m = model(seed, 4);
        m.mask_fidelity = 1.0;
        m.mask_noise_sigma = 0.0;
        let (obs, truth) = generate(&spec, &m).unwrap();
        let cfg = TrackerConfig::new(1, motion(1e-2, 2f64.to_radians().powi(2)), AssociationMode::Spatial, 0.3);
        let r = tracker::run_frames(&obs, &cfg, truth.num_frames()).unwrap();
        let mut prev: Option<f64> = None;
        for f in &r.frames {
            let e = ang_diff(f.points[0].az, truth.frames[f.frame][0].az);
            prop_assert!(e.abs() < 8f64.to_radians(), "frame {}: error {}", f.frame, e.to_degrees());
            if let Some(p) = prev {
                prop_assert!((e - p).abs() <= PI);
            }
            prev = Some(e);
        }
    }

    /// Frozen and sequential batches agree when a frame holds one observation.
    #[test]
    fn batch_modes_agree_on_single_bin_frames(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs: Vec<Observation> = (0..200)
            .map(|frame| {
                let m: f64 = rng.random();
                Observation {
                    frame,
                    bin: 0,
                    az: w(if rng.random::<bool>() { -0.6 } else { 0.5 } + rng.random_range(-0.05..0.05)),
                    masks: MaskVector::new(vec![m, 1.0 - m]).unwrap(),
                }
            })
            .collect();
        let mut cfg = TrackerConfig::new(2, motion(1e-3, 4e-3), AssociationMode::Joint, 0.5);
        let init = vec![
            SpeakerState::new(w(-0.6), 0.0, Matrix2::identity() * 1e-4).unwrap(),
            SpeakerState::new(w(0.5), 0.0, Matrix2::identity() * 1e-4).unwrap(),
        ];
        let a = tracker::run_from(init.clone(), &obs, &cfg, 200).unwrap();
        cfg.frame_batch = tracker::FrameBatch::Frozen;
        let b = tracker::run_from(init, &obs, &cfg, 200).unwrap();
        prop_assert_eq!(a, b);
    }
}
