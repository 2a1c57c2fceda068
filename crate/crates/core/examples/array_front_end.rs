//! Narrowband circular-array front end: simulate snapshots for two speakers,
//! estimate one DOA per bin, keep the most coherent bins, then track.
//!
//!     cargo run --release --example array_front_end

use azitrack::arraysim::FrontEnd;
use azitrack::circular::{ang_diff, circular_mean};
use azitrack::metrics::{evaluate, EvalOptions};
use azitrack::scenario::{ground_truth, preset, Interval, SpeakerPath, TrajectorySpec};
use azitrack::{tracker, AssociationMode, MotionModel, TrackerConfig, WrappedAngle};

fn main() -> azitrack::Result<()> {
    let d = 6.0;
    let spec = TrajectorySpec {
        duration: d,
        speakers: vec![
            SpeakerPath::through(&[(0.0, (-50f64).to_radians()), (d, (-20f64).to_radians())], vec![Interval {
                on: 0.0,
                off: d,
            }]),
            SpeakerPath::stationary(60f64.to_radians(), d, vec![Interval { on: 0.0, off: 4.0 }]),
        ],
    };
    // only the frame rate matters for the truth table
    let frames = preset("static_far")?.obs_model;
    let truth = ground_truth(&spec, &frames)?;

    let mut fe = FrontEnd::default_for(2, 15.0);
    fe.seed = 4;
    let obs = fe.observations(&truth)?;
    println!(
        "{} mics, r = {} m, {} frequencies, {} frames -> {} selected bins",
        fe.geometry.num_mics(),
        fe.geometry.radius,
        fe.frequencies.len(),
        truth.num_frames(),
        obs.len()
    );
    let early: Vec<WrappedAngle> = obs
        .iter()
        .filter(|o| o.frame < 30 && o.masks.values()[1] > 0.5)
        .map(|o| o.az)
        .collect();
    if let Ok(m) = circular_mean(&early, None) {
        println!(
            "speaker 1 bins in the first 30 frames: mean {:.2}° (truth 60°, error {:.2}°)",
            m.degrees(),
            ang_diff(m, WrappedAngle::from_degrees(60.0)?).to_degrees()
        );
    }

    let motion = MotionModel::new(1.0 / frames.frame_rate, 1e-2, 3f64.to_radians().powi(2))?;
    for mode in AssociationMode::ALL {
        let cfg = TrackerConfig::new(2, motion, mode, 0.5);
        let tracks = tracker::run_frames(&obs, &cfg, truth.num_frames())?;
        let r = evaluate(&tracks, &truth, EvalOptions::default())?;
        println!("  {:<8} RLMAE {:5.2}°  switches {}", mode.as_str(), r.rlmae_deg, r.identity_switches);
    }
    Ok(())
}
