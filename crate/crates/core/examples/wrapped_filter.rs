//! One wrapped Kalman filter following a speaker that walks through ±π.
//!
//!     cargo run --example wrapped_filter

use azitrack::circular::ang_diff;
use azitrack::wkf::{innovation, predict, update, WrapMode};
use azitrack::{MotionModel, SpeakerState, WrappedAngle};
use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> azitrack::Result<()> {
    let dt = 0.016;
    let mut model = MotionModel::new(dt, 1e-2, 3f64.to_radians().powi(2))?;
    let speed = 20f64.to_radians();
    let start = WrappedAngle::from_degrees(160.0)?;
    let noise = Normal::new(0.0, 3f64.to_radians()).unwrap();

    for mode in [WrapMode::Mixture, WrapMode::Hard] {
        model.wrap_mode = mode;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = SpeakerState::new(start, 0.0, Matrix2::identity() * 1e-4)?;
        let mut worst: f64 = 0.0;
        println!("{mode:?} innovation");
        for k in 1..=250 {
            let truth = start.rotate(speed * k as f64 * dt)?;
            let z = truth.rotate(noise.sample(&mut rng))?;
            let pred = predict(&state, &model);
            let inn = innovation(&pred, z, &model);
            state = update(&pred, inn.g, inn.s, 1.0, &model)?;
            let err = ang_diff(state.azimuth(), truth).to_degrees();
            worst = worst.max(err.abs());
            if k % 50 == 0 {
                println!(
                    "  t = {:4.2} s  truth {:7.1}°  estimate {:7.1}°  velocity {:5.1}°/s  sd {:.2}°",
                    k as f64 * dt,
                    truth.degrees(),
                    state.azimuth().degrees(),
                    state.velocity().to_degrees(),
                    state.azimuth_variance().sqrt().to_degrees()
                );
            }
        }
        println!("  worst error {worst:.2}°");
    }

    // with a vague prior, an observation almost opposite the mean is
    // ambiguous about which way round it lies
    let vague = SpeakerState::new(WrappedAngle::from_degrees(0.0)?, 0.0, Matrix2::identity() * 2.0)?;
    let z = WrappedAngle::from_degrees(179.0)?;
    for mode in [WrapMode::Mixture, WrapMode::Hard] {
        model.wrap_mode = mode;
        let inn = innovation(&vague, z, &model);
        println!(
            "{mode:?}: innovation for z = 179° against mean 0° (S = {:.2} rad²): {:7.2}°",
            inn.s,
            inn.g.to_degrees()
        );
    }
    Ok(())
}
