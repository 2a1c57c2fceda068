//! Association probabilities for one DOA estimate under the three modes.
//!
//!     cargo run --example association_modes

use azitrack::assoc::{association_probabilities, detection_probabilities, DEFAULT_MASK_FLOOR};
use azitrack::wkf::{innovation, predict};
use azitrack::{AssociationMode, MaskVector, MotionModel, SpeakerState, WrappedAngle};
use nalgebra::Matrix2;

fn main() -> azitrack::Result<()> {
    let model = MotionModel::new(0.016, 1e-3, 2f64.to_radians().powi(2))?;
    let speakers = [
        SpeakerState::new(WrappedAngle::from_degrees(-10.0)?, 0.0, Matrix2::identity() * 1e-4)?,
        SpeakerState::new(WrappedAngle::from_degrees(10.0)?, 0.0, Matrix2::identity() * 1e-4)?,
    ];
    let cases = [
        ("near speaker 0, mask agrees   ", -8.0, [0.9, 0.1]),
        ("near speaker 0, mask disagrees", -8.0, [0.1, 0.9]),
        ("midway, mask favours 1        ", 0.0, [0.2, 0.8]),
        ("midway, mask uninformative    ", 0.0, [0.5, 0.5]),
    ];
    println!("{:32} {:>16} {:>16} {:>16}", "observation", "spatial", "spectral", "joint");
    for (label, deg, masks) in cases {
        let z = WrappedAngle::from_degrees(deg)?;
        let masks = MaskVector::new(masks.to_vec())?;
        let likelihoods: Vec<f64> = speakers
            .iter()
            .map(|s| innovation(&predict(s, &model), z, &model).likelihood)
            .collect();
        let mut row = format!("{label:32}");
        for mode in AssociationMode::ALL {
            let detect = detection_probabilities(&masks, mode, DEFAULT_MASK_FLOOR);
            let beta = association_probabilities(&likelihoods, &detect, mode)?.beta;
            row.push_str(&format!("   [{:.3}, {:.3}]", beta[0], beta[1]));
        }
        println!("{row}");
    }
    Ok(())
}
