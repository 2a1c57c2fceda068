//! Wrapped Kalman filter for one speaker's azimuth.
//!
//! State is `[azimuth, azimuthal velocity]` under a constant-velocity model
//! with white-noise acceleration. The scalar azimuth observation is handled
//! on the circle by evaluating the innovation against the three nearest
//! 2π-shifted copies of the observation.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

use crate::circular::{ang_diff, wrap_finite, WrappedAngle};
use crate::{Error, Result};

const EIGEN_FLOOR: f64 = 1e-12;
const H: RowVector2<f64> = RowVector2::new(1.0, 0.0);

/// How the three wrapped innovation candidates are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrapMode {
    /// Likelihood-weighted average of the candidates, summed likelihood.
    #[default]
    Mixture,
    /// Most likely candidate only.
    Hard,
}

/// Frame hop and the constant process/observation noise levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    /// Seconds between frames.
    pub dt: f64,
    /// White-noise acceleration spectral density, rad²/s³.
    pub q_accel: f64,
    /// Observation noise variance, rad².
    pub r_obs: f64,
    #[serde(default)]
    pub wrap_mode: WrapMode,
}

impl MotionModel {
    pub fn new(dt: f64, q_accel: f64, r_obs: f64) -> Result<Self> {
        let m = MotionModel {
            dt,
            q_accel,
            r_obs,
            wrap_mode: WrapMode::Mixture,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.q_accel >= 0.0 && self.q_accel.is_finite()) {
            return Err(Error::invalid(format!(
                "q_accel must be non-negative, got {}",
                self.q_accel
            )));
        }
        if !(self.r_obs > 0.0 && self.r_obs.is_finite()) {
            return Err(Error::invalid(format!(
                "r_obs must be positive, got {}",
                self.r_obs
            )));
        }
        Ok(())
    }

    fn transition(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, self.dt, 0.0, 1.0)
    }

    fn process_noise(&self) -> Matrix2<f64> {
        let dt = self.dt;
        let q = self.q_accel;
        let off = q * dt * dt / 2.0;
        Matrix2::new(q * dt * dt * dt / 3.0, off, off, q * dt)
    }
}

/// Gaussian belief over `[azimuth, velocity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerState {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl SpeakerState {
    pub fn new(azimuth: WrappedAngle, velocity: f64, cov: Matrix2<f64>) -> Result<Self> {
        let s = SpeakerState {
            mean: Vector2::new(azimuth.radians(), velocity),
            cov,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks finiteness, symmetry and positive definiteness.
    pub fn validate(&self) -> Result<()> {
        if self.mean.iter().chain(self.cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite state".into()));
        }
        if !(-PI..PI).contains(&self.mean[0]) {
            return Err(Error::invalid(format!(
                "azimuth {} outside [-pi, pi)",
                self.mean[0]
            )));
        }
        let c = &self.cov;
        if (c[(0, 1)] - c[(1, 0)]).abs() > 1e-12 {
            return Err(Error::Numerical("covariance not symmetric".into()));
        }
        if !(c[(0, 0)] > 0.0 && c.determinant() > 0.0) {
            return Err(Error::Numerical("covariance not positive definite".into()));
        }
        Ok(())
    }

    pub fn azimuth(&self) -> WrappedAngle {
        // mean[0] is kept canonical by every constructor and transition
        WrappedAngle::from_canonical(self.mean[0]).expect("canonical azimuth")
    }

    pub fn velocity(&self) -> f64 {
        self.mean[1]
    }

    pub fn azimuth_variance(&self) -> f64 {
        self.cov[(0, 0)]
    }
}

/// Result of evaluating one observation against one filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation {
    /// Collapsed innovation, radians.
    pub g: f64,
    /// Innovation variance `H P Hᵀ + R`.
    pub s: f64,
    /// Wrapped-Gaussian likelihood of the observation.
    pub likelihood: f64,
}

impl Innovation {
    /// Squared Mahalanobis distance `g² / S`.
    pub fn mahalanobis2(&self) -> f64 {
        self.g * self.g / self.s
    }
}

fn normal_pdf(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (TAU * var).sqrt()
}

fn symmetrize_and_floor(cov: Matrix2<f64>) -> Result<Matrix2<f64>> {
    let sym = (cov + cov.transpose()) * 0.5;
    if sym.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite covariance".into()));
    }
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.min() >= EIGEN_FLOOR {
        return Ok(sym);
    }
    let floored = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let rebuilt = eig.eigenvectors * Matrix2::from_diagonal(&floored) * eig.eigenvectors.transpose();
    Ok((rebuilt + rebuilt.transpose()) * 0.5)
}

/// Constant-velocity prediction over one frame.
pub fn predict(state: &SpeakerState, model: &MotionModel) -> SpeakerState {
    let f = model.transition();
    let mut mean = f * state.mean;
    mean[0] = wrap_finite(mean[0]);
    let cov = f * state.cov * f.transpose() + model.process_noise();
    SpeakerState {
        mean,
        cov: (cov + cov.transpose()) * 0.5,
    }
}

/// Wrap-aware innovation of azimuth observation `z` against `state`.
pub fn innovation(state: &SpeakerState, z: WrappedAngle, model: &MotionModel) -> Innovation {
    let s = (H * state.cov * H.transpose())[(0, 0)] + model.r_obs;
    let base = z.radians() - state.mean[0];
    let candidates = [base - TAU, base, base + TAU];
    let weights = candidates.map(|nu| normal_pdf(nu, s));
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        // every branch underflowed; fall back to the shortest arc
        return Innovation {
            g: ang_diff(z, state.azimuth()),
            s,
            likelihood: 0.0,
        };
    }
    match model.wrap_mode {
        WrapMode::Mixture => {
            let g = candidates
                .iter()
                .zip(&weights)
                .map(|(nu, w)| nu * w)
                .sum::<f64>()
                / total;
            Innovation {
                g,
                s,
                likelihood: total,
            }
        }
        WrapMode::Hard => {
            let mut best = 1;
            for l in [0, 2] {
                if weights[l] > weights[best] {
                    best = l;
                }
            }
            Innovation {
                g: candidates[best],
                s,
                likelihood: weights[best],
            }
        }
    }
}

/// Correction with the innovation weighted by the association probability.
///
/// `mean += K·(β·g)` and `cov -= β·K·S·Kᵀ`, so β = 0 leaves the state
/// untouched and β = 1 is the ordinary Kalman update.
pub fn update(
    state: &SpeakerState,
    g: f64,
    s: f64,
    beta: f64,
    _model: &MotionModel,
) -> Result<SpeakerState> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta {beta} outside [0, 1]")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("innovation variance {s} not positive")));
    }
    if !g.is_finite() {
        return Err(Error::invalid("non-finite innovation"));
    }
    let gain: Vector2<f64> = state.cov * H.transpose() / s;
    let mut mean = state.mean + gain * (beta * g);
    mean[0] = wrap_finite(mean[0]);
    let cov = state.cov - gain * gain.transpose() * (beta * s);
    let out = SpeakerState {
        mean,
        cov: symmetrize_and_floor(cov)?,
    };
    if out.mean.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite mean after update".into()));
    }
    Ok(out)
}
