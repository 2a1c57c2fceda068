//! Wrapped-angle arithmetic and clustering on the circle.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Azimuth in radians, always in the half-open range `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct WrappedAngle(f64);

impl WrappedAngle {
    pub const ZERO: WrappedAngle = WrappedAngle(0.0);

    /// Canonicalises `raw` into `[-π, π)`. Fails on NaN or infinity.
    pub fn new(raw: f64) -> Result<Self> {
        if !raw.is_finite() {
            return Err(Error::invalid(format!("angle must be finite, got {raw}")));
        }
        Ok(WrappedAngle(wrap_finite(raw)))
    }

    /// Accepts a value that is already canonical; rejects anything else.
    pub fn from_canonical(value: f64) -> Result<Self> {
        if value.is_finite() && (-PI..PI).contains(&value) {
            Ok(WrappedAngle(value))
        } else {
            Err(Error::invalid(format!("angle {value} outside [-pi, pi)")))
        }
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// `self + delta`, wrapped.
    pub fn rotate(self, delta: f64) -> Result<Self> {
        Self::new(self.0 + delta)
    }
}

impl fmt::Display for WrappedAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

impl<'de> Deserialize<'de> for WrappedAngle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = f64::deserialize(d)?;
        WrappedAngle::new(raw).map_err(serde::de::Error::custom)
    }
}

// Values already in range are returned untouched so that wrapping is
// idempotent bit-for-bit.
#[inline]
pub(crate) fn wrap_finite(raw: f64) -> f64 {
    if (-PI..PI).contains(&raw) {
        return raw;
    }
    let mut r = (raw + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Wraps a finite raw angle. See [`WrappedAngle::new`].
pub fn wrap(raw: f64) -> Result<WrappedAngle> {
    WrappedAngle::new(raw)
}

/// Shortest signed circular difference `a - b`, in `[-π, π)`.
#[inline]
pub fn ang_diff(a: WrappedAngle, b: WrappedAngle) -> f64 {
    wrap_finite(a.0 - b.0)
}

/// Weighted circular mean (direction of the weighted resultant vector).
pub fn circular_mean(angles: &[WrappedAngle], weights: Option<&[f64]>) -> Result<WrappedAngle> {
    if angles.is_empty() {
        return Err(Error::invalid("circular mean of an empty sequence"));
    }
    if let Some(w) = weights {
        if w.len() != angles.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} angles",
                w.len(),
                angles.len()
            )));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..angles.len()).map(weight).sum();
    if total <= 0.0 {
        return Err(Error::invalid("all weights are zero"));
    }
    let (mut s, mut c) = (0.0, 0.0);
    for (i, a) in angles.iter().enumerate() {
        let w = weight(i);
        s += w * a.0.sin();
        c += w * a.0.cos();
    }
    if s.hypot(c) <= 1e-12 * total {
        return Err(Error::DegenerateMean);
    }
    WrappedAngle::new(s.atan2(c))
}

fn nearest(point: WrappedAngle, centers: &[WrappedAngle]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        let d = ang_diff(point, c).abs();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Lloyd-style k-means on the circle with k-means++ seeding.
///
/// Returns `k` centers in seeding order. Deterministic for a given `seed`.
pub fn circular_kmeans(
    points: &[WrappedAngle],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Vec<WrappedAngle>> {
    if points.is_empty() {
        return Err(Error::invalid("k-means on an empty point set"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut distinct: Vec<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if k > distinct.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} distinct points",
            distinct.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points
        .iter()
        .map(|&p| ang_diff(p, centers[0]).powi(2))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        // k <= distinct points guarantees some point with positive distance
        let c = points[pick.expect("positive seeding mass")];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(ang_diff(p, c).powi(2));
        }
    }

    let mut labels: Vec<usize> = points.iter().map(|&p| nearest(p, &centers)).collect();
    for _ in 0..max_iters {
        for (j, center) in centers.iter_mut().enumerate() {
            let members: Vec<WrappedAngle> = points
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == j)
                .map(|(&p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            match circular_mean(&members, None) {
                Ok(m) => *center = m,
                Err(Error::DegenerateMean) => {}
                Err(e) => return Err(e),
            }
        }
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(centers)
}
