//! Association probabilities for a single DOA estimate under the
//! no-clutter JPDA model, with mask-driven detection probabilities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default clamp applied to mask values before use as detection probabilities.
pub const DEFAULT_MASK_FLOOR: f64 = 1e-3;

/// Which information channels drive association.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssociationMode {
    /// Detection probabilities fixed at 0.5; likelihood only.
    Spatial,
    /// Likelihood term replaced by 1; masks only.
    Spectral,
    /// Likelihood and mask-driven detection probabilities.
    Joint,
}

impl AssociationMode {
    pub const ALL: [AssociationMode; 3] = [
        AssociationMode::Spatial,
        AssociationMode::Spectral,
        AssociationMode::Joint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssociationMode::Spatial => "spatial",
            AssociationMode::Spectral => "spectral",
            AssociationMode::Joint => "joint",
        }
    }
}

impl fmt::Display for AssociationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssociationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spatial" => Ok(AssociationMode::Spatial),
            "spectral" => Ok(AssociationMode::Spectral),
            "joint" => Ok(AssociationMode::Joint),
            other => Err(Error::invalid(format!(
                "unknown association mode `{other}` (expected spatial, spectral or joint)"
            ))),
        }
    }
}

/// Per-speaker time-frequency mask values for one bin, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MaskVector(Vec<f64>);

impl MaskVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((q, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::invalid(format!("mask[{q}] = {v} outside [0, 1]")));
        }
        Ok(MaskVector(values))
    }

    /// All-`value` mask over `q` speakers.
    pub fn uniform(q: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; q])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reorders channels so that output channel `i` is input channel `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MaskVector {
        MaskVector(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl<'de> Deserialize<'de> for MaskVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        MaskVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// Detection probability per speaker: 0.5 in spatial mode, clamped mask otherwise.
pub fn detection_probabilities(masks: &MaskVector, mode: AssociationMode, floor: f64) -> Vec<f64> {
    match mode {
        AssociationMode::Spatial => vec![0.5; masks.len()],
        AssociationMode::Spectral | AssociationMode::Joint => masks
            .values()
            .iter()
            .map(|&m| m.clamp(floor, 1.0 - floor))
            .collect(),
    }
}

/// Normalised association probabilities for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub beta: Vec<f64>,
    /// Every unnormalised weight was zero; `beta` fell back to uniform.
    pub underflow: bool,
}

/// β_q ∝ L_q · P_q · Π_{q'≠q} (1 − P_q'), normalised to sum to one.
///
/// Likelihoods are rescaled by their maximum before use, which leaves β
/// unchanged mathematically and makes all-equal likelihoods exactly
/// equivalent to spectral mode.
pub fn association_probabilities(
    likelihoods: &[f64],
    detect: &[f64],
    mode: AssociationMode,
) -> Result<Association> {
    let q = likelihoods.len();
    if q == 0 {
        return Err(Error::invalid("association over zero speakers"));
    }
    if detect.len() != q {
        return Err(Error::invalid(format!(
            "{} detection probabilities for {q} likelihoods",
            detect.len()
        )));
    }
    if likelihoods.iter().any(|l| !(*l >= 0.0) || l.is_infinite()) {
        return Err(Error::invalid("likelihoods must be finite and non-negative"));
    }
    if detect.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::invalid("detection probabilities must lie in (0, 1)"));
    }

    let spatial_term: Vec<f64> = match mode {
        AssociationMode::Spectral => vec![1.0; q],
        AssociationMode::Spatial | AssociationMode::Joint => {
            let peak = likelihoods.iter().copied().fold(0.0, f64::max);
            if peak > 0.0 {
                likelihoods.iter().map(|l| l / peak).collect()
            } else {
                vec![0.0; q]
            }
        }
    };

    // products and the sum run over sorted operands, so relabelling the
    // speakers permutes β exactly
    let weights: Vec<f64> = (0..q)
        .map(|i| {
            let mut miss: Vec<f64> = (0..q).filter(|&j| j != i).map(|j| 1.0 - detect[j]).collect();
            miss.sort_by(f64::total_cmp);
            spatial_term[i] * detect[i] * miss.iter().product::<f64>()
        })
        .collect();
    let mut sorted = weights.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total > 0.0 && total.is_finite() {
        Ok(Association {
            beta: weights.iter().map(|u| u / total).collect(),
            underflow: false,
        })
    } else {
        Ok(Association {
            beta: vec![1.0 / q as f64; q],
            underflow: true,
        })
    }
}
