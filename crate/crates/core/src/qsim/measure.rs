use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementMode {
    ExactStatevector,
    ShotMagnitudes,
}

/// Outcome of measuring a state in the computational basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementResult {
    pub mode: MeasurementMode,
    pub shots: u64,
    pub counts: Vec<u64>,
    /// `sqrt(count / shots)` per basis state (or `|amplitude|` in exact mode).
    pub magnitudes: Vec<f64>,
}

/// Draws `shots` computational-basis outcomes by inverse-CDF sampling on
/// uniform `f64`s from `rng`. Zero-probability outcomes are never returned.
pub fn sample_counts<R: Rng + ?Sized>(state: &StateVector, shots: u64, rng: &mut R) -> Vec<u64> {
    let probs = state.probabilities();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        counts[idx] += 1;
    }
    counts
}

pub fn measure<R: Rng + ?Sized>(state: &StateVector, shots: u64, rng: &mut R) -> Result<MeasurementResult> {
    if shots == 0 {
        return Err(Error::Parameter("shot count must be positive".into()));
    }
    let counts = sample_counts(state, shots, rng);
    let magnitudes = counts
        .iter()
        .map(|&c| (c as f64 / shots as f64).sqrt())
        .collect();
    Ok(MeasurementResult {
        mode: MeasurementMode::ShotMagnitudes,
        shots,
        counts,
        magnitudes,
    })
}

pub fn exact_magnitudes(state: &StateVector) -> MeasurementResult {
    MeasurementResult {
        mode: MeasurementMode::ExactStatevector,
        shots: 0,
        counts: vec![0; state.dim()],
        magnitudes: state.amplitudes().iter().map(|a| a.norm()).collect(),
    }
}
