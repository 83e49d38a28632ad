//! Statevector simulation of the 4-qubit 2D Haar circuit.
//!
//! A 4x4 patch is amplitude-encoded (row-major, unit norm) on four qubits,
//! relabeled into the circuit's basis with [`HAAR_CIRCUIT_RELABEL`], pushed
//! through [`haar_circuit`], and read back either exactly (signed
//! coefficients) or from sampled shots (magnitudes only, signs lost).

mod circuit;
mod measure;
mod noise;
mod state;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use circuit::{
    circuit_unitary, circuit_unitary_complex, haar_circuit, lift, ComplexMatrix, Gate, GateKind,
    GateSeq, HAAR_CIRCUIT_RELABEL,
};
pub use measure::{exact_magnitudes, measure, sample_counts, MeasurementMode, MeasurementResult};
pub use noise::{noise_sweep, pauli_noise_trial, NoiseConfig, NoiseSweepPoint, Pauli, PauliChoice};
pub use state::{apply_gate, StateVector};

use crate::{Error, Matrix, Result};

/// Shot count used for magnitude estimation unless told otherwise.
pub const DEFAULT_SHOTS: u64 = 20_000;

/// Normalizes a patch into a state. The amplitude order is the row-major
/// flattening; the patch must hold `2^k >= 2` finite values, not all zero.
/// Returns the state and the L2 norm needed to rescale read-out coefficients.
pub fn encode_patch(patch: &Matrix) -> Result<(StateVector, f64)> {
    let values = patch.as_slice();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Encoding("patch contains non-finite values".into()));
    }
    let norm = patch.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Encoding("cannot encode an all-zero patch".into()));
    }
    let scaled: Vec<f64> = values.iter().map(|v| v / norm).collect();
    Ok((StateVector::from_real(&scaled)?, norm))
}

fn check_patch(patch: &Matrix) -> Result<()> {
    if patch.rows() != 4 || patch.cols() != 4 {
        return Err(Error::Shape(format!(
            "the Haar circuit takes a 4x4 patch, got {}x{}",
            patch.rows(),
            patch.cols()
        )));
    }
    Ok(())
}

/// Encodes a 4x4 patch in the circuit's qubit labeling.
pub(crate) fn encode_for_circuit(patch: &Matrix) -> Result<(StateVector, f64)> {
    check_patch(patch)?;
    let (state, norm) = encode_patch(patch)?;
    Ok((state.permuted(&HAAR_CIRCUIT_RELABEL)?, norm))
}

/// Maps per-amplitude values in circuit order back to the 4x4 coefficient
/// layout of `dwt2d`.
pub(crate) fn readout(values: &[f64]) -> Result<Matrix> {
    if values.len() != 16 {
        return Err(Error::Shape(format!("expected 16 values, got {}", values.len())));
    }
    let data = HAAR_CIRCUIT_RELABEL.iter().map(|&i| values[i]).collect();
    Matrix::from_vec(4, 4, data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RunMode {
    /// Signed coefficients straight from the final amplitudes.
    Exact,
    /// `sqrt(count / shots) * norm`; nonnegative.
    Shots { shots: u64, seed: u64 },
}

impl RunMode {
    pub fn shots(seed: u64) -> Self {
        RunMode::Shots {
            shots: DEFAULT_SHOTS,
            seed,
        }
    }
}

/// Everything produced by one pass of the pipeline.
#[derive(Clone, Debug)]
pub struct QuantumRun {
    pub coefficients: Matrix,
    pub norm: f64,
    pub measurement: MeasurementResult,
    pub final_state: StateVector,
}

pub fn run_2d_haar_quantum_detailed(patch: &Matrix, mode: &RunMode) -> Result<QuantumRun> {
    let (mut state, norm) = encode_for_circuit(patch)?;
    state.apply_seq(&haar_circuit())?;
    let (coefficients, measurement) = match *mode {
        RunMode::Exact => {
            let amps: Vec<f64> = state.amplitudes().iter().map(|a| a.re).collect();
            (readout(&amps)?.scale(norm), exact_magnitudes(&state))
        }
        RunMode::Shots { shots, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = measure(&state, shots, &mut rng)?;
            (readout(&m.magnitudes)?.scale(norm), m)
        }
    };
    Ok(QuantumRun {
        coefficients,
        norm,
        measurement,
        final_state: state,
    })
}

/// 2D Haar coefficients of a 4x4 patch computed by the gate circuit.
pub fn run_2d_haar_quantum(patch: &Matrix, mode: &RunMode) -> Result<Matrix> {
    Ok(run_2d_haar_quantum_detailed(patch, mode)?.coefficients)
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Mean of squared entrywise differences.
pub fn mse(q: &Matrix, c: &Matrix) -> Result<f64> {
    check_same_shape(q, c)?;
    let n = q.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = q
        .as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n as f64)
}

/// `ε_max`: largest entrywise absolute difference.
pub fn max_abs_error(ideal: &Matrix, noisy: &Matrix) -> Result<f64> {
    check_same_shape(ideal, noisy)?;
    Ok(ideal.max_abs_diff(noisy))
}
