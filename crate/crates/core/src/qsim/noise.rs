//! Local Pauli noise on the Haar circuit.
//!
//! By default each qubit passes through one Pauli channel after the whole gate
//! sequence: with probability `p` a Pauli drawn uniformly from `{X, Y, Z}` is
//! applied. Every channel draws its uniform and its Pauli index whether or not
//! the error fires, so runs at different `p` with the same seed share random
//! numbers and the set of fired errors grows with `p`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::{haar_circuit, Gate, GateKind};
use super::{encode_for_circuit, max_abs_error, readout, StateVector};
use crate::{Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn kind(self) -> GateKind {
        match self {
            Pauli::X => GateKind::X,
            Pauli::Y => GateKind::Y,
            Pauli::Z => GateKind::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliChoice {
    #[default]
    Uniform,
    Fixed(Pauli),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-qubit error probability.
    pub p: f64,
    pub choice: PauliChoice,
    /// Also apply the channel to the qubits of every gate right after it.
    pub per_gate: bool,
}

impl NoiseConfig {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            choice: PauliChoice::Uniform,
            per_gate: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Parameter(format!(
                "error probability must be in [0, 1], got {}",
                self.p
            )));
        }
        Ok(())
    }
}

fn channel<R: Rng>(state: &mut StateVector, qubit: usize, config: &NoiseConfig, rng: &mut R) -> Result<()> {
    let u: f64 = rng.random();
    let drawn = Pauli::ALL[rng.random_range(0..3)];
    if u < config.p {
        let pauli = match config.choice {
            PauliChoice::Uniform => drawn,
            PauliChoice::Fixed(p) => p,
        };
        state.apply(&Gate::new(pauli.kind(), vec![qubit]))?;
    }
    Ok(())
}

/// Runs the noisy circuit and reads the state out exactly. The unobservable
/// global phase of the noisy state is fixed by aligning it with the noiseless
/// output (falling back to the largest amplitude when the two are orthogonal).
fn noisy_coefficients<R: Rng>(patch: &Matrix, config: &NoiseConfig, rng: &mut R) -> Result<Matrix> {
    config.validate()?;
    let (input, norm) = encode_for_circuit(patch)?;
    let circuit = haar_circuit();

    let mut ideal = input.clone();
    ideal.apply_seq(&circuit)?;

    let mut state = input;
    for g in &circuit.gates {
        state.apply(g)?;
        if config.per_gate {
            for &q in &g.qubits {
                channel(&mut state, q, config, rng)?;
            }
        }
    }
    for q in 0..state.n_qubits() {
        channel(&mut state, q, config, rng)?;
    }

    let overlap: Complex64 = ideal
        .amplitudes()
        .iter()
        .zip(state.amplitudes())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let phase = if overlap.norm() > 1e-12 {
        overlap / overlap.norm()
    } else {
        let big = state
            .amplitudes()
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        big / big.norm()
    };
    let real: Vec<f64> = state
        .amplitudes()
        .iter()
        .map(|a| (phase.conj() * a).re)
        .collect();
    Ok(readout(&real)?.scale(norm))
}

/// One noisy run of the Haar circuit, deterministic in `seed`. Returns the
/// coefficients in the same layout and units as the exact pipeline.
pub fn pauli_noise_trial(patch: &Matrix, config: &NoiseConfig, seed: u64) -> Result<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    noisy_coefficients(patch, config, &mut rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepPoint {
    pub p: f64,
    pub trials: usize,
    pub mean_eps_max: f64,
    pub max_eps_max: f64,
}

/// Monte-Carlo estimate of `ε_max` for each probability in `ps`. Trial `t` uses
/// the ChaCha8 stream `t` of `seed`, identical across probabilities.
pub fn noise_sweep(
    patch: &Matrix,
    ps: &[f64],
    trials: usize,
    seed: u64,
    choice: PauliChoice,
    per_gate: bool,
) -> Result<Vec<NoiseSweepPoint>> {
    if trials == 0 {
        return Err(Error::Parameter("trial count must be positive".into()));
    }
    let ideal = super::run_2d_haar_quantum(patch, &super::RunMode::Exact)?;
    ps.iter()
        .map(|&p| {
            let config = NoiseConfig { p, choice, per_gate };
            config.validate()?;
            let mut sum = 0.0;
            let mut max = 0.0f64;
            for t in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let noisy = noisy_coefficients(patch, &config, &mut rng)?;
                let eps = max_abs_error(&ideal, &noisy)?;
                sum += eps;
                max = max.max(eps);
            }
            Ok(NoiseSweepPoint {
                p,
                trials,
                mean_eps_max: sum / trials as f64,
                max_eps_max: max,
            })
        })
        .collect()
}
