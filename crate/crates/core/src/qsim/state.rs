use num_complex::Complex64;

use super::circuit::{Gate, GateKind, GateSeq};
use crate::{Error, Result};

/// Amplitudes of an `n`-qubit register in big-endian order: qubit 0 is the
/// most significant bit of the basis index, so `|q0 q1 ... q_{n-1}>` sits at
/// index `Σ q_j 2^(n-1-j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Tolerance on `‖ψ‖ = 1` when a state is built from raw amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-12;

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Encoding(format!(
                "amplitude count must be a power of two >= 2, got {len}"
            )));
        }
        let s = Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        };
        if (s.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Encoding(format!(
                "amplitudes have norm {}, expected 1",
                s.norm()
            )));
        }
        Ok(s)
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Moves the amplitude at index `k` to index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(Error::Shape(format!(
                "permutation of length {} for a state of dimension {}",
                perm.len(),
                self.dim()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        let mut seen = vec![false; self.dim()];
        for (k, &t) in perm.iter().enumerate() {
            if t >= self.dim() || seen[t] {
                return Err(Error::Shape("not a permutation".into()));
            }
            seen[t] = true;
            out[t] = self.amps[k];
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn apply_single(&mut self, qubit: usize, u: &[[Complex64; 2]; 2]) {
        let bit = self.bit(qubit);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[j] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let q = &gate.qubits;
        match gate.kind {
            GateKind::I => {}
            GateKind::Swap => {
                let (ba, bb) = (self.bit(q[0]), self.bit(q[1]));
                for i in 0..self.amps.len() {
                    if i & ba != 0 && i & bb == 0 {
                        self.amps.swap(i, i ^ ba ^ bb);
                    }
                }
            }
            GateKind::Ch => {
                let (bc, bt) = (self.bit(q[0]), self.bit(q[1]));
                let h = GateKind::H.single_qubit_matrix().expect("H");
                for i in 0..self.amps.len() {
                    if i & bc != 0 && i & bt == 0 {
                        let j = i | bt;
                        let (a0, a1) = (self.amps[i], self.amps[j]);
                        self.amps[i] = h[0][0] * a0 + h[0][1] * a1;
                        self.amps[j] = h[1][0] * a0 + h[1][1] * a1;
                    }
                }
            }
            kind => {
                let u = kind.single_qubit_matrix().expect("single-qubit kind");
                self.apply_single(q[0], &u);
            }
        }
        Ok(())
    }

    pub fn apply_seq(&mut self, seq: &GateSeq) -> Result<()> {
        if seq.n_qubits != self.n_qubits {
            return Err(Error::Gate(format!(
                "sequence is for {} qubits, state has {}",
                seq.n_qubits, self.n_qubits
            )));
        }
        for g in &seq.gates {
            self.apply(g)?;
        }
        Ok(())
    }
}

/// Returns a new state with `gate` applied.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut s = state.clone();
    s.apply(gate)?;
    Ok(s)
}
