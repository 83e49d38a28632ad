//! Gates, gate sequences and the 4-qubit Haar circuit.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    I,
    Swap,
    /// Controlled Hadamard; qubits are `[control, target]`, active on `|1>`.
    Ch,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Swap | GateKind::Ch => 2,
            _ => 1,
        }
    }

    pub fn single_qubit_matrix(self) -> Option<[[Complex64; 2]; 2]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let s = FRAC_1_SQRT_2;
        Some(match self {
            GateKind::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            GateKind::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
            GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            GateKind::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
            GateKind::Swap | GateKind::Ch => return None,
        })
    }
}

/// One gate application. Serializes as `{"kind": "CH", "qubits": [1, 0]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self { kind, qubits }
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, vec![q])
    }

    pub fn x(q: usize) -> Self {
        Self::new(GateKind::X, vec![q])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![a, b])
    }

    pub fn ch(control: usize, target: usize) -> Self {
        Self::new(GateKind::Ch, vec![control, target])
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::Gate(format!(
                "{:?} acts on {} qubit(s), got {:?}",
                self.kind,
                self.kind.arity(),
                self.qubits
            )));
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::Gate(format!(
                "qubit index {q} out of range for {n_qubits} qubits"
            )));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::Gate(format!(
                "{:?} needs two distinct qubits, got {:?}",
                self.kind, self.qubits
            )));
        }
        Ok(())
    }

    /// 2x2 or 4x4 matrix on the gate's own qubits, first listed qubit most
    /// significant.
    fn local_matrix(&self) -> Vec<Vec<Complex64>> {
        if let Some(u) = self.kind.single_qubit_matrix() {
            return u.iter().map(|r| r.to_vec()).collect();
        }
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let mut m = vec![vec![zero; 4]; 4];
        match self.kind {
            GateKind::Swap => {
                m[0][0] = one;
                m[1][2] = one;
                m[2][1] = one;
                m[3][3] = one;
            }
            GateKind::Ch => {
                // |0><0| ⊗ I + |1><1| ⊗ H
                let h = GateKind::H.single_qubit_matrix().expect("H");
                m[0][0] = one;
                m[1][1] = one;
                for r in 0..2 {
                    for c in 0..2 {
                        m[2 + r][2 + c] = h[r][c];
                    }
                }
            }
            _ => unreachable!("single-qubit kinds handled above"),
        }
        m
    }
}

/// Ordered gate list, applied first to last.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSeq {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl GateSeq {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let seq = Self { n_qubits, gates };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(self.n_qubits))
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// The gate decomposition of the 4x4 2D Haar transform on qubits
/// `q0 q1 q2 q3`, written as an operator product
///
/// ```text
/// (I⊗X⊗I⊗X) (CH_10⊗CH_32) (I⊗X⊗I⊗X) (I⊗H⊗I⊗H) (S⊗S)
/// ```
///
/// and applied right to left: the SWAP layer touches the state first.
/// `CH_ab` has control `a` and target `b`.
pub fn haar_circuit() -> GateSeq {
    let gates = vec![
        Gate::swap(0, 1),
        Gate::swap(2, 3),
        Gate::h(1),
        Gate::h(3),
        Gate::x(1),
        Gate::x(3),
        Gate::ch(1, 0),
        Gate::ch(3, 2),
        Gate::x(1),
        Gate::x(3),
    ];
    GateSeq { n_qubits: 4, gates }
}

/// Basis relabeling between a row-major 4x4 patch and [`haar_circuit`].
///
/// The circuit's unitary is `Π (H_4 ⊗ H_4) Π`, where `Π` exchanges qubits
/// `q0 <-> q1` and `q2 <-> q3`; on a row-major index `4r + c` that is the 2-bit
/// reversal of both `r` and `c`. Loading pixel `k` at amplitude `RELABEL[k]` and
/// reading coefficient `k` from amplitude `RELABEL[k]` therefore yields
/// `vec(H_4 X H_4ᵀ)`. The map is an involution.
pub const HAAR_CIRCUIT_RELABEL: [usize; 16] = [0, 2, 1, 3, 8, 10, 9, 11, 4, 6, 5, 7, 12, 14, 13, 15];

/// Dense complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        ComplexMatrix { dim: n, data }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        ComplexMatrix { dim: n, data }
    }

    /// Real part, or a gate error if any imaginary part exceeds `tol`.
    pub fn to_real(&self, tol: f64) -> Result<Matrix> {
        if let Some(v) = self.data.iter().find(|v| v.im.abs() > tol) {
            return Err(Error::Gate(format!("matrix is not real: entry {v}")));
        }
        Matrix::from_vec(self.dim, self.dim, self.data.iter().map(|v| v.re).collect())
    }
}

/// `2^n x 2^n` matrix of `gate` on an `n`-qubit register: entry `(i, j)` is the
/// local matrix entry selected by the gate's qubit bits of `i` and `j` when the
/// remaining bits agree, zero otherwise.
pub fn lift(gate: &Gate, n_qubits: usize) -> Result<ComplexMatrix> {
    gate.validate(n_qubits)?;
    let dim = 1usize << n_qubits;
    let local = gate.local_matrix();
    let bits: Vec<usize> = gate.qubits.iter().map(|&q| 1 << (n_qubits - 1 - q)).collect();
    let mask: usize = bits.iter().sum();
    let sub = |i: usize| {
        bits.iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(i & b != 0))
    };
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            if i & !mask == j & !mask {
                data[i * dim + j] = local[sub(i)][sub(j)];
            }
        }
    }
    Ok(ComplexMatrix { dim, data })
}

/// Product of lifted gates in application order: `U = G_m ··· G_2 G_1`.
pub fn circuit_unitary_complex(seq: &GateSeq) -> Result<ComplexMatrix> {
    seq.validate()?;
    let mut u = ComplexMatrix::identity(1 << seq.n_qubits);
    for g in &seq.gates {
        u = lift(g, seq.n_qubits)?.matmul(&u);
    }
    Ok(u)
}

/// Real unitary of a gate sequence (errors if the product is not real).
pub fn circuit_unitary(seq: &GateSeq) -> Result<Matrix> {
    circuit_unitary_complex(seq)?.to_real(1e-14)
}
