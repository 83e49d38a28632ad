//! Haar wavelet transforms and the pieces built on them.
//!
//! * [`haar`]: fast multilevel 1D/2D Haar transforms (orthonormal and integer
//!   add/sub variants) plus dense Haar and Walsh-Hadamard matrices.
//! * [`layer`]: the Haar-domain perceptron layer (scaling, 1x1 channel mixing,
//!   soft-thresholding, inverse transform) with an analytic backward pass and a
//!   toy training loop.
//! * [`qsim`]: a small statevector simulator used to check the 4-qubit gate
//!   decomposition of the 4x4 2D Haar transform, with shot sampling and Pauli
//!   noise.
//! * [`costs`]: MAC and parameter counts for convolutions and perceptron layers,
//!   including the ResNet-20 parameter counter.

pub mod cli;
pub mod costs;
mod error;
pub mod haar;
pub mod io;
pub mod layer;
pub mod matrix;
pub mod qsim;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use tensor::Tensor4;
