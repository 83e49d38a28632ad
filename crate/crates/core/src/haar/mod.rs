//! Multilevel Haar wavelet transforms.
//!
//! The fast transforms work in place on a buffer using only pairwise sums and
//! differences. Coefficients use the multilevel packed layout: the coarsest
//! approximation block first, then detail blocks from coarsest to finest. For
//! `n = 4` at full depth this is `[a'_0, d'_0, d_0, d_1]`, i.e. the row order of
//! [`haar_matrix`].
//!
//! Two scalings are supported:
//!
//! * [`Variant::Orthonormal`] scales every sum and difference by `1/sqrt(2)`.
//!   A full-depth transform equals `haar_matrix(log2 n) · x`, and the inverse
//!   is the transpose.
//! * [`Variant::IntegerAddSub`] keeps raw sums and differences. The inverse
//!   halves once per level, which is exact for integer input because
//!   `a + d = 2 x_{2k}` and `a - d = 2 x_{2k+1}`.

mod matrices;

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

pub use matrices::{hadamard_matrix, haar_matrix, integer_haar_inverse, integer_haar_rows};

use crate::{Error, Matrix, Result};

/// Largest level count accepted by the constructors (`n <= 2^20`).
pub const MAX_LEVELS: u32 = 20;

/// Dense `n x n` transform operator.
pub type TransformMatrix = Matrix;

pub(crate) fn check_level_count(k: u32) -> Result<()> {
    if k == 0 || k > MAX_LEVELS {
        return Err(Error::Size(format!(
            "level count must be in 1..={MAX_LEVELS}, got {k}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Orthonormal,
    IntegerAddSub,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ordering {
    #[default]
    MultilevelPacked,
}

/// Precomputed description of a transform of length `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarPlan {
    n: usize,
    levels: u32,
    variant: Variant,
    ordering: Ordering,
}

impl HaarPlan {
    pub fn new(n: usize, levels: u32, variant: Variant) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Size(format!(
                "transform length must be a power of two >= 2, got {n}"
            )));
        }
        let max = n.trailing_zeros();
        if max > MAX_LEVELS {
            return Err(Error::Size(format!(
                "transform length {n} exceeds 2^{MAX_LEVELS}"
            )));
        }
        if levels == 0 || levels > max {
            return Err(Error::Size(format!(
                "levels must be in 1..={max} for n = {n}, got {levels}"
            )));
        }
        Ok(Self {
            n,
            levels,
            variant,
            ordering: Ordering::MultilevelPacked,
        })
    }

    /// Orthonormal plan at full depth (`levels = log2 n`).
    pub fn full(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Size(format!(
                "transform length must be a power of two >= 2, got {n}"
            )));
        }
        Self::new(n, n.trailing_zeros(), Variant::Orthonormal)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn is_full_depth(&self) -> bool {
        self.levels == self.n.trailing_zeros()
    }

    fn forward_gain(&self) -> f64 {
        match self.variant {
            Variant::Orthonormal => FRAC_1_SQRT_2,
            Variant::IntegerAddSub => 1.0,
        }
    }

    fn inverse_gain(&self) -> f64 {
        match self.variant {
            Variant::Orthonormal => FRAC_1_SQRT_2,
            Variant::IntegerAddSub => 0.5,
        }
    }

    /// Forward transform of `buf` in place; `scratch.len() >= n`.
    pub(crate) fn forward_in_place(&self, buf: &mut [f64], scratch: &mut [f64]) {
        let g = self.forward_gain();
        let mut len = self.n;
        for _ in 0..self.levels {
            let half = len / 2;
            for k in 0..half {
                let (x0, x1) = (buf[2 * k], buf[2 * k + 1]);
                scratch[k] = (x0 + x1) * g;
                scratch[half + k] = (x0 - x1) * g;
            }
            buf[..len].copy_from_slice(&scratch[..len]);
            len = half;
        }
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [f64], scratch: &mut [f64]) {
        let g = self.inverse_gain();
        let mut len = self.n >> (self.levels - 1);
        for _ in 0..self.levels {
            let half = len / 2;
            for k in 0..half {
                let (a, d) = (buf[k], buf[half + k]);
                scratch[2 * k] = (a + d) * g;
                scratch[2 * k + 1] = (a - d) * g;
            }
            buf[..len].copy_from_slice(&scratch[..len]);
            len *= 2;
        }
    }
}

fn check_len(len: usize, plan: &HaarPlan) -> Result<()> {
    if len != plan.n {
        return Err(Error::Shape(format!(
            "expected length {}, got {len}",
            plan.n
        )));
    }
    Ok(())
}

/// Forward multilevel 1D transform.
pub fn dwt1d(x: &[f64], plan: &HaarPlan) -> Result<Vec<f64>> {
    check_len(x.len(), plan)?;
    let mut out = x.to_vec();
    let mut scratch = vec![0.0; plan.n];
    plan.forward_in_place(&mut out, &mut scratch);
    Ok(out)
}

/// Inverse of [`dwt1d`].
pub fn idwt1d(coeffs: &[f64], plan: &HaarPlan) -> Result<Vec<f64>> {
    check_len(coeffs.len(), plan)?;
    let mut out = coeffs.to_vec();
    let mut scratch = vec![0.0; plan.n];
    plan.inverse_in_place(&mut out, &mut scratch);
    Ok(out)
}

fn require_integer(plan: &HaarPlan) -> Result<()> {
    if plan.variant != Variant::IntegerAddSub {
        return Err(Error::Parameter(
            "integer transforms need an IntegerAddSub plan".into(),
        ));
    }
    Ok(())
}

/// Integer add/sub transform on `i64` samples. Values grow by at most a factor
/// of `n`, so inputs must stay below `i64::MAX / n` in magnitude.
pub fn dwt1d_int(x: &[i64], plan: &HaarPlan) -> Result<Vec<i64>> {
    require_integer(plan)?;
    check_len(x.len(), plan)?;
    let mut buf = x.to_vec();
    let mut scratch = vec![0i64; plan.n];
    let mut len = plan.n;
    for _ in 0..plan.levels {
        let half = len / 2;
        for k in 0..half {
            scratch[k] = buf[2 * k] + buf[2 * k + 1];
            scratch[half + k] = buf[2 * k] - buf[2 * k + 1];
        }
        buf[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
    Ok(buf)
}

/// Exact inverse of [`dwt1d_int`].
pub fn idwt1d_int(coeffs: &[i64], plan: &HaarPlan) -> Result<Vec<i64>> {
    require_integer(plan)?;
    check_len(coeffs.len(), plan)?;
    let mut buf = coeffs.to_vec();
    let mut scratch = vec![0i64; plan.n];
    let mut len = plan.n >> (plan.levels - 1);
    for _ in 0..plan.levels {
        let half = len / 2;
        for k in 0..half {
            let (a, d) = (buf[k], buf[half + k]);
            if (a + d) % 2 != 0 {
                return Err(Error::Parameter(
                    "coefficients are not the image of an integer signal".into(),
                ));
            }
            scratch[2 * k] = (a + d) / 2;
            scratch[2 * k + 1] = (a - d) / 2;
        }
        buf[..len].copy_from_slice(&scratch[..len]);
        len *= 2;
    }
    Ok(buf)
}

enum Direction {
    Forward,
    Inverse,
}

/// Applies `row_plan` along every row, then `col_plan` along every column.
fn separable(img: &Matrix, row_plan: &HaarPlan, col_plan: &HaarPlan, dir: Direction) -> Result<Matrix> {
    if img.cols() != row_plan.n || img.rows() != col_plan.n {
        return Err(Error::Shape(format!(
            "expected a {}x{} matrix, got {}x{}",
            col_plan.n,
            row_plan.n,
            img.rows(),
            img.cols()
        )));
    }
    let (rows, cols) = (img.rows(), img.cols());
    let mut out = img.clone();
    let mut scratch = vec![0.0; rows.max(cols)];
    let run = |plan: &HaarPlan, buf: &mut [f64], scratch: &mut [f64]| match dir {
        Direction::Forward => plan.forward_in_place(buf, scratch),
        Direction::Inverse => plan.inverse_in_place(buf, scratch),
    };
    {
        let data = out.as_mut_slice();
        for r in 0..rows {
            run(row_plan, &mut data[r * cols..(r + 1) * cols], &mut scratch);
        }
        let mut column = vec![0.0; rows];
        for c in 0..cols {
            for r in 0..rows {
                column[r] = data[r * cols + c];
            }
            run(col_plan, &mut column, &mut scratch);
            for r in 0..rows {
                data[r * cols + c] = column[r];
            }
        }
    }
    Ok(out)
}

fn check_square(img: &Matrix, plan: &HaarPlan) -> Result<()> {
    if !img.is_square() {
        return Err(Error::Shape(format!(
            "2D transform needs a square image, got {}x{}",
            img.rows(),
            img.cols()
        )));
    }
    check_len(img.rows(), plan)
}

/// Separable 2D transform of an `n x n` image: `H · X · Hᵀ` for full-depth
/// orthonormal plans, computed as row transforms followed by column transforms.
pub fn dwt2d(img: &Matrix, plan: &HaarPlan) -> Result<Matrix> {
    check_square(img, plan)?;
    separable(img, plan, plan, Direction::Forward)
}

/// Inverse of [`dwt2d`].
pub fn idwt2d(coeffs: &Matrix, plan: &HaarPlan) -> Result<Matrix> {
    check_square(coeffs, plan)?;
    separable(coeffs, plan, plan, Direction::Inverse)
}

/// Rectangular 2D transform: `row_plan` acts along each row (length = cols),
/// `col_plan` along each column (length = rows).
pub fn dwt2d_rect(img: &Matrix, row_plan: &HaarPlan, col_plan: &HaarPlan) -> Result<Matrix> {
    separable(img, row_plan, col_plan, Direction::Forward)
}

/// Inverse of [`dwt2d_rect`].
pub fn idwt2d_rect(coeffs: &Matrix, row_plan: &HaarPlan, col_plan: &HaarPlan) -> Result<Matrix> {
    separable(coeffs, row_plan, col_plan, Direction::Inverse)
}
