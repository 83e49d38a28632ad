//! Batched feature maps, `batch x channels x height x width`, row-major.

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    shape: [usize; 4],
    data: Vec<f64>,
}

/// Spatial size before [`Tensor4::pad_pow2`], used to crop the layer output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginalShape {
    pub height: usize,
    pub width: usize,
}

fn padded_side(v: usize) -> usize {
    v.next_power_of_two().max(2)
}

impl Tensor4 {
    pub fn zeros(shape: [usize; 4]) -> Result<Self> {
        Self::check_shape(shape)?;
        Ok(Self {
            shape,
            data: vec![0.0; shape.iter().product()],
        })
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        Self::check_shape(shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "{} values cannot fill a tensor of shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    fn check_shape(shape: [usize; 4]) -> Result<()> {
        if shape.contains(&0) {
            return Err(Error::Shape(format!(
                "all tensor dimensions must be >= 1, got {shape:?}"
            )));
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn height(&self) -> usize {
        self.shape[2]
    }

    pub fn width(&self) -> usize {
        self.shape[3]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, b: usize, c: usize) -> usize {
        (b * self.shape[1] + c) * self.shape[2] * self.shape[3]
    }

    pub fn plane(&self, b: usize, c: usize) -> &[f64] {
        let o = self.offset(b, c);
        &self.data[o..o + self.shape[2] * self.shape[3]]
    }

    pub fn plane_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let o = self.offset(b, c);
        let len = self.shape[2] * self.shape[3];
        &mut self.data[o..o + len]
    }

    pub fn plane_matrix(&self, b: usize, c: usize) -> Matrix {
        Matrix::from_vec(self.shape[2], self.shape[3], self.plane(b, c).to_vec())
            .expect("plane shape")
    }

    pub fn get(&self, b: usize, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.offset(b, c) + h * self.shape[3] + w]
    }

    pub fn set(&mut self, b: usize, c: usize, h: usize, w: usize, v: f64) {
        let o = self.offset(b, c) + h * self.shape[3] + w;
        self.data[o] = v;
    }

    /// Zero-pads height and width up to powers of two (at least 2, the
    /// smallest transform length).
    pub fn pad_pow2(&self) -> (Tensor4, OriginalShape) {
        let orig = OriginalShape {
            height: self.shape[2],
            width: self.shape[3],
        };
        let (hp, wp) = (padded_side(orig.height), padded_side(orig.width));
        if (hp, wp) == (orig.height, orig.width) {
            return (self.clone(), orig);
        }
        let mut out = Tensor4::zeros([self.shape[0], self.shape[1], hp, wp]).expect("nonzero");
        for b in 0..self.shape[0] {
            for c in 0..self.shape[1] {
                let src = self.plane(b, c);
                let dst = out.plane_mut(b, c);
                for h in 0..orig.height {
                    dst[h * wp..h * wp + orig.width]
                        .copy_from_slice(&src[h * orig.width..(h + 1) * orig.width]);
                }
            }
        }
        (out, orig)
    }

    /// Keeps the top-left `orig` block of every plane.
    pub fn crop(&self, orig: OriginalShape) -> Result<Tensor4> {
        if orig.height > self.shape[2] || orig.width > self.shape[3] {
            return Err(Error::Shape(format!(
                "cannot crop {}x{} planes to {}x{}",
                self.shape[2], self.shape[3], orig.height, orig.width
            )));
        }
        if (orig.height, orig.width) == (self.shape[2], self.shape[3]) {
            return Ok(self.clone());
        }
        let mut out = Tensor4::zeros([self.shape[0], self.shape[1], orig.height, orig.width])?;
        let w = self.shape[3];
        for b in 0..self.shape[0] {
            for c in 0..self.shape[1] {
                let src = self.plane(b, c);
                let dst = out.plane_mut(b, c);
                for h in 0..orig.height {
                    dst[h * orig.width..(h + 1) * orig.width]
                        .copy_from_slice(&src[h * w..h * w + orig.width]);
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
