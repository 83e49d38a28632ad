//! Haar-domain perceptron layer.
//!
//! For an input `x` of shape `B x C_in x H x W` the layer computes
//!
//! ```text
//! X   = DWT2(pad(x))                      per channel, full depth
//! Z_i = V_i (X ∘ A_i)                     scale, then 1x1 channel mix
//! Y   = Σ_i ST(Z_i, T_i)                  soft-threshold each path
//! y   = crop(IDWT2(Y)) [+ x]              optional residual
//! ```
//!
//! `A_i` and `T_i` are `H_pad x W_pad` maps shared across batch and channels.
//! Thresholds are stored raw and mapped through softplus so that `T_i >= 0`.

mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use train::{stripes_dataset, train_toy, EpochStats, LabeledPatch, ToyConfig, ToyReport};

use crate::haar::{dwt2d_rect, idwt2d_rect, HaarPlan};
use crate::tensor::OriginalShape;
use crate::{Error, Matrix, Result, Tensor4};

/// Effective threshold used by [`init_params`].
pub const INIT_THRESHOLD: f64 = 0.01;

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_inverse(y: f64) -> f64 {
    // ln(e^y - 1)
    y + (-(-y).exp_m1()).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// How raw threshold parameters map to effective thresholds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `T = softplus(T_raw)`.
    #[default]
    Softplus,
    /// `T = 0` regardless of `T_raw`; the layer is linear. Test mode.
    HardZero,
}

/// Learnable parameters of a `P`-path layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub c_in: usize,
    pub c_out: usize,
    /// Padded spatial size the maps are defined on.
    pub height: usize,
    pub width: usize,
    /// `A_i`, one `height x width` map per path.
    pub scale: Vec<Matrix>,
    /// `V_i`, one `c_out x c_in` matrix per path.
    pub mixing: Vec<Matrix>,
    /// Raw thresholds; see [`LayerParams::threshold`].
    pub threshold_raw: Vec<Matrix>,
    pub residual: bool,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
}

impl LayerParams {
    pub fn paths(&self) -> usize {
        self.scale.len()
    }

    /// Effective threshold map `T_i`.
    pub fn threshold(&self, path: usize) -> Matrix {
        let raw = &self.threshold_raw[path];
        match self.threshold_mode {
            ThresholdMode::Softplus => {
                let data = raw.as_slice().iter().map(|&v| softplus(v)).collect();
                Matrix::from_vec(raw.rows(), raw.cols(), data).expect("same shape")
            }
            ThresholdMode::HardZero => Matrix::zeros(raw.rows(), raw.cols()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.scale.len();
        if p == 0 || self.mixing.len() != p || self.threshold_raw.len() != p {
            return Err(Error::Parameter(format!(
                "path count mismatch: {} scale maps, {} mixing matrices, {} threshold maps",
                self.scale.len(),
                self.mixing.len(),
                self.threshold_raw.len()
            )));
        }
        if self.c_in == 0 || self.c_out == 0 {
            return Err(Error::Parameter("channel counts must be positive".into()));
        }
        if self.height < 2
            || self.width < 2
            || !self.height.is_power_of_two()
            || !self.width.is_power_of_two()
        {
            return Err(Error::Parameter(format!(
                "maps must be defined on power-of-two sizes, got {}x{}",
                self.height, self.width
            )));
        }
        let spatial = |m: &Matrix| m.rows() == self.height && m.cols() == self.width;
        if !self.scale.iter().all(spatial) || !self.threshold_raw.iter().all(spatial) {
            return Err(Error::Parameter(format!(
                "scale and threshold maps must all be {}x{}",
                self.height, self.width
            )));
        }
        if !self
            .mixing
            .iter()
            .all(|m| m.rows() == self.c_out && m.cols() == self.c_in)
        {
            return Err(Error::Parameter(format!(
                "mixing matrices must be {}x{}",
                self.c_out, self.c_in
            )));
        }
        if self.residual && self.c_in != self.c_out {
            return Err(Error::Parameter(format!(
                "residual connection needs c_in == c_out, got {} and {}",
                self.c_in, self.c_out
            )));
        }
        Ok(())
    }

    /// Total number of learnable scalars.
    pub fn parameter_count(&self) -> usize {
        self.paths() * (2 * self.height * self.width + self.c_in * self.c_out)
    }
}

/// Gradients with the same layout as [`LayerParams`], plus the input gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub scale: Vec<Matrix>,
    pub mixing: Vec<Matrix>,
    pub threshold_raw: Vec<Matrix>,
    pub input: Tensor4,
}

/// Intermediates kept by [`forward`] for [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    params: LayerParams,
    input_shape: [usize; 4],
    orig: OriginalShape,
    /// `DWT2(pad(x))`.
    coeffs: Tensor4,
    /// Pre-threshold path outputs `Z_i`.
    mixed: Vec<Tensor4>,
    thresholds: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output_shape(&self) -> [usize; 4] {
        [
            self.input_shape[0],
            self.params.c_out,
            self.orig.height,
            self.orig.width,
        ]
    }

    pub fn mixed(&self) -> &[Tensor4] {
        &self.mixed
    }

    pub fn thresholds(&self) -> &[Matrix] {
        &self.thresholds
    }
}

fn plans(height: usize, width: usize) -> Result<(HaarPlan, HaarPlan)> {
    Ok((HaarPlan::full(width)?, HaarPlan::full(height)?))
}

/// Full-depth 2D transform (or its inverse) of every `(b, c)` plane.
fn transform_planes(t: &Tensor4, inverse: bool) -> Result<Tensor4> {
    let [bs, cs, h, w] = t.shape();
    let (row_plan, col_plan) = plans(h, w)?;
    let mut out = Tensor4::zeros(t.shape())?;
    for b in 0..bs {
        for c in 0..cs {
            let m = t.plane_matrix(b, c);
            let y = if inverse {
                idwt2d_rect(&m, &row_plan, &col_plan)?
            } else {
                dwt2d_rect(&m, &row_plan, &col_plan)?
            };
            out.plane_mut(b, c).copy_from_slice(y.as_slice());
        }
    }
    Ok(out)
}

/// Elementwise `sign(z) * max(|z| - T, 0)` with `T` broadcast over batch and
/// channels.
pub fn soft_threshold(z: &Tensor4, threshold: &Matrix) -> Result<Tensor4> {
    let [bs, cs, h, w] = z.shape();
    if threshold.rows() != h || threshold.cols() != w {
        return Err(Error::Shape(format!(
            "threshold map is {}x{}, planes are {h}x{w}",
            threshold.rows(),
            threshold.cols()
        )));
    }
    if threshold.as_slice().iter().any(|&t| t < 0.0 || t.is_nan()) {
        return Err(Error::Parameter("thresholds must be nonnegative".into()));
    }
    let mut out = z.clone();
    for b in 0..bs {
        for c in 0..cs {
            for (v, &t) in out.plane_mut(b, c).iter_mut().zip(threshold.as_slice()) {
                *v = shrink(*v, t);
            }
        }
    }
    Ok(out)
}

#[inline]
fn shrink(z: f64, t: f64) -> f64 {
    let m = z.abs() - t;
    if m > 0.0 {
        m.copysign(z)
    } else {
        0.0
    }
}

/// Forward pass. Returns the output and the cache needed by [`backward`].
pub fn forward(x: &Tensor4, params: &LayerParams) -> Result<(Tensor4, ForwardCache)> {
    params.validate()?;
    let [bs, c_in, h, w] = x.shape();
    if c_in != params.c_in {
        return Err(Error::Shape(format!(
            "input has {c_in} channels, layer expects {}",
            params.c_in
        )));
    }
    let (padded, orig) = x.pad_pow2();
    let (hp, wp) = (padded.height(), padded.width());
    if (hp, wp) != (params.height, params.width) {
        return Err(Error::Shape(format!(
            "input pads to {hp}x{wp}, layer maps are {}x{}",
            params.height, params.width
        )));
    }
    let coeffs = transform_planes(&padded, false)?;
    let plane = hp * wp;
    let c_out = params.c_out;

    let mut summed = Tensor4::zeros([bs, c_out, hp, wp])?;
    let mut mixed = Vec::with_capacity(params.paths());
    let mut thresholds = Vec::with_capacity(params.paths());
    let mut scaled = vec![0.0; c_in * plane];
    for i in 0..params.paths() {
        let a = params.scale[i].as_slice();
        let v = &params.mixing[i];
        let t = params.threshold(i);
        let mut z = Tensor4::zeros([bs, c_out, hp, wp])?;
        for b in 0..bs {
            for c in 0..c_in {
                let src = coeffs.plane(b, c);
                for p in 0..plane {
                    scaled[c * plane + p] = src[p] * a[p];
                }
            }
            for o in 0..c_out {
                let dst = z.plane_mut(b, o);
                for c in 0..c_in {
                    let weight = v[(o, c)];
                    for p in 0..plane {
                        dst[p] += weight * scaled[c * plane + p];
                    }
                }
                let acc = summed.plane_mut(b, o);
                for p in 0..plane {
                    acc[p] += shrink(dst[p], t.as_slice()[p]);
                }
            }
        }
        mixed.push(z);
        thresholds.push(t);
    }

    let mut y = transform_planes(&summed, true)?.crop(orig)?;
    if params.residual {
        if y.shape() != x.shape() {
            return Err(Error::Shape(format!(
                "residual needs matching shapes, got {:?} and {:?}",
                y.shape(),
                x.shape()
            )));
        }
        for (o, i) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *o += i;
        }
    }
    let cache = ForwardCache {
        params: params.clone(),
        input_shape: [bs, c_in, h, w],
        orig,
        coeffs,
        mixed,
        thresholds,
    };
    Ok((y, cache))
}

/// Analytic gradients given `dL/dy`. The soft-threshold derivative is taken
/// as 1 where `|z| > T` and 0 elsewhere, including at `|z| = T`.
pub fn backward(grad_out: &Tensor4, cache: &ForwardCache) -> Result<LayerGrads> {
    let expected = cache.output_shape();
    if grad_out.shape() != expected {
        return Err(Error::Cache(format!(
            "gradient has shape {:?}, cached forward produced {expected:?}",
            grad_out.shape()
        )));
    }
    let params = &cache.params;
    let [bs, c_in, _, _] = cache.input_shape;
    let c_out = params.c_out;
    let (hp, wp) = (params.height, params.width);
    let plane = hp * wp;

    // adjoint of crop is zero-padding; adjoint of IDWT2 is DWT2
    let (g_padded, _) = grad_out.pad_pow2();
    let g_coeff = transform_planes(&g_padded, false)?;

    let mut g_x_coeff = Tensor4::zeros([bs, c_in, hp, wp])?;
    let mut g_scale = Vec::with_capacity(params.paths());
    let mut g_mixing = Vec::with_capacity(params.paths());
    let mut g_thresh = Vec::with_capacity(params.paths());
    let mut g_z = vec![0.0; c_out * plane];
    let mut g_u = vec![0.0; c_in * plane];

    for i in 0..params.paths() {
        let a = params.scale[i].as_slice();
        let v = &params.mixing[i];
        let t = cache.thresholds[i].as_slice();
        let z = &cache.mixed[i];
        let mut ga = Matrix::zeros(hp, wp);
        let mut gv = Matrix::zeros(c_out, c_in);
        let mut gt = Matrix::zeros(hp, wp);
        for b in 0..bs {
            for o in 0..c_out {
                let zs = z.plane(b, o);
                let gs = g_coeff.plane(b, o);
                for p in 0..plane {
                    let active = zs[p].abs() > t[p];
                    g_z[o * plane + p] = if active { gs[p] } else { 0.0 };
                    if active {
                        gt.as_mut_slice()[p] -= gs[p] * zs[p].signum();
                    }
                }
            }
            g_u.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..c_in {
                let xs = cache.coeffs.plane(b, c);
                for o in 0..c_out {
                    let weight = v[(o, c)];
                    let mut acc = 0.0;
                    for p in 0..plane {
                        let gz = g_z[o * plane + p];
                        acc += gz * xs[p] * a[p];
                        g_u[c * plane + p] += weight * gz;
                    }
                    gv[(o, c)] += acc;
                }
                let gx = g_x_coeff.plane_mut(b, c);
                for p in 0..plane {
                    let gu = g_u[c * plane + p];
                    ga.as_mut_slice()[p] += gu * xs[p];
                    gx[p] += gu * a[p];
                }
            }
        }
        let raw = params.threshold_raw[i].as_slice();
        match params.threshold_mode {
            ThresholdMode::Softplus => {
                for (g, &r) in gt.as_mut_slice().iter_mut().zip(raw) {
                    *g *= sigmoid(r);
                }
            }
            ThresholdMode::HardZero => gt = Matrix::zeros(hp, wp),
        }
        g_scale.push(ga);
        g_mixing.push(gv);
        g_thresh.push(gt);
    }

    let mut g_input = transform_planes(&g_x_coeff, true)?.crop(cache.orig)?;
    if params.residual {
        for (gi, go) in g_input.as_mut_slice().iter_mut().zip(grad_out.as_slice()) {
            *gi += go;
        }
    }
    Ok(LayerGrads {
        scale: g_scale,
        mixing: g_mixing,
        threshold_raw: g_thresh,
        input: g_input,
    })
}

/// Initial parameters: `A_i = 1`, `V_i ~ U(-b, b)` with `b = sqrt(1 / C_in)`,
/// and raw thresholds set so that `softplus(T_raw) = 0.01`. Deterministic in
/// `seed`.
pub fn init_params(
    paths: usize,
    c_in: usize,
    c_out: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<LayerParams> {
    if paths == 0 || c_in == 0 || c_out == 0 {
        return Err(Error::Parameter(
            "path and channel counts must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = (1.0 / c_in as f64).sqrt();
    let raw = softplus_inverse(INIT_THRESHOLD);
    let mut mixing = Vec::with_capacity(paths);
    for _ in 0..paths {
        let data = (0..c_out * c_in)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        mixing.push(Matrix::from_vec(c_out, c_in, data)?);
    }
    let params = LayerParams {
        c_in,
        c_out,
        height,
        width,
        scale: vec![Matrix::from_vec(height, width, vec![1.0; height * width])?; paths],
        mixing,
        threshold_raw: vec![Matrix::from_vec(height, width, vec![raw; height * width])?; paths],
        residual: false,
        threshold_mode: ThresholdMode::Softplus,
    };
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Tensor4 {
        Tensor4::from_vec([1, 1, 1, 1], vec![v]).unwrap()
    }

    fn st(z: f64, t: f64) -> f64 {
        let tm = Matrix::from_vec(1, 1, vec![t]).unwrap();
        soft_threshold(&one(z), &tm).unwrap().as_slice()[0]
    }

    #[test]
    fn soft_threshold_branches() {
        assert_eq!(st(2.0, 0.5), 1.5);
        assert_eq!(st(-2.0, 0.5), -1.5);
        assert_eq!(st(0.3, 0.5), 0.0);
        assert_eq!(st(-0.5, 0.5), 0.0);
    }

    #[test]
    fn negative_threshold_rejected() {
        let tm = Matrix::from_vec(1, 1, vec![-0.1]).unwrap();
        assert!(matches!(soft_threshold(&one(1.0), &tm), Err(Error::Parameter(_))));
    }

    #[test]
    fn softplus_round_trip() {
        for y in [1e-4, 0.01, 0.5, 3.0, 40.0] {
            assert!((softplus(softplus_inverse(y)) - y).abs() < 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_params(2, 3, 4, 8, 8, 7).unwrap();
        let b = init_params(2, 3, 4, 8, 8, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.scale.iter().all(|m| m.as_slice().iter().all(|&v| v == 1.0)));
        let bound = (1.0f64 / 3.0).sqrt();
        assert!(a.mixing.iter().all(|m| m.as_slice().iter().all(|v| v.abs() < bound)));
        let t = a.threshold(0);
        assert!(t.as_slice().iter().all(|&v| v > 0.009 && v < 0.011));
        assert_ne!(a, init_params(2, 3, 4, 8, 8, 8).unwrap());
    }

    #[test]
    fn init_rejects_bad_sizes() {
        assert!(init_params(0, 1, 1, 4, 4, 0).is_err());
        assert!(init_params(1, 1, 1, 3, 4, 0).is_err());
    }

    #[test]
    fn channel_mismatch() {
        let p = init_params(1, 2, 2, 4, 4, 0).unwrap();
        let x = Tensor4::zeros([1, 3, 4, 4]).unwrap();
        assert!(matches!(forward(&x, &p), Err(Error::Shape(_))));
    }

    #[test]
    fn residual_needs_square_channels() {
        let mut p = init_params(1, 2, 3, 4, 4, 0).unwrap();
        p.residual = true;
        let x = Tensor4::zeros([1, 2, 4, 4]).unwrap();
        assert!(forward(&x, &p).is_err());
    }

    #[test]
    fn stale_cache_rejected() {
        let p = init_params(1, 1, 2, 4, 4, 0).unwrap();
        let x = Tensor4::zeros([1, 1, 4, 4]).unwrap();
        let (_, cache) = forward(&x, &p).unwrap();
        let wrong = Tensor4::zeros([1, 1, 4, 4]).unwrap();
        assert!(matches!(backward(&wrong, &cache), Err(Error::Cache(_))));
    }

    #[test]
    fn zero_grad_gives_zero_grads() {
        let p = init_params(2, 2, 2, 4, 4, 3).unwrap();
        let x = Tensor4::from_vec([2, 2, 4, 4], (0..64).map(|v| (v as f64).sin()).collect()).unwrap();
        let (y, cache) = forward(&x, &p).unwrap();
        let g = backward(&Tensor4::zeros(y.shape()).unwrap(), &cache).unwrap();
        let all_zero = |ms: &[Matrix]| ms.iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0));
        assert!(all_zero(&g.scale) && all_zero(&g.mixing) && all_zero(&g.threshold_raw));
        assert!(g.input.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn padded_input_is_cropped_back() {
        let p = init_params(1, 1, 1, 4, 4, 0).unwrap();
        let x = Tensor4::from_vec([1, 1, 3, 3], vec![0.5; 9]).unwrap();
        let (y, _) = forward(&x, &p).unwrap();
        assert_eq!(y.shape(), [1, 1, 3, 3]);
    }
}
