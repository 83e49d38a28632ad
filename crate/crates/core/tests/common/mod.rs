#![allow(dead_code)]

use hwt_core::haar::haar_matrix;
use hwt_core::layer::{soft_threshold, LayerParams};
use hwt_core::{Matrix, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn random_tensor(rng: &mut impl Rng, shape: [usize; 4]) -> Tensor4 {
    let len = shape.iter().product();
    Tensor4::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Transcribed by hand from the closed-form 4-point matrix.
pub fn h4_literal() -> Matrix {
    let s = 2f64.sqrt();
    Matrix::from_rows(&[
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [s, -s, 0.0, 0.0],
        [0.0, 0.0, s, -s],
    ])
    .unwrap()
    .scale(0.5)
}

/// Coefficients reported for the representative patch by the circuit.
pub fn reported_q() -> Matrix {
    Matrix::from_rows(&[
        [0.85032347, 0.17578396, 0.07245688, 0.06442049],
        [0.20012496, 0.15016657, 0.11704700, 0.10099505],
        [0.13802174, 0.07245688, 0.05196152, 0.10977249],
        [0.20964255, 0.17306068, 0.18384776, 0.05830952],
    ])
    .unwrap()
}

/// Classical coefficients reported for the same patch.
pub fn reported_c() -> Matrix {
    Matrix::from_rows(&[
        [0.91442991, 0.12204016, -0.02350484, -0.02118513],
        [0.04917920, -0.15077581, -0.08658321, -0.09108147],
        [0.00180456, 0.05328093, 0.01119008, 0.10257259],
        [0.14389606, -0.18540747, 0.18784657, 0.05587149],
    ])
    .unwrap()
}

pub fn dense_haar(n: usize) -> Matrix {
    haar_matrix(n.trailing_zeros()).unwrap()
}

fn padded(n: usize) -> usize {
    n.next_power_of_two().max(2)
}

/// Layer forward written directly from the matrix form, with no shared code
/// path beyond `haar_matrix` and the elementwise shrink.
pub fn dense_layer_forward(x: &Tensor4, p: &LayerParams) -> Tensor4 {
    let [bs, c_in, h, w] = x.shape();
    let (hp, wp) = (padded(h), padded(w));
    let (hh, hw) = (dense_haar(hp), dense_haar(wp));
    let mut out = Tensor4::zeros([bs, p.c_out, h, w]).unwrap();
    for b in 0..bs {
        let coeffs: Vec<Matrix> = (0..c_in)
            .map(|c| {
                let mut xp = Matrix::zeros(hp, wp);
                for r in 0..h {
                    for s in 0..w {
                        xp[(r, s)] = x.get(b, c, r, s);
                    }
                }
                hh.matmul(&xp).unwrap().matmul(&hw.transpose()).unwrap()
            })
            .collect();
        for o in 0..p.c_out {
            let mut y = Matrix::zeros(hp, wp);
            for i in 0..p.paths() {
                let mut z = Matrix::zeros(hp, wp);
                for (c, xc) in coeffs.iter().enumerate() {
                    let v = p.mixing[i][(o, c)];
                    for r in 0..hp {
                        for s in 0..wp {
                            z[(r, s)] += v * xc[(r, s)] * p.scale[i][(r, s)];
                        }
                    }
                }
                let t = p.threshold(i);
                let zt = Tensor4::from_vec([1, 1, hp, wp], z.into_vec()).unwrap();
                let st = soft_threshold(&zt, &t).unwrap();
                for (acc, v) in y.as_mut_slice().iter_mut().zip(st.as_slice()) {
                    *acc += v;
                }
            }
            let spatial = hh.transpose().matmul(&y).unwrap().matmul(&hw).unwrap();
            for r in 0..h {
                for s in 0..w {
                    let skip = if p.residual { x.get(b, o, r, s) } else { 0.0 };
                    out.set(b, o, r, s, spatial[(r, s)] + skip);
                }
            }
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `|a - b| / max(|a|, |b|)` over whole vectors; 0 when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Smallest `||z| - T|` over all pre-threshold values of a forward pass.
pub fn kink_margin(x: &Tensor4, p: &LayerParams) -> f64 {
    let (_, cache) = hwt_core::layer::forward(x, p).unwrap();
    let mut margin = f64::INFINITY;
    for (z, t) in cache.mixed().iter().zip(cache.thresholds()) {
        let [bs, cs, _, _] = z.shape();
        for b in 0..bs {
            for c in 0..cs {
                for (v, tv) in z.plane(b, c).iter().zip(t.as_slice()) {
                    margin = margin.min((v.abs() - tv).abs());
                }
            }
        }
    }
    margin
}

fn weighted_sum(x: &Tensor4, p: &LayerParams, r: &Tensor4) -> f64 {
    let (y, _) = hwt_core::layer::forward(x, p).unwrap();
    y.as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum()
}

fn central<F: FnMut(f64) -> f64>(h: f64, mut f: F) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Relative error between analytic and central-difference gradients of
/// `L = sum(forward(x) * r)` for every parameter tensor and the input.
pub fn gradient_errors(x: &Tensor4, p: &LayerParams, r: &Tensor4, h: f64) -> Vec<(String, f64)> {
    let (_, cache) = hwt_core::layer::forward(x, p).unwrap();
    let grads = hwt_core::layer::backward(r, &cache).unwrap();
    let mut out = Vec::new();

    type Field = fn(&mut LayerParams) -> &mut Vec<Matrix>;
    let fields: [(&str, Field, &[Matrix]); 3] = [
        ("scale", |q| &mut q.scale, &grads.scale),
        ("mixing", |q| &mut q.mixing, &grads.mixing),
        ("threshold", |q| &mut q.threshold_raw, &grads.threshold_raw),
    ];
    for (name, field, analytic) in fields {
        for (i, a) in analytic.iter().enumerate() {
            let numeric: Vec<f64> = (0..a.as_slice().len())
                .map(|k| {
                    central(h, |d| {
                        let mut q = p.clone();
                        field(&mut q)[i].as_mut_slice()[k] += d;
                        weighted_sum(x, &q, r)
                    })
                })
                .collect();
            out.push((format!("{name}[{i}]"), relative_error(a.as_slice(), &numeric)));
        }
    }

    let numeric: Vec<f64> = (0..x.as_slice().len())
        .map(|k| {
            central(h, |d| {
                let mut xx = x.clone();
                xx.as_mut_slice()[k] += d;
                weighted_sum(&xx, p, r)
            })
        })
        .collect();
    out.push(("input".into(), relative_error(grads.input.as_slice(), &numeric)));
    out
}

/// Random layer configuration with thresholds large enough that some
/// coefficients are zeroed.
pub fn random_layer(rng: &mut impl Rng, paths: usize, c_in: usize, c_out: usize, h: usize, w: usize) -> LayerParams {
    let (hp, wp) = (padded(h), padded(w));
    let mut p = hwt_core::layer::init_params(paths, c_in, c_out, hp, wp, rng.random()).unwrap();
    for i in 0..paths {
        p.scale[i] = random_matrix(rng, hp, wp, -1.5, 1.5);
        p.mixing[i] = random_matrix(rng, c_out, c_in, -1.0, 1.0);
        p.threshold_raw[i] = random_matrix(rng, hp, wp, -3.0, -0.5);
    }
    p
}
