mod common;

use common::*;
use hwt_core::layer::{forward, init_params, soft_threshold, ThresholdMode};
use hwt_core::{Matrix, Tensor4};
use proptest::prelude::*;

#[test]
fn odd_sizes_match_oracle_after_padding() {
    let mut r = rng(21);
    for (h, w) in [(1, 1), (3, 5), (5, 3), (7, 8), (2, 6)] {
        let mut p = random_layer(&mut r, 2, 2, 2, h, w);
        p.residual = true;
        let x = random_tensor(&mut r, [3, 2, h, w]);
        let (y, _) = forward(&x, &p).unwrap();
        assert_eq!(y.shape(), [3, 2, h, w]);
        assert!(y.max_abs_diff(&dense_layer_forward(&x, &p)) < 1e-10, "{h}x{w}");
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(22);
    let shapes = [(1, 1, 2, 2, 2), (2, 3, 1, 4, 4), (3, 2, 2, 8, 4), (2, 1, 3, 5, 3)];
    let mut done = 0;
    while done < shapes.len() * 2 {
        let (paths, c_in, c_out, h, w) = shapes[done % shapes.len()];
        let mut p = random_layer(&mut r, paths, c_in, c_out, h, w);
        p.residual = c_in == c_out;
        let x = random_tensor(&mut r, [2, c_in, h, w]);
        if kink_margin(&x, &p) < 1e-3 {
            continue;
        }
        let g = random_tensor(&mut r, [2, c_out, h, w]);
        for (name, err) in gradient_errors(&x, &p, &g, 1e-5) {
            assert!(err < 1e-4, "{name}: relative error {err:e} for {:?}", shapes[done % shapes.len()]);
        }
        done += 1;
    }
}

#[test]
fn identity_configuration() {
    let mut r = rng(23);
    for (c, h, w) in [(1, 4, 4), (3, 8, 8), (2, 3, 6)] {
        let mut p = init_params(1, c, c, h.max(2usize).next_power_of_two(), w.max(2usize).next_power_of_two(), 0).unwrap();
        p.threshold_mode = ThresholdMode::HardZero;
        p.mixing[0] = Matrix::identity(c);
        let x = random_tensor(&mut r, [2, c, h, w]);
        let (y, _) = forward(&x, &p).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-10);
    }
}

#[test]
fn residual_adds_input_exactly() {
    let mut r = rng(24);
    let mut p = random_layer(&mut r, 3, 4, 4, 8, 8);
    let x = random_tensor(&mut r, [2, 4, 8, 8]);
    let (plain, _) = forward(&x, &p).unwrap();
    p.residual = true;
    let (with, _) = forward(&x, &p).unwrap();
    for ((a, b), xv) in with.as_slice().iter().zip(plain.as_slice()).zip(x.as_slice()) {
        assert_eq!(*a, b + xv);
    }
}

#[test]
fn residual_needs_square_mixing() {
    let mut p = init_params(1, 2, 3, 4, 4, 0).unwrap();
    p.residual = true;
    assert!(forward(&Tensor4::zeros([1, 2, 4, 4]).unwrap(), &p).is_err());
}

#[test]
fn channel_mismatch_rejected() {
    let p = init_params(2, 3, 3, 4, 4, 0).unwrap();
    assert!(forward(&Tensor4::zeros([1, 2, 4, 4]).unwrap(), &p).is_err());
    let mut q = p.clone();
    q.scale[1] = Matrix::zeros(2, 2);
    assert!(forward(&Tensor4::zeros([1, 3, 4, 4]).unwrap(), &q).is_err());
}

#[test]
fn init_is_deterministic() {
    assert_eq!(init_params(3, 2, 4, 8, 8, 5).unwrap(), init_params(3, 2, 4, 8, 8, 5).unwrap());
    assert_ne!(init_params(3, 2, 4, 8, 8, 5).unwrap(), init_params(3, 2, 4, 8, 8, 6).unwrap());
    let p = init_params(3, 2, 4, 8, 8, 5).unwrap();
    assert!((p.threshold(0)[(0, 0)] - 0.01).abs() < 1e-15);
    assert_eq!(p.parameter_count(), 3 * (2 * 64 + 8));
}

proptest! {
    #[test]
    fn shrink_never_grows_or_flips(vals in prop::collection::vec(-10.0..10.0f64, 16), ts in prop::collection::vec(0.0..5.0f64, 16)) {
        let z = Tensor4::from_vec([1, 1, 4, 4], vals.clone()).unwrap();
        let t = Matrix::from_vec(4, 4, ts).unwrap();
        let out = soft_threshold(&z, &t).unwrap();
        for (o, i) in out.as_slice().iter().zip(&vals) {
            prop_assert!(o.abs() <= i.abs());
            prop_assert!(*o == 0.0 || o.signum() == i.signum());
        }
    }
}

#[test]
fn shrink_examples() {
    let z = Tensor4::from_vec([1, 1, 2, 2], vec![1.5, -0.3, -2.0, 0.5]).unwrap();
    let t = Matrix::from_vec(2, 2, vec![0.5; 4]).unwrap();
    assert_eq!(soft_threshold(&z, &t).unwrap().as_slice(), &[1.0, 0.0, -1.5, 0.0]);
    assert!(soft_threshold(&z, &Matrix::from_vec(2, 2, vec![-0.1; 4]).unwrap()).is_err());
    assert!(soft_threshold(&z, &Matrix::zeros(4, 4)).is_err());
}
