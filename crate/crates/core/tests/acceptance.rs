//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line with
//! the measured value and the tolerance it was held to.

mod common;

use std::time::{Duration, Instant};

use common::*;
use hwt_core::costs::{self, LayerSpec, ReplacementPolicy, Resnet20Variant};
use hwt_core::haar::{dwt1d, dwt2d, haar_matrix, idwt1d, idwt2d, HaarPlan};
use hwt_core::layer::{forward, stripes_dataset, train_toy, ThresholdMode, ToyConfig};
use hwt_core::qsim::{
    circuit_unitary, haar_circuit, mse, noise_sweep, run_2d_haar_quantum,
    run_2d_haar_quantum_detailed, PauliChoice, RunMode, HAAR_CIRCUIT_RELABEL,
};
use hwt_core::Matrix;
use rand::Rng;

fn report(id: u32, name: &str, ok: bool, detail: String) {
    println!("[{}] {id}. {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

#[test]
fn transform_matches_dense_oracle() {
    let start = Instant::now();
    let mut r = rng(1);
    let (mut fwd, mut back) = (0.0f64, 0.0f64);
    for n in [2usize, 4, 8, 16, 32] {
        let plan = HaarPlan::full(n).unwrap();
        let h = dense_haar(n);
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
            let y = dwt1d(&x, &plan).unwrap();
            let oracle = h.matvec(&x).unwrap();
            fwd = y.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(fwd, f64::max);
            let xb = idwt1d(&y, &plan).unwrap();
            back = xb.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(back, f64::max);

            let img = random_matrix(&mut r, n, n, -10.0, 10.0);
            let c = dwt2d(&img, &plan).unwrap();
            let oracle = h.matmul(&img).unwrap().matmul(&h.transpose()).unwrap();
            fwd = fwd.max(c.max_abs_diff(&oracle));
            back = back.max(idwt2d(&c, &plan).unwrap().max_abs_diff(&img));
        }
    }
    let t = start.elapsed();
    report(
        1,
        "transform correctness",
        fwd < 1e-12 && back < 1e-12 && within(t, 5.0),
        format!("forward {fwd:.2e}, round trip {back:.2e} (tol 1e-12), {:.2}s (< 5s)", t.as_secs_f64()),
    );
}

#[test]
fn four_point_matrix() {
    let h4 = haar_matrix(2).unwrap();
    let entry = h4.max_abs_diff(&h4_literal());
    let orth = h4.transpose().matmul(&h4).unwrap().max_abs_diff(&Matrix::identity(4));
    report(
        2,
        "4-point Haar matrix",
        entry < 1e-15 && orth < 1e-12,
        format!("entrywise {entry:.2e} (tol 1e-15), |HᵀH - I| {orth:.2e} (tol 1e-12)"),
    );
}

#[test]
fn circuit_equals_kronecker_oracle() {
    let start = Instant::now();
    let u = circuit_unitary(&haar_circuit()).unwrap();
    let h4 = h4_literal();
    let k = h4.kron(&h4);
    let p = HAAR_CIRCUIT_RELABEL;
    let mut unitary_err = 0.0f64;
    for i in 0..16 {
        for j in 0..16 {
            unitary_err = unitary_err.max((u[(p[i], p[j])] - k[(i, j)]).abs());
        }
    }

    let mut r = rng(3);
    let mut pipeline_err = 0.0f64;
    let plan = HaarPlan::full(4).unwrap();
    for _ in 0..200 {
        let patch = random_matrix(&mut r, 4, 4, 0.0, 1.0);
        let q = run_2d_haar_quantum(&patch, &RunMode::Exact).unwrap();
        pipeline_err = pipeline_err.max(q.max_abs_diff(&dwt2d(&patch, &plan).unwrap()));
    }
    let t = start.elapsed();
    report(
        3,
        "circuit equivalence",
        unitary_err < 1e-12 && pipeline_err < 1e-10 && within(t, 10.0),
        format!(
            "unitary vs relabeled H4⊗H4 {unitary_err:.2e} (tol 1e-12), 200 patches {pipeline_err:.2e} (tol 1e-10), {:.2}s (< 10s)",
            t.as_secs_f64()
        ),
    );
}

#[test]
fn reported_mse_replay() {
    let v = mse(&reported_q(), &reported_c()).unwrap();
    report(
        4,
        "MSE replay",
        (v - 0.02304535).abs() <= 1e-6,
        format!("{v:.10} vs 0.02304535 (tol 1e-6)"),
    );
}

#[test]
fn shot_counts_within_binomial_bounds() {
    let mut r = rng(5);
    let shots = 20_000u64;
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let patch = random_matrix(&mut r, 4, 4, 0.0, 1.0);
        let exact = run_2d_haar_quantum_detailed(&patch, &RunMode::Exact).unwrap();
        let sampled = run_2d_haar_quantum_detailed(&patch, &RunMode::Shots { shots, seed: trial }).unwrap();
        for (a, &c) in exact.final_state.amplitudes().iter().zip(&sampled.measurement.counts) {
            let p = a.norm_sqr();
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            let dev = (c as f64 / shots as f64 - p).abs();
            let z = if sigma > 0.0 { dev / sigma } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
        }
    }
    report(
        5,
        "shot statistics",
        worst <= 5.0,
        format!("largest deviation {worst:.2}σ over 20 patches x 16 outcomes (tol 5σ)"),
    );
}

#[test]
fn noise_trend() {
    let patch = idwt2d(&reported_q(), &HaarPlan::full(4).unwrap()).unwrap();
    let points = noise_sweep(&patch, &[0.0, 0.01, 0.05, 0.1], 1000, 0, PauliChoice::Uniform, false).unwrap();
    let eps: Vec<f64> = points.iter().map(|p| p.mean_eps_max).collect();
    let ok = points[0].max_eps_max <= 1e-12 && eps[1] <= eps[2] && eps[2] <= eps[3] && eps[2] > 0.0;
    report(
        6,
        "noise behavior",
        ok,
        format!(
            "p=0 max ε {:.2e} (tol 1e-12); mean ε at p=0.01/0.05/0.1: {:.4e} / {:.4e} / {:.4e} (nondecreasing)",
            points[0].max_eps_max, eps[1], eps[2], eps[3]
        ),
    );
}

#[test]
fn cost_model_figures() {
    let n = 32;
    let conv = costs::macs(&LayerSpec::conv(3, 64, n)).unwrap();
    let perc = costs::macs(&LayerSpec::perceptron(3, 64, n)).unwrap();
    let red = costs::reduction(&LayerSpec::conv(3, 64, n), &LayerSpec::perceptron(3, 64, n)).unwrap();
    let resnet = costs::resnet20_params(Resnet20Variant::Baseline, &ReplacementPolicy::None).unwrap();
    let ok = conv == 36_864 * n * n
        && perc == 12_480 * n * n
        && (red - 0.6615).abs() <= 0.005
        && resnet == 272_474;
    report(
        7,
        "cost model",
        ok,
        format!(
            "conv {}·N², perceptron {}·N², reduction {red:.4} (0.6615 ± 0.005), ResNet-20 {resnet} (272474)",
            conv / (n * n),
            perc / (n * n)
        ),
    );
}

#[test]
fn layer_correctness() {
    let mut r = rng(8);
    let mut oracle_err = 0.0f64;
    for cfg in 0..50 {
        let paths = [1, 2, 3][cfg % 3];
        let c_in = [1, 2, 4][(cfg / 3) % 3];
        let c_out = [1, 2, 4][(cfg / 9) % 3];
        let n = [4, 8][(cfg / 27) % 2];
        let mut p = random_layer(&mut r, paths, c_in, c_out, n, n);
        p.residual = c_in == c_out && cfg % 2 == 0;
        let x = random_tensor(&mut r, [2, c_in, n, n]);
        let (y, _) = forward(&x, &p).unwrap();
        oracle_err = oracle_err.max(y.max_abs_diff(&dense_layer_forward(&x, &p)));
    }

    let mut grad_err = 0.0f64;
    let mut checked = 0;
    while checked < 6 {
        let (paths, c_in, c_out, h, w) = [(1, 1, 1, 4, 4), (2, 2, 3, 4, 8), (3, 2, 2, 3, 5)][checked % 3];
        let p = random_layer(&mut r, paths, c_in, c_out, h, w);
        let x = random_tensor(&mut r, [2, c_in, h, w]);
        if kink_margin(&x, &p) < 1e-3 {
            continue;
        }
        let g = random_tensor(&mut r, [2, c_out, h, w]);
        for (_, e) in gradient_errors(&x, &p, &g, 1e-5) {
            grad_err = grad_err.max(e);
        }
        checked += 1;
    }

    let mut p = random_layer(&mut r, 1, 3, 3, 8, 8);
    p.threshold_mode = ThresholdMode::HardZero;
    p.scale[0] = Matrix::from_vec(8, 8, vec![1.0; 64]).unwrap();
    p.mixing[0] = Matrix::identity(3);
    let x = random_tensor(&mut r, [2, 3, 8, 8]);
    let (y, _) = forward(&x, &p).unwrap();
    let ident_err = y.max_abs_diff(&x);

    report(
        8,
        "layer correctness",
        oracle_err < 1e-10 && grad_err < 1e-4 && ident_err < 1e-10,
        format!(
            "dense oracle {oracle_err:.2e} (tol 1e-10), gradient rel err {grad_err:.2e} (tol 1e-4), identity {ident_err:.2e} (tol 1e-10)"
        ),
    );
}

#[test]
fn toy_training_converges() {
    let start = Instant::now();
    let data = stripes_dataset(200, 8, 0);
    let cfg = ToyConfig { epochs: 200, seed: 0, ..ToyConfig::default() };
    let rep = train_toy(&data, &cfg).unwrap();
    let t = start.elapsed();
    let last = rep.final_stats();
    let drop = 1.0 - last.loss / rep.initial.loss;
    let head: f64 = rep.trace[..20].iter().map(|s| s.loss).sum::<f64>() / 20.0;
    let tail: f64 = rep.trace[180..].iter().map(|s| s.loss).sum::<f64>() / 20.0;
    report(
        9,
        "trainability",
        last.accuracy >= 0.95 && drop >= 0.5 && tail < head && within(t, 60.0),
        format!(
            "accuracy {:.3} (>= 0.95), loss {:.4} -> {:.4} ({:.1}% drop, >= 50%), {:.1}s (< 60s)",
            last.accuracy,
            rep.initial.loss,
            last.loss,
            100.0 * drop,
            t.as_secs_f64()
        ),
    );
}
