//! Toy classification task used to show the layer trains.
//!
//! Model: layer -> ReLU -> global average pool -> linear -> softmax
//! cross-entropy, trained with plain minibatch SGD.
//!
//! The ReLU matters: each path acts pointwise in the Haar domain, so the
//! spatial mean of the layer output depends only on the input's DC
//! coefficient. Without a nonlinearity before pooling, two classes with equal
//! means would be indistinguishable.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backward, forward, init_params, LayerParams};
use crate::{Error, Matrix, Result, Tensor4};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPatch {
    pub patch: Matrix,
    pub label: usize,
}

/// Horizontal (label 0) versus vertical (label 1) stripes on `side x side`
/// patches, with random period (2 or 4), phase, contrast and additive noise.
/// Classes alternate so any prefix is balanced.
pub fn stripes_dataset(samples: usize, side: usize, seed: u64) -> Vec<LabeledPatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|i| {
            let label = i % 2;
            let period = if rng.random_bool(0.5) { 2 } else { 4 };
            let phase = rng.random_range(0..period);
            let contrast = rng.random_range(0.5..1.5);
            let mut patch = Matrix::zeros(side, side);
            for r in 0..side {
                for c in 0..side {
                    let along = if label == 0 { r } else { c };
                    let on = (along + phase) % period < period / 2;
                    let noise = rng.random_range(-0.2..0.2);
                    patch[(r, c)] = if on { contrast } else { 0.0 } + noise;
                }
            }
            LabeledPatch { patch, label }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub paths: usize,
    pub channels: usize,
    pub batch_size: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.05,
            seed: 0,
            paths: 2,
            channels: 4,
            batch_size: 10,
        }
    }
}

/// Loss and accuracy over the whole dataset after an epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyReport {
    /// Loss and accuracy before the first update.
    pub initial: EpochStats,
    pub trace: Vec<EpochStats>,
    pub layer: LayerParams,
}

impl ToyReport {
    pub fn final_stats(&self) -> EpochStats {
        self.trace.last().copied().unwrap_or(self.initial)
    }
}

struct Classifier {
    weight: Matrix,
    bias: Vec<f64>,
}

struct Model {
    layer: LayerParams,
    head: Classifier,
    classes: usize,
}

struct BatchResult {
    loss: f64,
    correct: usize,
}

impl Model {
    fn batch_tensor(data: &[&LabeledPatch]) -> Result<Tensor4> {
        let (h, w) = (data[0].patch.rows(), data[0].patch.cols());
        let mut values = Vec::with_capacity(data.len() * h * w);
        for s in data {
            if s.patch.rows() != h || s.patch.cols() != w {
                return Err(Error::Shape("patches must share one size".into()));
            }
            values.extend_from_slice(s.patch.as_slice());
        }
        Tensor4::from_vec([data.len(), 1, h, w], values)
    }

    /// Forward pass; with `lr = Some(_)` also applies one SGD step.
    fn step(&mut self, data: &[&LabeledPatch], lr: Option<f64>) -> Result<BatchResult> {
        let x = Self::batch_tensor(data)?;
        let (y, cache) = forward(&x, &self.layer)?;
        let [bs, ch, h, w] = y.shape();
        let area = (h * w) as f64;

        let mut pooled = Matrix::zeros(bs, ch);
        for b in 0..bs {
            for c in 0..ch {
                pooled[(b, c)] = y.plane(b, c).iter().map(|v| v.max(0.0)).sum::<f64>() / area;
            }
        }

        let mut loss = 0.0;
        let mut correct = 0;
        let mut g_logits = Matrix::zeros(bs, self.classes);
        for (b, sample) in data.iter().enumerate() {
            if sample.label >= self.classes {
                return Err(Error::Parameter(format!("label {} out of range", sample.label)));
            }
            let logits: Vec<f64> = (0..self.classes)
                .map(|k| {
                    self.head.bias[k]
                        + (0..ch).map(|c| self.head.weight[(k, c)] * pooled[(b, c)]).sum::<f64>()
                })
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            loss += z.ln() + max - logits[sample.label];
            let argmax = (0..self.classes)
                .max_by(|&i, &j| logits[i].total_cmp(&logits[j]))
                .unwrap_or(0);
            if argmax == sample.label {
                correct += 1;
            }
            for k in 0..self.classes {
                let p = (logits[k] - max).exp() / z;
                let target = if k == sample.label { 1.0 } else { 0.0 };
                g_logits[(b, k)] = (p - target) / bs as f64;
            }
        }
        let result = BatchResult {
            loss: loss / bs as f64,
            correct,
        };
        let Some(lr) = lr else {
            return Ok(result);
        };

        let mut g_weight = Matrix::zeros(self.classes, ch);
        let mut g_bias = vec![0.0; self.classes];
        let mut g_y = Tensor4::zeros(y.shape())?;
        for b in 0..bs {
            for k in 0..self.classes {
                g_bias[k] += g_logits[(b, k)];
                for c in 0..ch {
                    g_weight[(k, c)] += g_logits[(b, k)] * pooled[(b, c)];
                }
            }
            for c in 0..ch {
                let g_pool: f64 = (0..self.classes)
                    .map(|k| self.head.weight[(k, c)] * g_logits[(b, k)])
                    .sum::<f64>()
                    / area;
                let src = y.plane(b, c).to_vec();
                for (g, v) in g_y.plane_mut(b, c).iter_mut().zip(src) {
                    *g = if v > 0.0 { g_pool } else { 0.0 };
                }
            }
        }
        let grads = backward(&g_y, &cache)?;

        let sgd = |param: &mut Matrix, grad: &Matrix| {
            for (p, g) in param.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                *p -= lr * g;
            }
        };
        for i in 0..self.layer.paths() {
            sgd(&mut self.layer.scale[i], &grads.scale[i]);
            sgd(&mut self.layer.mixing[i], &grads.mixing[i]);
            sgd(&mut self.layer.threshold_raw[i], &grads.threshold_raw[i]);
        }
        sgd(&mut self.head.weight, &g_weight);
        for (b, g) in self.head.bias.iter_mut().zip(g_bias) {
            *b -= lr * g;
        }
        Ok(result)
    }

    fn evaluate(&mut self, data: &[LabeledPatch], epoch: usize) -> Result<EpochStats> {
        let all: Vec<&LabeledPatch> = data.iter().collect();
        let r = self.step(&all, None)?;
        Ok(EpochStats {
            epoch,
            loss: r.loss,
            accuracy: r.correct as f64 / data.len() as f64,
        })
    }
}

/// Trains layer + classifier on `dataset` and returns the per-epoch trace.
/// Deterministic in `config.seed`.
pub fn train_toy(dataset: &[LabeledPatch], config: &ToyConfig) -> Result<ToyReport> {
    if dataset.is_empty() {
        return Err(Error::Parameter("empty dataset".into()));
    }
    if !config.lr.is_finite() || config.lr < 0.0 {
        return Err(Error::Parameter(format!("invalid learning rate {}", config.lr)));
    }
    if config.batch_size == 0 {
        return Err(Error::Parameter("batch size must be positive".into()));
    }
    let classes = dataset.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    if classes < 2 {
        return Err(Error::Parameter("dataset needs at least two classes".into()));
    }
    let (h, w) = (dataset[0].patch.rows(), dataset[0].patch.cols());
    if !h.is_power_of_two() || !w.is_power_of_two() || h < 2 || w < 2 {
        return Err(Error::Shape(format!("patches must be power-of-two sized, got {h}x{w}")));
    }

    let layer = init_params(config.paths, 1, config.channels, h, w, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let bound = (1.0 / config.channels as f64).sqrt();
    let weight = Matrix::from_vec(
        classes,
        config.channels,
        (0..classes * config.channels)
            .map(|_| rng.random_range(-bound..bound))
            .collect(),
    )?;
    let mut model = Model {
        layer,
        head: Classifier {
            weight,
            bias: vec![0.0; classes],
        },
        classes,
    };

    let initial = model.evaluate(dataset, 0)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&LabeledPatch> = chunk.iter().map(|&i| &dataset[i]).collect();
            model.step(&batch, Some(config.lr))?;
        }
        trace.push(model.evaluate(dataset, epoch)?);
    }
    Ok(ToyReport {
        initial,
        trace,
        layer: model.layer,
    })
}
