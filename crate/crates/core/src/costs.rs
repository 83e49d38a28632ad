//! MAC and parameter counts for `K x K` convolutions and `P`-path Haar-domain
//! perceptrons, plus a CIFAR ResNet-20 parameter counter.
//!
//! All counts are exact `u64` arithmetic. For a `C`-channel `N x N` map:
//!
//! | layer                     | MACs                  |
//! |---------------------------|-----------------------|
//! | `K x K` conv              | `K² N² C²`            |
//! | scaling + soft-threshold  | `N² C` per path       |
//! | 1x1 channel mixing        | `N² C²` per path      |
//! | `P`-path perceptron       | `P N² C + P N² C²`    |
//!
//! With distinct channel counts the conv term is `K² N² C_in C_out` and the
//! perceptron term is `P N² C_in + P N² C_in C_out` (scaling acts on the input
//! channels). The transforms themselves are add/sub only and are not counted.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    Conv {
        k: u64,
        c_in: u64,
        c_out: u64,
        n: u64,
    },
    HtPerceptron {
        paths: u64,
        c_in: u64,
        c_out: u64,
        n: u64,
    },
}

impl LayerSpec {
    pub fn conv(k: u64, channels: u64, n: u64) -> Self {
        LayerSpec::Conv {
            k,
            c_in: channels,
            c_out: channels,
            n,
        }
    }

    pub fn perceptron(paths: u64, channels: u64, n: u64) -> Self {
        LayerSpec::HtPerceptron {
            paths,
            c_in: channels,
            c_out: channels,
            n,
        }
    }

    pub fn spatial(&self) -> u64 {
        match *self {
            LayerSpec::Conv { n, .. } | LayerSpec::HtPerceptron { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Conv { k, c_in, c_out, n } => {
                if k == 0 || c_in == 0 || c_out == 0 || n == 0 {
                    return Err(Error::Model(format!("conv dimensions must be positive: {self:?}")));
                }
            }
            LayerSpec::HtPerceptron { paths, c_in, c_out, n } => {
                if paths == 0 || c_in == 0 || c_out == 0 || n == 0 {
                    return Err(Error::Model(format!(
                        "perceptron dimensions must be positive: {self:?}"
                    )));
                }
                if !n.is_power_of_two() {
                    return Err(Error::Model(format!(
                        "perceptron spatial size must be a power of two, got {n}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn mul(factors: &[u64]) -> Result<u64> {
    factors
        .iter()
        .try_fold(1u64, |acc, &f| acc.checked_mul(f))
        .ok_or_else(|| Error::Model("count overflows u64".into()))
}

fn add(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b)
        .ok_or_else(|| Error::Model("count overflows u64".into()))
}

pub fn macs(spec: &LayerSpec) -> Result<u64> {
    spec.validate()?;
    match *spec {
        LayerSpec::Conv { k, c_in, c_out, n } => mul(&[k, k, n, n, c_in, c_out]),
        LayerSpec::HtPerceptron { paths, c_in, c_out, n } => {
            add(mul(&[paths, n, n, c_in])?, mul(&[paths, n, n, c_in, c_out])?)
        }
    }
}

/// Learnable weights, biases excluded: `K² C_in C_out` for a conv and
/// `P (2 N² + C_in C_out)` for a perceptron (scaling map, threshold map, 1x1
/// mixing per path).
pub fn params(spec: &LayerSpec) -> Result<u64> {
    spec.validate()?;
    match *spec {
        LayerSpec::Conv { k, c_in, c_out, .. } => mul(&[k, k, c_in, c_out]),
        LayerSpec::HtPerceptron { paths, c_in, c_out, n } => {
            mul(&[paths, add(mul(&[2, n, n])?, mul(&[c_in, c_out])?)?])
        }
    }
}

/// `1 - macs(b) / macs(a)`.
pub fn reduction(a: &LayerSpec, b: &LayerSpec) -> Result<f64> {
    if a.spatial() != b.spatial() {
        return Err(Error::Model(format!(
            "layers must share the spatial size, got {} and {}",
            a.spatial(),
            b.spatial()
        )));
    }
    let base = macs(a)?;
    if base == 0 {
        return Err(Error::Model("baseline has zero MACs".into()));
    }
    Ok(1.0 - macs(b)? as f64 / base as f64)
}

/// Whether a `P`-path perceptron costs fewer MACs than a `K x K` conv at `C`
/// channels; the `N²` factor cancels, leaving `P (1 + C) < K² C`.
pub fn perceptron_cheaper(paths: u64, k: u64, channels: u64) -> Result<bool> {
    Ok(macs(&LayerSpec::perceptron(paths, channels, 1))? < macs(&LayerSpec::conv(k, channels, 1))?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacTableRow {
    pub layer: String,
    pub formula: String,
    pub macs: u64,
}

/// MAC table for a `C`-channel `N x N` input with the given kernel and path
/// count substituted.
pub fn mac_table(k: u64, paths: u64, channels: u64, n: u64) -> Result<Vec<MacTableRow>> {
    let row = |layer: String, formula: &str, macs: u64| MacTableRow {
        layer,
        formula: formula.to_string(),
        macs,
    };
    let perceptron = |p| macs(&LayerSpec::perceptron(p, channels, n));
    Ok(vec![
        row(format!("{k}x{k} Conv2D"), "K^2 N^2 C^2", macs(&LayerSpec::conv(k, channels, n))?),
        row("3x3 Conv2D".into(), "9 N^2 C^2", macs(&LayerSpec::conv(3, channels, n))?),
        row("Scaling, Soft-thresholding".into(), "N^2 C", mul(&[n, n, channels])?),
        row("Channel-wise Processing".into(), "N^2 C^2", mul(&[n, n, channels, channels])?),
        row(format!("{paths}-path HT-perceptron"), "P N^2 C + P N^2 C^2", perceptron(paths)?),
        row("1-path HT-perceptron".into(), "N^2 C + N^2 C^2", perceptron(1)?),
        row("3-path HT-perceptron".into(), "3 N^2 C + 3 N^2 C^2", perceptron(3)?),
        row("5-path HT-perceptron".into(), "5 N^2 C + 5 N^2 C^2", perceptron(5)?),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub spec: LayerSpec,
    pub macs: u64,
    pub params: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub macs: u64,
    pub params: u64,
    /// MACs of the same model with every perceptron swapped for a 3x3 conv.
    pub baseline_macs: u64,
    /// `1 - macs / baseline_macs`, 0 for an empty model.
    pub reduction_vs_baseline: f64,
    pub layers: Vec<LayerCost>,
}

/// Aggregates MACs and parameters over a layer list.
pub fn cost_report(layers: &[LayerSpec]) -> Result<CostReport> {
    let mut report = CostReport {
        macs: 0,
        params: 0,
        baseline_macs: 0,
        reduction_vs_baseline: 0.0,
        layers: Vec::with_capacity(layers.len()),
    };
    for spec in layers {
        let m = macs(spec)?;
        let p = params(spec)?;
        let baseline = match *spec {
            LayerSpec::HtPerceptron { c_in, c_out, n, .. } => LayerSpec::Conv { k: 3, c_in, c_out, n },
            conv => conv,
        };
        report.macs = add(report.macs, m)?;
        report.params = add(report.params, p)?;
        report.baseline_macs = add(report.baseline_macs, macs(&baseline)?)?;
        report.layers.push(LayerCost {
            spec: *spec,
            macs: m,
            params: p,
        });
    }
    if report.baseline_macs > 0 {
        report.reduction_vs_baseline = 1.0 - report.macs as f64 / report.baseline_macs as f64;
    }
    Ok(report)
}

/// Parses a JSON list of [`LayerSpec`] records.
pub fn parse_model(json: &str) -> Result<Vec<LayerSpec>> {
    let layers: Vec<LayerSpec> = serde_json::from_str(json)
        .map_err(|e| Error::Model(format!("bad model description: {e}")))?;
    layers.iter().try_for_each(LayerSpec::validate)?;
    Ok(layers)
}

// ---------------------------------------------------------------------------
// ResNet-20 (CIFAR, 3 stages x 3 basic blocks, 1x1 projection shortcuts)

pub const CIFAR_CLASSES: u64 = 10;

/// One convolution of ResNet-20. `n` is the spatial size of its output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub name: String,
    pub k: u64,
    pub c_in: u64,
    pub c_out: u64,
    pub n: u64,
    pub stride: u64,
    /// 0 for the stem, 1..=3 for the residual stages.
    pub stage: u64,
}

impl ConvLayer {
    pub fn weights(&self) -> u64 {
        self.k * self.k * self.c_in * self.c_out
    }

    /// A stride-1 3x3 conv that keeps its channel count can be swapped for a
    /// perceptron.
    pub fn replaceable(&self) -> bool {
        self.k == 3 && self.stride == 1 && self.c_in == self.c_out && self.stage > 0
    }

    pub fn perceptron_params_per_path(&self) -> u64 {
        2 * self.n * self.n + self.c_in * self.c_out
    }
}

/// All 21 convolutions: the stem, two 3x3 convs per block and the two 1x1
/// projection shortcuts at the stage transitions.
pub fn resnet20_convs() -> Vec<ConvLayer> {
    let mut layers = vec![ConvLayer {
        name: "conv1".into(),
        k: 3,
        c_in: 3,
        c_out: 16,
        n: 32,
        stride: 1,
        stage: 0,
    }];
    let widths = [16u64, 32, 64];
    let sizes = [32u64, 16, 8];
    for stage in 0..3 {
        let c = widths[stage];
        let n = sizes[stage];
        for block in 0..3 {
            let first_in = if stage > 0 && block == 0 { widths[stage - 1] } else { c };
            let stride = if stage > 0 && block == 0 { 2 } else { 1 };
            let prefix = format!("layer{}.{}", stage + 1, block);
            layers.push(ConvLayer {
                name: format!("{prefix}.conv1"),
                k: 3,
                c_in: first_in,
                c_out: c,
                n,
                stride,
                stage: stage as u64 + 1,
            });
            layers.push(ConvLayer {
                name: format!("{prefix}.conv2"),
                k: 3,
                c_in: c,
                c_out: c,
                n,
                stride: 1,
                stage: stage as u64 + 1,
            });
            if first_in != c {
                layers.push(ConvLayer {
                    name: format!("{prefix}.shortcut"),
                    k: 1,
                    c_in: first_in,
                    c_out: c,
                    n,
                    stride: 2,
                    stage: stage as u64 + 1,
                });
            }
        }
    }
    layers
}

/// Weights of the ResNet-20 baseline: every conv, two batch-norm parameters per
/// conv output channel, and the final linear layer.
pub fn resnet20_baseline_params() -> u64 {
    let convs = resnet20_convs();
    let conv: u64 = convs.iter().map(ConvLayer::weights).sum();
    let bn: u64 = convs.iter().map(|l| 2 * l.c_out).sum();
    let fc = 64 * CIFAR_CLASSES + CIFAR_CLASSES;
    conv + bn + fc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "paths", rename_all = "kebab-case")]
pub enum Resnet20Variant {
    Baseline,
    /// Haar-domain perceptrons with the given path count.
    Hwt(u64),
    /// Hadamard-domain perceptrons; same parameter layout as `Hwt`.
    Ht(u64),
}

/// Which convs are replaced by perceptrons.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacementPolicy {
    /// No replacement.
    None,
    /// The second 3x3 conv of every basic block (nine layers).
    #[default]
    SecondConvPerBlock,
    /// Explicit layer names from [`resnet20_convs`].
    Layers(Vec<String>),
}

impl ReplacementPolicy {
    pub fn select(&self) -> Result<Vec<ConvLayer>> {
        let convs = resnet20_convs();
        let chosen: Vec<ConvLayer> = match self {
            ReplacementPolicy::None => vec![],
            ReplacementPolicy::SecondConvPerBlock => convs
                .into_iter()
                .filter(|l| l.name.ends_with(".conv2"))
                .collect(),
            ReplacementPolicy::Layers(names) => {
                let mut out = Vec::with_capacity(names.len());
                for name in names {
                    let layer = convs
                        .iter()
                        .find(|l| &l.name == name)
                        .ok_or_else(|| Error::Model(format!("unknown ResNet-20 layer {name}")))?;
                    if out.iter().any(|l: &ConvLayer| &l.name == name) {
                        return Err(Error::Model(format!("layer {name} listed twice")));
                    }
                    out.push(layer.clone());
                }
                out
            }
        };
        if let Some(bad) = chosen.iter().find(|l| !l.replaceable()) {
            return Err(Error::Model(format!(
                "layer {} cannot be replaced (needs a stride-1 3x3 conv with c_in == c_out)",
                bad.name
            )));
        }
        Ok(chosen)
    }
}

/// Parameter count of a ResNet-20 variant. Replaced convs lose their weights
/// (batch norm stays) and gain `P (2 N² + C²)` perceptron parameters.
pub fn resnet20_params(variant: Resnet20Variant, policy: &ReplacementPolicy) -> Result<u64> {
    let base = resnet20_baseline_params();
    let paths = match variant {
        Resnet20Variant::Baseline => return Ok(base),
        Resnet20Variant::Hwt(p) | Resnet20Variant::Ht(p) => p,
    };
    if !(1..=3).contains(&paths) {
        return Err(Error::Model(format!("path count must be 1, 2 or 3, got {paths}")));
    }
    let replaced = policy.select()?;
    let removed: u64 = replaced.iter().map(ConvLayer::weights).sum();
    let added: u64 = replaced.iter().map(ConvLayer::perceptron_params_per_path).sum();
    Ok(base - removed + paths * added)
}

/// Number of replaced layers in each residual stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts(pub [u64; 3]);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyFit {
    pub counts: StageCounts,
    /// Sum of absolute differences to the targets.
    pub residual: u64,
}

/// Searches every subset of replaceable convs for those whose variant counts
/// hit `targets` (`(paths, params)` pairs). Replaceable convs of one stage are
/// interchangeable for counting, so subsets are enumerated by per-stage counts.
/// Returns all fits with the smallest residual.
pub fn search_replacement_policy(targets: &[(u64, u64)]) -> Vec<PolicyFit> {
    let replaceable: Vec<ConvLayer> = resnet20_convs().into_iter().filter(ConvLayer::replaceable).collect();
    let mut per_stage = [(0u64, 0u64, 0u64); 3];
    for l in &replaceable {
        let s = &mut per_stage[(l.stage - 1) as usize];
        s.0 += 1;
        s.1 = l.weights();
        s.2 = l.perceptron_params_per_path();
    }
    let base = resnet20_baseline_params() as i64;
    let mut best: Vec<PolicyFit> = Vec::new();
    for a in 0..=per_stage[0].0 {
        for b in 0..=per_stage[1].0 {
            for c in 0..=per_stage[2].0 {
                let counts = [a, b, c];
                let removed: u64 = (0..3).map(|i| counts[i] * per_stage[i].1).sum();
                let added: u64 = (0..3).map(|i| counts[i] * per_stage[i].2).sum();
                let residual: u64 = targets
                    .iter()
                    .map(|&(p, t)| {
                        let got = base - removed as i64 + (p * added) as i64;
                        got.abs_diff(t as i64)
                    })
                    .sum();
                match best.first().map(|f| f.residual) {
                    Some(r) if residual > r => {}
                    Some(r) if residual == r => best.push(PolicyFit {
                        counts: StageCounts(counts),
                        residual,
                    }),
                    _ => {
                        best = vec![PolicyFit {
                            counts: StageCounts(counts),
                            residual,
                        }]
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_and_three_path_macs_at_64_channels() {
        assert_eq!(macs(&LayerSpec::conv(3, 64, 1)).unwrap(), 36_864);
        assert_eq!(macs(&LayerSpec::perceptron(3, 64, 1)).unwrap(), 12_480);
        assert_eq!(macs(&LayerSpec::perceptron(3, 64, 32)).unwrap(), 12_480 * 32 * 32);
    }

    #[test]
    fn single_path_single_channel() {
        for n in [2u64, 4, 16] {
            assert_eq!(macs(&LayerSpec::perceptron(1, 1, n)).unwrap(), 2 * n * n);
        }
    }

    #[test]
    fn reduction_values() {
        let r = reduction(&LayerSpec::conv(3, 64, 8), &LayerSpec::perceptron(3, 64, 8)).unwrap();
        assert!((r - (1.0 - 12_480.0 / 36_864.0)).abs() < 1e-15);
        let a = LayerSpec::conv(3, 16, 8);
        assert_eq!(reduction(&a, &a).unwrap(), 0.0);
        assert!(reduction(&a, &LayerSpec::conv(3, 16, 4)).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(macs(&LayerSpec::conv(0, 1, 1)).is_err());
        assert!(macs(&LayerSpec::perceptron(1, 1, 6)).is_err());
        assert!(macs(&LayerSpec::Conv { k: u64::MAX, c_in: 2, c_out: 2, n: 2 }).is_err());
    }

    #[test]
    fn report_empty_and_single() {
        let r = cost_report(&[]).unwrap();
        assert_eq!((r.macs, r.params, r.baseline_macs), (0, 0, 0));
        assert_eq!(r.reduction_vs_baseline, 0.0);
        let r = cost_report(&[LayerSpec::conv(3, 8, 4)]).unwrap();
        assert_eq!(r.macs, 9 * 16 * 64);
        assert_eq!(r.reduction_vs_baseline, 0.0);
    }

    #[test]
    fn model_json() {
        let layers = parse_model(
            r#"[{"kind":"conv","k":3,"c_in":64,"c_out":64,"n":8},
                {"kind":"ht-perceptron","paths":3,"c_in":64,"c_out":64,"n":8}]"#,
        )
        .unwrap();
        assert_eq!(layers[1], LayerSpec::perceptron(3, 64, 8));
        assert!(parse_model(r#"[{"kind":"pool"}]"#).is_err());
        assert!(parse_model(r#"[{"kind":"conv","k":0,"c_in":1,"c_out":1,"n":1}]"#).is_err());
    }

    #[test]
    fn resnet20_structure() {
        let convs = resnet20_convs();
        assert_eq!(convs.iter().filter(|l| l.k == 3).count(), 19);
        assert_eq!(convs.iter().filter(|l| l.k == 1).count(), 2);
        assert_eq!(convs.iter().filter(|l| l.replaceable()).count(), 16);
    }

    #[test]
    fn zero_replacements_give_baseline() {
        for p in 1..=3 {
            assert_eq!(
                resnet20_params(Resnet20Variant::Hwt(p), &ReplacementPolicy::None).unwrap(),
                resnet20_baseline_params()
            );
        }
    }

    #[test]
    fn policy_errors() {
        let bad = ReplacementPolicy::Layers(vec!["layer2.0.conv1".into()]);
        assert!(resnet20_params(Resnet20Variant::Hwt(1), &bad).is_err());
        let unknown = ReplacementPolicy::Layers(vec!["fc".into()]);
        assert!(resnet20_params(Resnet20Variant::Hwt(1), &unknown).is_err());
        assert!(resnet20_params(Resnet20Variant::Hwt(4), &ReplacementPolicy::default()).is_err());
    }
}
