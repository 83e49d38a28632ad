//! `hwt` command-line interface. Each subcommand maps onto one library
//! operation; matrices are CSV, reports are JSON, loss traces are CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::costs::{self, LayerSpec, ReplacementPolicy, Resnet20Variant};
use crate::haar::{self, HaarPlan, Variant};
use crate::io::{format_f64, matrix_to_csv, read_matrix, write_atomic};
use crate::layer::{stripes_dataset, train_toy, ToyConfig};
use crate::qsim::{self, NoiseSweepPoint, Pauli, PauliChoice, RunMode};
use crate::{Error, Matrix, Result};

/// Environment variable that overrides the default `--seed`.
pub const SEED_ENV: &str = "HWT_SEED";

#[derive(Debug, Parser)]
#[command(name = "hwt", version, about = "Haar wavelet transforms, the quantum Haar circuit and layer cost model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward or inverse Haar transform of a CSV matrix (one row = 1D signal).
    Transform(TransformArgs),
    /// Run a 4x4 patch through the gate-level Haar circuit.
    Quantum(QuantumArgs),
    /// Mean squared error between two CSV matrices.
    Mse(MseArgs),
    /// Pauli-noise sweep of the Haar circuit.
    Noise(NoiseArgs),
    /// MAC / parameter cost report.
    Cost(CostArgs),
    /// Train the layer on the synthetic stripes task and emit the loss trace.
    TrainDemo(TrainArgs),
    /// Export the Haar circuit as a JSON gate list.
    Circuit(OutputArg),
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Orthonormal,
    Integer,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Orthonormal => Variant::Orthonormal,
            VariantArg::Integer => Variant::IntegerAddSub,
        }
    }
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub inverse: bool,
    /// Decomposition depth; full depth when omitted.
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long, value_enum, default_value = "orthonormal")]
    pub variant: VariantArg,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Shots,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    /// 4x4 patch as CSV or JSON array of arrays.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = qsim::DEFAULT_SHOTS)]
    pub shots: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct MseArgs {
    pub q: PathBuf,
    pub c: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PauliArg {
    Uniform,
    X,
    Y,
    Z,
}

impl From<PauliArg> for PauliChoice {
    fn from(p: PauliArg) -> Self {
        match p {
            PauliArg::Uniform => PauliChoice::Uniform,
            PauliArg::X => PauliChoice::Fixed(Pauli::X),
            PauliArg::Y => PauliChoice::Fixed(Pauli::Y),
            PauliArg::Z => PauliChoice::Fixed(Pauli::Z),
        }
    }
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    pub input: PathBuf,
    /// Comma-separated per-qubit error probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.05,0.1")]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub pauli: PauliArg,
    /// Also inject noise after every gate.
    #[arg(long)]
    pub per_gate: bool,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ResnetArg {
    Baseline,
    Hwt,
    Ht,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolicyArg {
    SecondConv,
    None,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// JSON list of layer specs.
    pub model: Option<PathBuf>,
    /// Report ResNet-20 parameter counts instead of a model file.
    #[arg(long, value_enum, conflicts_with_all = ["model", "table"])]
    pub resnet20: Option<ResnetArg>,
    /// Emit the MAC table for `--channels`, `--size`, `--paths`, `--kernel`.
    #[arg(long, conflicts_with = "model")]
    pub table: bool,
    #[arg(long, default_value_t = 3)]
    pub paths: u64,
    #[arg(long, default_value_t = 64)]
    pub channels: u64,
    #[arg(long, default_value_t = 32)]
    pub size: u64,
    #[arg(long, default_value_t = 3)]
    pub kernel: u64,
    #[arg(long, value_enum, default_value = "second-conv")]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[command(flatten)]
    pub out: OutputArg,
}

fn emit(out: &OutputArg, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn plan_for(n: usize, levels: Option<u32>, variant: Variant) -> Result<HaarPlan> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Size(format!("dimension {n} is not a power of two >= 2")));
    }
    HaarPlan::new(n, levels.unwrap_or(n.trailing_zeros()), variant)
}

pub fn cmd_transform(args: &TransformArgs) -> Result<String> {
    let m = read_matrix(&args.input)?;
    let variant = args.variant.into();
    let result = if m.rows() == 1 {
        let plan = plan_for(m.cols(), args.levels, variant)?;
        let v = if args.inverse {
            haar::idwt1d(m.as_slice(), &plan)?
        } else {
            haar::dwt1d(m.as_slice(), &plan)?
        };
        Matrix::from_vec(1, v.len(), v)?
    } else {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "2D input must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let plan = plan_for(m.rows(), args.levels, variant)?;
        if args.inverse {
            haar::idwt2d(&m, &plan)?
        } else {
            haar::dwt2d(&m, &plan)?
        }
    };
    Ok(matrix_to_csv(&result))
}

#[derive(Debug, Serialize)]
pub struct QuantumReport {
    pub mode: qsim::MeasurementMode,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub norm: f64,
    /// Row-major 4x4 coefficients.
    pub coefficients: Vec<f64>,
    /// Against signed classical coefficients.
    pub mse_vs_classical: f64,
    /// Against magnitudes of the classical coefficients.
    pub mse_vs_classical_magnitude: f64,
    pub eps_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

pub fn quantum_report(patch: &Matrix, mode: &RunMode) -> Result<QuantumReport> {
    let run = qsim::run_2d_haar_quantum_detailed(patch, mode)?;
    let classical = haar::dwt2d(patch, &HaarPlan::full(4)?)?;
    let magnitude = Matrix::from_vec(4, 4, classical.as_slice().iter().map(|v| v.abs()).collect())?;
    let (shots, seed, counts) = match *mode {
        RunMode::Exact => (None, None, None),
        RunMode::Shots { shots, seed } => (Some(shots), Some(seed), Some(run.measurement.counts.clone())),
    };
    Ok(QuantumReport {
        mode: run.measurement.mode,
        shots,
        seed,
        norm: run.norm,
        coefficients: run.coefficients.as_slice().to_vec(),
        mse_vs_classical: qsim::mse(&run.coefficients, &classical)?,
        mse_vs_classical_magnitude: qsim::mse(&run.coefficients, &magnitude)?,
        eps_max: qsim::max_abs_error(&classical, &run.coefficients)?,
        counts,
    })
}

pub fn cmd_quantum(args: &QuantumArgs) -> Result<String> {
    let patch = read_matrix(&args.input)?;
    let mode = match args.mode {
        ModeArg::Exact => RunMode::Exact,
        ModeArg::Shots => RunMode::Shots {
            shots: args.shots,
            seed: args.seed,
        },
    };
    to_json(&quantum_report(&patch, &mode)?)
}

pub fn cmd_mse(args: &MseArgs) -> Result<String> {
    let q = read_matrix(&args.q)?;
    let c = read_matrix(&args.c)?;
    #[derive(Serialize)]
    struct Out {
        mse: f64,
    }
    to_json(&Out { mse: qsim::mse(&q, &c)? })
}

#[derive(Debug, Serialize)]
pub struct NoiseReport {
    pub seed: u64,
    pub trials: usize,
    pub pauli: PauliChoice,
    pub per_gate: bool,
    pub points: Vec<NoiseSweepPoint>,
}

pub fn cmd_noise(args: &NoiseArgs) -> Result<String> {
    let patch = read_matrix(&args.input)?;
    if args.p.is_empty() {
        return Err(Error::Parameter("no error probabilities given".into()));
    }
    let choice = args.pauli.into();
    let points = qsim::noise_sweep(&patch, &args.p, args.trials, args.seed, choice, args.per_gate)?;
    to_json(&NoiseReport {
        seed: args.seed,
        trials: args.trials,
        pauli: choice,
        per_gate: args.per_gate,
        points,
    })
}

#[derive(Debug, Serialize)]
pub struct ResnetReport {
    pub variant: Resnet20Variant,
    pub policy: ReplacementPolicy,
    pub params: u64,
    pub baseline_params: u64,
    pub reduction_vs_baseline: f64,
}

#[derive(Debug, Serialize)]
pub struct TableReport {
    pub channels: u64,
    pub size: u64,
    pub rows: Vec<costs::MacTableRow>,
    /// `P`-path perceptron versus `K x K` conv.
    pub reduction: f64,
}

pub fn cmd_cost(args: &CostArgs) -> Result<String> {
    if let Some(which) = args.resnet20 {
        let policy = match args.policy {
            PolicyArg::SecondConv => ReplacementPolicy::SecondConvPerBlock,
            PolicyArg::None => ReplacementPolicy::None,
        };
        let variant = match which {
            ResnetArg::Baseline => Resnet20Variant::Baseline,
            ResnetArg::Hwt => Resnet20Variant::Hwt(args.paths),
            ResnetArg::Ht => Resnet20Variant::Ht(args.paths),
        };
        let params = costs::resnet20_params(variant, &policy)?;
        let baseline = costs::resnet20_baseline_params();
        return to_json(&ResnetReport {
            variant,
            policy,
            params,
            baseline_params: baseline,
            reduction_vs_baseline: 1.0 - params as f64 / baseline as f64,
        });
    }
    if args.table {
        let rows = costs::mac_table(args.kernel, args.paths, args.channels, args.size)?;
        let reduction = costs::reduction(
            &LayerSpec::conv(args.kernel, args.channels, args.size),
            &LayerSpec::perceptron(args.paths, args.channels, args.size),
        )?;
        return to_json(&TableReport {
            channels: args.channels,
            size: args.size,
            rows,
            reduction,
        });
    }
    let path = args
        .model
        .as_deref()
        .ok_or_else(|| Error::Model("give a model file, --table or --resnet20".into()))?;
    let layers = costs::parse_model(&std::fs::read_to_string(path)?)?;
    to_json(&costs::cost_report(&layers)?)
}

/// Runs the stripes demo; returns the CSV trace and a one-line summary.
pub fn cmd_train_demo(args: &TrainArgs) -> Result<(String, String)> {
    if args.samples < 2 {
        return Err(Error::Parameter("need at least two samples".into()));
    }
    let data = stripes_dataset(args.samples, 8, args.seed);
    let config = ToyConfig {
        epochs: args.epochs,
        lr: args.lr,
        seed: args.seed,
        ..ToyConfig::default()
    };
    let report = train_toy(&data, &config)?;
    let mut csv = String::from("epoch,loss,accuracy\n");
    for s in &report.trace {
        csv.push_str(&format!("{},{},{}\n", s.epoch, format_f64(s.loss), format_f64(s.accuracy)));
    }
    let last = report.final_stats();
    let summary = format!(
        "epochs={} initial_loss={:.6} final_loss={:.6} final_accuracy={:.4}",
        report.trace.len(),
        report.initial.loss,
        last.loss,
        last.accuracy
    );
    Ok((csv, summary))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Transform(a) => emit(&a.out, &cmd_transform(a)?),
        Command::Quantum(a) => emit(&a.out, &cmd_quantum(a)?),
        Command::Mse(a) => emit(&OutputArg { output: None }, &cmd_mse(a)?),
        Command::Noise(a) => emit(&a.out, &cmd_noise(a)?),
        Command::Cost(a) => emit(&a.out, &cmd_cost(a)?),
        Command::TrainDemo(a) => {
            let (csv, summary) = cmd_train_demo(a)?;
            emit(&a.out, &csv)?;
            eprintln!("{summary}");
            Ok(())
        }
        Command::Circuit(out) => emit(out, &to_json(&qsim::haar_circuit())?),
    }
}
