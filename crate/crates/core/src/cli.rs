//! Command-line front end.
//!
//! Every command reads its inputs, does all of its work in memory and writes
//! each output file once at the end. Exit codes: 0 success, 1 invalid input
//! or arguments, 2 internal or I/O failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use crate::algorithms::{
    train_model, training_samples, Algorithm, AlgorithmKind, CbSmotAlgorithm, OwsAlgorithm, SpdAlgorithm,
    WsIiAlgorithm,
};
use crate::baselines::{CbSmotParams, OwsParams, SpdParams};
use crate::error::{Error, Result};
use crate::eval::{compare, generate_synthetic, SynthSpec};
use crate::forest::{ForestParams, ModelFile, SignalSettings};
use crate::geo::KernelKind;
use crate::io;
use crate::seeds;
use crate::segment::{Segmenter, WsIi};
use crate::signal::{error_signal, DEFAULT_WINDOW};
use crate::trajectory::Trajectory;

#[derive(Parser, Debug)]
#[command(name = "wsii", version, about = "Supervised trajectory segmentation")]
pub struct Cli {
    /// Run seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate labeled synthetic trajectories.
    Synth(SynthArgs),
    /// Compute the interpolation error signal of every trajectory.
    ErrorSignal(ErrorSignalArgs),
    /// Write labeled training windows.
    MakeTraining(MakeTrainingArgs),
    /// Train a WS-II model on labeled trajectories.
    Train(TrainArgs),
    /// Segment trajectories with one algorithm.
    Segment(SegmentArgs),
    /// Run the k-fold protocol for one algorithm.
    Evaluate(EvaluateArgs),
    /// Run the k-fold protocol for several algorithms and test every pair.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 40)]
    pub min_points: usize,
    #[arg(long, default_value_t = 80)]
    pub max_points: usize,
    #[arg(long, default_value_t = 4)]
    pub min_segments: usize,
    #[arg(long, default_value_t = 8)]
    pub max_segments: usize,
    /// GPS noise standard deviation (m).
    #[arg(long, default_value_t = 5.0)]
    pub noise: f64,
    /// Directed speed (m/s).
    #[arg(long, default_value_t = 8.0)]
    pub speed: f64,
    /// Directed heading jitter per step (degrees).
    #[arg(long, default_value_t = 5.0)]
    pub jitter: f64,
    /// Wander step standard deviation per axis (m).
    #[arg(long, default_value_t = 64.0)]
    pub wander_step: f64,
    /// Sampling interval (s).
    #[arg(long, default_value_t = 10)]
    pub interval: u32,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SignalArgs {
    /// Error-signal window length (odd, >= 7).
    #[arg(long)]
    pub window: Option<usize>,
    /// Interpolation kernel: random-walk, kinematic, linear or cubic.
    #[arg(long)]
    pub kernel: Option<KernelKind>,
}

impl SignalArgs {
    fn window(&self) -> usize {
        self.window.unwrap_or(DEFAULT_WINDOW)
    }

    fn kernel(&self) -> KernelKind {
        self.kernel.unwrap_or(KernelKind::RandomWalk)
    }
}

#[derive(Args, Debug, Clone)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 2)]
    pub min_samples_leaf: usize,
    /// Features tried per split (default: ceil(sqrt(q))).
    #[arg(long)]
    pub features_per_split: Option<usize>,
    /// Positive-probability cutoff for a window to count as a split window.
    #[arg(long, default_value_t = 0.5)]
    pub decision_threshold: f64,
}

impl ForestArgs {
    fn params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
            threshold: self.decision_threshold,
            ..ForestParams::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct ErrorSignalArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
}

#[derive(Args, Debug)]
pub struct MakeTrainingArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
    /// Training window length over the error signal (odd, >= 3).
    #[arg(long, default_value_t = 7)]
    pub q: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
    #[arg(long, default_value_t = 7)]
    pub q: usize,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub algorithm: AlgorithmKind,
    /// Model file written by `train` (wsii).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub signal: SignalArgs,
    /// Classifier window length; must match the model when given (wsii).
    #[arg(long)]
    pub q: Option<usize>,
    /// Error threshold in meters (ows).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Stay-point distance threshold in meters (spd).
    #[arg(long)]
    pub theta_d: Option<f64>,
    /// Stay-point time threshold in seconds (spd).
    #[arg(long)]
    pub theta_t: Option<f64>,
    /// Neighborhood radius in meters (cbsmot).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Minimum stop duration in seconds (cbsmot).
    #[arg(long)]
    pub min_time: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    /// Labeled points file.
    #[arg(long)]
    pub input: PathBuf,
    /// Metrics report.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Optional `algorithm,fold,harmonic` table.
    #[arg(long)]
    pub fold_csv: Option<PathBuf>,
    /// Write the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub signal: SignalArgs,
    /// WS-II classifier window length.
    #[arg(long, default_value_t = 7)]
    pub q: usize,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub algorithm: AlgorithmKind,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Comma-separated list, e.g. wsii,ows,spd,cbsmot.
    #[arg(long, value_delimiter = ',', default_value = "wsii,ows,spd,cbsmot")]
    pub algorithms: Vec<AlgorithmKind>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Synth(a) => synth(a, seed),
        Command::ErrorSignal(a) => error_signals(a),
        Command::MakeTraining(a) => make_training(a),
        Command::Train(a) => train(a, seed),
        Command::Segment(a) => segment(a),
        Command::Evaluate(a) => protocol(&[a.algorithm], a.protocol, seed),
        Command::Compare(a) => protocol(&a.algorithms, a.protocol, seed),
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn load(path: &Path) -> Result<Vec<Trajectory>> {
    let trajs = io::load_trajectories(path)?;
    info!("read {} trajectories from {}", trajs.len(), path.display());
    Ok(trajs)
}

fn require_labels(trajs: &[Trajectory]) -> Result<()> {
    if trajs.is_empty() {
        return Err(Error::Empty("no trajectories in input".into()));
    }
    match trajs.iter().find(|t| t.labels().is_none()) {
        Some(t) => Err(Error::MissingLabels(t.id().to_string())),
        None => Ok(()),
    }
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let spec = SynthSpec {
        seed,
        n_trajectories: a.trajectories,
        points_per_segment: (a.min_points, a.max_points),
        segments_per_trajectory: (a.min_segments, a.max_segments),
        directed_speed_mps: a.speed,
        heading_jitter_deg: a.jitter,
        wander_step_m: a.wander_step,
        gps_noise_m: a.noise,
        sample_interval_s: a.interval,
    };
    let trajs = generate_synthetic(&spec)?;
    let mut out = Vec::new();
    io::write_trajectories(&mut out, &trajs)?;
    write_output(&a.out, &out)
}

fn error_signals(a: ErrorSignalArgs) -> Result<()> {
    let trajs = load(&a.input)?;
    let (w, kernel) = (a.signal.window(), a.signal.kernel());
    let signals = trajs
        .par_iter()
        .map(|t| error_signal(t, w, kernel))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    io::write_error_signals(&mut out, &signals)?;
    write_output(&a.out, &out)
}

fn make_training(a: MakeTrainingArgs) -> Result<()> {
    let trajs = load(&a.input)?;
    require_labels(&trajs)?;
    crate::training::check_q(a.q)?;
    crate::signal::check_window(a.signal.window())?;
    let samples = training_samples(&trajs, a.signal.window(), a.q, a.signal.kernel())?;
    let mut out = Vec::new();
    io::write_training(&mut out, &samples, a.q)?;
    write_output(&a.out, &out)
}

fn train(a: TrainArgs, seed: u64) -> Result<()> {
    let trajs = load(&a.input)?;
    require_labels(&trajs)?;
    let (w, kernel) = (a.signal.window(), a.signal.kernel());
    let model = train_model(&trajs, w, a.q, kernel, &a.forest.params(), seeds::derive(seed, "forest"))?;
    let file = ModelFile::new(SignalSettings { window: w, kernel }, model);
    write_output(&a.model_out, (file.to_json()? + "\n").as_bytes())
}

fn required(value: Option<f64>, flag: &str, algorithm: AlgorithmKind) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for --algorithm {algorithm}")))
}

fn wsii_from_model(a: &SegmentArgs) -> Result<WsIi> {
    let path = a
        .model
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("--model is required for --algorithm wsii".into()))?;
    let file = ModelFile::load(path)?;
    let (w, kernel, q) = (file.signal.window, file.signal.kernel, file.model.q);
    if let Some(flag) = a.q.filter(|&v| v != q) {
        return Err(Error::WindowMismatch(format!("--q {flag} but the model was trained with q = {q}")));
    }
    if let Some(flag) = a.signal.window.filter(|&v| v != w) {
        return Err(Error::WindowMismatch(format!(
            "--window {flag} but the model was trained with window = {w}"
        )));
    }
    if let Some(flag) = a.signal.kernel.filter(|&k| k != kernel) {
        return Err(Error::InvalidParameter(format!(
            "--kernel {flag} but the model was trained with kernel = {kernel}"
        )));
    }
    WsIi::new(file.model, w, q, kernel)
}

fn segment(a: SegmentArgs) -> Result<()> {
    let segmenter: Box<dyn Segmenter> = match a.algorithm {
        AlgorithmKind::WsIi => Box::new(wsii_from_model(&a)?),
        AlgorithmKind::Ows => Box::new(OwsParams::new(
            a.signal.window(),
            a.signal.kernel(),
            required(a.epsilon, "epsilon", a.algorithm)?,
        )?),
        AlgorithmKind::Spd => Box::new(SpdParams::new(
            required(a.theta_d, "theta-d", a.algorithm)?,
            required(a.theta_t, "theta-t", a.algorithm)?,
        )?),
        AlgorithmKind::CbSmot => Box::new(CbSmotParams::new(
            required(a.eps, "eps", a.algorithm)?,
            required(a.min_time, "min-time", a.algorithm)?,
        )?),
    };
    let trajs = load(&a.input)?;
    let results = trajs
        .par_iter()
        .map(|t| Ok((segmenter.segment(t)?, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    io::write_segments(&mut out, &results)?;
    write_output(&a.out, &out)
}

fn build_algorithm(kind: AlgorithmKind, p: &ProtocolArgs) -> Box<dyn Algorithm> {
    let (window, kernel) = (p.signal.window(), p.signal.kernel());
    match kind {
        AlgorithmKind::WsIi => Box::new(WsIiAlgorithm {
            window,
            q: p.q,
            kernel,
            forest: p.forest.params(),
        }),
        AlgorithmKind::Ows => Box::new(OwsAlgorithm { window, kernel }),
        AlgorithmKind::Spd => Box::new(SpdAlgorithm),
        AlgorithmKind::CbSmot => Box::new(CbSmotAlgorithm),
    }
}

fn protocol(kinds: &[AlgorithmKind], p: ProtocolArgs, seed: u64) -> Result<()> {
    if kinds.is_empty() {
        return Err(Error::InvalidParameter("no algorithms selected".into()));
    }
    for (i, k) in kinds.iter().enumerate() {
        if kinds[..i].contains(k) {
            return Err(Error::InvalidParameter(format!("algorithm '{k}' listed twice")));
        }
    }
    crate::signal::check_window(p.signal.window())?;
    crate::training::check_q(p.q)?;
    let trajs = load(&p.input)?;
    require_labels(&trajs)?;

    let algorithms: Vec<Box<dyn Algorithm>> = kinds.iter().map(|&k| build_algorithm(k, &p)).collect();
    let refs: Vec<&dyn Algorithm> = algorithms.iter().map(|a| a.as_ref()).collect();
    let report = compare(&trajs, &refs, p.folds, seed)?;
    for a in &report.algorithms {
        info!("{}: mean harmonic {:.4} (std {:.4})", a.algorithm, a.mean, a.std);
    }

    let text = if p.json { report.to_json()? } else { report.to_text() };
    let fold_csv = p.fold_csv.as_ref().map(|path| (path, report.fold_csv()));
    write_output(&p.out, text.as_bytes())?;
    if let Some((path, csv)) = fold_csv {
        write_output(path, csv.as_bytes())?;
    }
    Ok(())
}
