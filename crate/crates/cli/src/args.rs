use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ntd_core::{Beta, SegmentParams, SolverConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "ntd",
    version,
    about = "Nonnegative Tucker decomposition under the beta-divergence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Decompose a tensor file into W, H, Q and a core tensor.
    Decompose(DecomposeArgs),
    /// Spectrogram + bar grid -> TFB tensor -> decomposition -> boundaries.
    Pipeline(PipelineArgs),
    /// Score estimated boundaries against reference boundaries.
    Eval(EvalArgs),
    /// Time multiplicative-update iterations on seeded random data.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest into a new directory.
    Replay(ReplayArgs),
}

/// Parses `J,K,L`.
pub fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated sizes, got `{s}`"));
    }
    let mut out = [0; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = match p.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(format!("`{p}` is not a positive integer")),
        };
    }
    Ok(out)
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Beta of the divergence: 0 = Itakura-Saito, 1 = Kullback-Leibler, 2 = Euclidean.
    #[arg(long, default_value_t = 1.0, value_parser = parse_finite, allow_negative_numbers = true)]
    pub beta: f64,
    /// Core dimensions J',K',L'.
    #[arg(long, value_parser = parse_dims)]
    pub core_dims: [usize; 3],
    /// Lower bound applied to every factor and core entry.
    #[arg(long, default_value_t = 1e-12, value_parser = parse_finite)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Stop when the relative loss decrease falls below this.
    #[arg(long, default_value_t = 1e-8, value_parser = parse_finite)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluate the loss every N iterations.
    #[arg(long, default_value_t = 1)]
    pub loss_eval_period: usize,
    /// Clamp data entries to epsilon before solving (needed for beta <= 0 with zeros).
    #[arg(long)]
    pub clamp_data: bool,
}

impl SolverFlags {
    pub fn config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(Beta::new(self.beta)?, self.core_dims);
        cfg.epsilon = self.epsilon;
        cfg.max_iters = self.max_iters;
        cfg.rel_tol = self.rel_tol;
        cfg.seed = self.seed;
        cfg.loss_eval_period = self.loss_eval_period;
        cfg.clamp_data = self.clamp_data;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    /// Input tensor (ntd-t3 format).
    pub tensor: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Initial factors: a directory holding W.txt, H.txt, Q.txt and core.t3.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Feature {
    /// Mel spectrogram.
    Mel,
    /// log(Mel + 1).
    Nnlms,
}

impl Feature {
    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Mel => "mel",
            Feature::Nnlms => "nnlms",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Power spectrogram (ntd-spec format).
    pub spectrogram: PathBuf,
    /// Bar boundary times in seconds, one per line (first bar start to last bar end).
    pub bars: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, value_enum, default_value_t = Feature::Nnlms)]
    pub feature: Feature,
    /// The spectrogram is already Mel-scaled; skip the filterbank.
    #[arg(long)]
    pub premel: bool,
    #[arg(long, default_value_t = ntd_core::tfb::DEFAULT_FRAMES_PER_BAR)]
    pub frames_per_bar: usize,
    #[arg(long, default_value_t = 44100.0, value_parser = parse_finite)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 2048)]
    pub n_fft: usize,
    #[arg(long, default_value_t = 80)]
    pub n_mels: usize,
    #[arg(long, default_value_t = 80.0, value_parser = parse_finite)]
    pub f_min: f64,
    #[arg(long, default_value_t = 16000.0, value_parser = parse_finite)]
    pub f_max: f64,
    /// Half-width (in bars) of the checkerboard novelty kernel.
    #[arg(long, default_value_t = SegmentParams::default().kernel_half_width)]
    pub kernel_half_width: usize,
    /// Peaks must exceed this multiple of the mean novelty.
    #[arg(long, default_value_t = SegmentParams::default().peak_threshold, value_parser = parse_finite)]
    pub peak_threshold: f64,
    /// Peaks must exceed this absolute normalized novelty.
    #[arg(long, default_value_t = SegmentParams::default().min_contrast, value_parser = parse_finite)]
    pub min_contrast: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Estimated boundary times, one per line.
    pub estimate: PathBuf,
    /// Reference boundary times, one per line.
    pub reference: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.5,3.0", value_parser = parse_finite)]
    pub tolerances: Vec<f64>,
    /// Score the first and last boundary too (by default they are dropped).
    #[arg(long)]
    pub no_trim: bool,
    /// Directory for eval.txt and eval.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Data dimensions J,K,L.
    #[arg(long, value_parser = parse_dims, default_value = "80,96,100")]
    pub dims: [usize; 3],
    #[arg(long, value_parser = parse_dims, default_value = "32,32,32")]
    pub core_dims: [usize; 3],
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = parse_finite, allow_negative_numbers = true)]
    pub betas: Vec<f64>,
    /// Iterations timed per beta.
    #[arg(long, default_value_t = 5)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12, value_parser = parse_finite)]
    pub epsilon: f64,
    /// Also time the Kronecker-materializing reference path (small dims only).
    #[arg(long)]
    pub allow_naive: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// manifest.json of an earlier run.
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn rebase(path: &mut PathBuf, base: &Path) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose(_) => "decompose",
            Command::Pipeline(_) => "pipeline",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
            Command::Replay(_) => "replay",
        }
    }

    /// Input files named on the command line.
    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Command::Decompose(a) => std::iter::once(a.tensor.clone()).chain(a.init.clone()).collect(),
            Command::Pipeline(a) => vec![a.spectrogram.clone(), a.bars.clone()],
            Command::Eval(a) => vec![a.estimate.clone(), a.reference.clone()],
            Command::Bench(_) => vec![],
            Command::Replay(a) => vec![a.manifest.clone()],
        }
    }

    /// Resolves relative input paths against `base` and redirects output.
    pub fn retarget(&mut self, base: &Path, out: &Path) -> Result<()> {
        match self {
            Command::Decompose(a) => {
                rebase(&mut a.tensor, base);
                if let Some(init) = &mut a.init {
                    rebase(init, base);
                }
                a.out = out.to_path_buf();
            }
            Command::Pipeline(a) => {
                rebase(&mut a.spectrogram, base);
                rebase(&mut a.bars, base);
                a.out = out.to_path_buf();
            }
            Command::Eval(a) => {
                rebase(&mut a.estimate, base);
                rebase(&mut a.reference, base);
                a.out = Some(out.to_path_buf());
            }
            Command::Bench(a) => a.out = out.to_path_buf(),
            Command::Replay(_) => return Err(CliError::Argument("a manifest cannot record a replay".into())),
        }
        Ok(())
    }
}
