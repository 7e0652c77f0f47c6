use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ntd_core::{
    apply_mel, bar_autosimilarity, bars_to_seconds, build_tfb, evaluate_boundaries, init_factors, mel_filterbank,
    nnlms, segment_bars, solve_timed, BarGrid, Beta, BoundarySet, FactorSet, LossTrace, SegmentParams, SolverConfig,
    Tensor3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{BenchArgs, DecomposeArgs, EvalArgs, Feature, PipelineArgs};
use crate::clock::InstantClock;
use crate::error::{CliError, Result};
use crate::formats::{self, EvalRecord};
use crate::manifest::ConfigRecord;
use crate::naive;

pub const W_FILE: &str = "W.txt";
pub const H_FILE: &str = "H.txt";
pub const Q_FILE: &str = "Q.txt";
pub const CORE_FILE: &str = "core.t3";
pub const LOSS_FILE: &str = "loss.txt";
pub const TFB_FILE: &str = "tfb.t3";
pub const BOUNDARIES_FILE: &str = "boundaries.txt";
pub const EVAL_TEXT_FILE: &str = "eval.txt";
pub const EVAL_JSON_FILE: &str = "eval.json";
pub const BENCH_FILE: &str = "bench.tsv";

/// What a command produced, besides its files.
pub(crate) struct Report {
    pub summary: String,
    pub config: Option<ConfigRecord>,
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn read_factors(dir: &Path) -> Result<FactorSet> {
    let w = formats::read_matrix(&dir.join(W_FILE))?;
    let h = formats::read_matrix(&dir.join(H_FILE))?;
    let q = formats::read_matrix(&dir.join(Q_FILE))?;
    let core = formats::read_tensor(&dir.join(CORE_FILE))?;
    Ok(FactorSet::new(w, h, q, core)?)
}

pub fn write_factors(dir: &Path, f: &FactorSet) -> Result<()> {
    formats::write_matrix(&dir.join(W_FILE), &f.w)?;
    formats::write_matrix(&dir.join(H_FILE), &f.h)?;
    formats::write_matrix(&dir.join(Q_FILE), &f.q)?;
    formats::write_tensor(&dir.join(CORE_FILE), &f.core)
}

fn write_solution(dir: &Path, f: &FactorSet, trace: &LossTrace) -> Result<()> {
    write_factors(dir, f)?;
    formats::write_text(&dir.join(LOSS_FILE), &formats::loss_trace_to_string(trace))
}

fn describe_trace(trace: &LossTrace) -> String {
    let initial = trace.losses.first().copied().unwrap_or(f64::NAN);
    let last = trace.final_loss().unwrap_or(f64::NAN);
    let stop = match trace.converged_at {
        Some(it) => format!("converged at iteration {it}"),
        None => format!("stopped after {} iterations", trace.iterations()),
    };
    format!("loss {initial:e} -> {last:e}, {stop}")
}

pub(crate) fn decompose(args: &DecomposeArgs) -> Result<Report> {
    let cfg = args.solver.config()?;
    let x = formats::read_tensor(&args.tensor)?;
    let init = args.init.as_deref().map(read_factors).transpose()?;
    ensure_dir(&args.out)?;
    let (f, trace) = solve_timed(&x, &cfg, init, &mut InstantClock::default())?;
    write_solution(&args.out, &f, &trace)?;
    Ok(Report {
        summary: describe_trace(&trace),
        config: Some((&cfg).into()),
    })
}

/// Shrinks the kernel to fit short tracks; `None` if nothing fits.
fn fitted_params(args: &PipelineArgs, bars: usize) -> Option<SegmentParams> {
    let w = args.kernel_half_width.min(bars / 2);
    (w > 0).then_some(SegmentParams {
        kernel_half_width: w,
        peak_threshold: args.peak_threshold,
        min_contrast: args.min_contrast,
    })
}

pub(crate) fn pipeline(args: &PipelineArgs) -> Result<Report> {
    if args.kernel_half_width == 0 {
        return Err(CliError::Argument("--kernel-half-width must be positive".into()));
    }
    let cfg = args.solver.config()?;
    let spec = formats::read_spectrogram(&args.spectrogram)?;
    let bars = BarGrid::new(formats::read_times(&args.bars)?)?;

    let mel = if args.premel {
        spec
    } else {
        let bank = mel_filterbank(args.n_mels, args.f_min, args.f_max, args.sample_rate, args.n_fft)?;
        apply_mel(&spec, &bank)?
    };
    let feature = match args.feature {
        Feature::Mel => mel,
        Feature::Nnlms => nnlms(&mel)?,
    };
    let tfb = build_tfb(&feature, &bars, args.frames_per_bar)?;
    if tfb.as_slice().iter().all(|&v| v == 0.0) {
        return Err(CliError::Argument(format!(
            "the {} TFB tensor is all zeros; the decomposition would only fit the epsilon floor",
            args.feature.as_str()
        )));
    }

    ensure_dir(&args.out)?;
    formats::write_tensor(&args.out.join(TFB_FILE), &tfb)?;
    let (f, trace) = solve_timed(&tfb, &cfg, None, &mut InstantClock::default())?;
    write_solution(&args.out, &f, &trace)?;

    let n_bars = bars.bar_count();
    let indices = match fitted_params(args, n_bars) {
        Some(params) => segment_bars(&bar_autosimilarity(&f.q), &params)?,
        None => vec![0, n_bars],
    };
    let boundaries = bars_to_seconds(&indices, &bars)?;
    formats::write_times(&args.out.join(BOUNDARIES_FILE), boundaries.times())?;

    let listed: Vec<String> = boundaries.times().iter().map(|t| format!("{t}")).collect();
    Ok(Report {
        summary: format!("{}\nboundaries (s): {}", describe_trace(&trace), listed.join(" ")),
        config: Some((&cfg).into()),
    })
}

pub(crate) fn eval(args: &EvalArgs) -> Result<Report> {
    if args.tolerances.is_empty() || args.tolerances.iter().any(|&t| t < 0.0) {
        return Err(CliError::Argument(
            "tolerances must be a nonempty list of values >= 0".into(),
        ));
    }
    let est = BoundarySet::new(formats::read_times(&args.estimate)?)?;
    let reference = BoundarySet::new(formats::read_times(&args.reference)?)?;

    let mut records = Vec::new();
    let mut summary = String::new();
    for &tol in &args.tolerances {
        let report = evaluate_boundaries(&est, &reference, tol, !args.no_trim)?;
        let rec = EvalRecord::from(&report);
        write!(
            summary,
            "tolerance {tol}: P={:.4} R={:.4} F={:.4} ({} hits, {} est, {} ref)",
            rec.precision, rec.recall, rec.f_measure, rec.hits, rec.est_count, rec.ref_count
        )
        .unwrap();
        if let Some(w) = &rec.warning {
            write!(summary, " warning={w}").unwrap();
        }
        summary.push('\n');
        records.push(rec);
    }

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let text: Vec<String> = records.iter().map(EvalRecord::to_key_values).collect();
        formats::write_text(&out.join(EVAL_TEXT_FILE), &text.join("\n"))?;
        let json = serde_json::to_string_pretty(&records).expect("eval records serialize");
        formats::write_text(&out.join(EVAL_JSON_FILE), &(json + "\n"))?;
    }
    summary.pop();
    Ok(Report { summary, config: None })
}

/// Seeded random data for benchmarking, uniform on `[0.05, 1)`.
pub fn bench_data(dims: [usize; 3], seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_fn(dims, |_, _, _| rng.gen_range(0.05..1.0)).expect("dims are positive")
}

/// One row of `bench.tsv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub beta: f64,
    pub path: String,
    pub iters: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub final_loss: f64,
    /// Largest relative difference from the efficient path's per-iteration
    /// losses; only present on naive rows.
    pub max_loss_rel_diff: Option<f64>,
}

pub const BENCH_HEADER: &str = "beta\tpath\tdims\tcore_dims\titers\tmean_s\tmin_s\tfinal_loss\tmax_loss_rel_diff";

fn stats(times: &[Duration]) -> (f64, f64) {
    let secs: Vec<f64> = times.iter().map(Duration::as_secs_f64).collect();
    let mean = secs.iter().sum::<f64>() / secs.len().max(1) as f64;
    (mean, secs.iter().copied().fold(f64::INFINITY, f64::min))
}

fn join_dims(d: [usize; 3]) -> String {
    format!("{},{},{}", d[0], d[1], d[2])
}

/// Parses the rows of a `bench.tsv` file.
pub fn parse_bench(path: &Path, text: &str) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || CliError::parse(path, i + 1, "malformed bench row");
        if f.len() != 9 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        rows.push(BenchRow {
            beta: num(f[0])?,
            path: f[1].to_string(),
            iters: f[4].parse().map_err(|_| bad())?,
            mean_seconds: num(f[5])?,
            min_seconds: num(f[6])?,
            final_loss: num(f[7])?,
            max_loss_rel_diff: if f[8] == "-" { None } else { Some(num(f[8])?) },
        });
    }
    Ok(rows)
}

pub(crate) fn bench(args: &BenchArgs) -> Result<Report> {
    if args.iters == 0 {
        return Err(CliError::Argument("--iters must be at least 1".into()));
    }
    if args.betas.is_empty() {
        return Err(CliError::Argument("--betas must list at least one value".into()));
    }
    if args.allow_naive {
        naive::check_size(args.dims, args.core_dims)?;
    }
    let x = bench_data(args.dims, args.seed);
    let mut table = String::from(BENCH_HEADER);
    table.push('\n');
    let mut summary = String::new();

    for &b in &args.betas {
        let mut cfg = SolverConfig::new(Beta::new(b)?, args.core_dims);
        cfg.epsilon = args.epsilon;
        cfg.seed = args.seed;
        cfg.max_iters = args.iters;
        cfg.rel_tol = 0.0;
        let init = init_factors(x.dims(), &cfg)?;
        let (_, trace) = solve_timed(&x, &cfg, Some(init.clone()), &mut InstantClock::default())?;
        let (mean, min) = stats(&trace.iter_times);
        let mut rows = vec![BenchRow {
            beta: b,
            path: "efficient".into(),
            iters: trace.iterations(),
            mean_seconds: mean,
            min_seconds: min,
            final_loss: trace.final_loss().unwrap_or(f64::NAN),
            max_loss_rel_diff: None,
        }];

        if args.allow_naive {
            let (losses, times) = naive::run(&x, init, &cfg, trace.iterations())?;
            let diff = trace
                .losses
                .iter()
                .zip(&losses)
                .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            let (mean, min) = stats(&times);
            rows.push(BenchRow {
                beta: b,
                path: "naive".into(),
                iters: times.len(),
                mean_seconds: mean,
                min_seconds: min,
                final_loss: *losses.last().unwrap(),
                max_loss_rel_diff: Some(diff),
            });
        }

        for r in rows {
            let diff = r.max_loss_rel_diff.map_or("-".to_string(), |d| format!("{d:e}"));
            writeln!(
                table,
                "{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}\t{:e}\t{diff}",
                r.beta,
                r.path,
                join_dims(args.dims),
                join_dims(args.core_dims),
                r.iters,
                r.mean_seconds,
                r.min_seconds,
                r.final_loss
            )
            .unwrap();
            writeln!(
                summary,
                "beta {} {}: mean {:.4} s/iter, min {:.4} s over {} iterations{}",
                r.beta,
                r.path,
                r.mean_seconds,
                r.min_seconds,
                r.iters,
                r.max_loss_rel_diff
                    .map_or(String::new(), |d| format!(", loss rel diff {d:.2e}"))
            )
            .unwrap();
        }
    }

    ensure_dir(&args.out)?;
    formats::write_text(&args.out.join(BENCH_FILE), &table)?;
    summary.pop();
    Ok(Report { summary, config: None })
}

pub(crate) fn elapsed_seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

pub(crate) fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}
