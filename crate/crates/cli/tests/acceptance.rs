//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p ntd --test acceptance`.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::p;
use ntd::commands::{self, BENCH_FILE, BOUNDARIES_FILE};
use ntd::formats;
use ntd_core::{
    beta_div, contracted_unfolding, evaluate_boundaries, gamma_exponent, init_factors, iterate, objective, solve,
    update_core, update_mode_factor, Beta, BoundarySet, FactorSet, Matrix, Mode, SolverConfig, Tensor3,
};
use ntd_oracle as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn config(beta: f64, core: [usize; 3], seed: u64) -> SolverConfig {
    let mut cfg = SolverConfig::new(Beta::new(beta).unwrap(), core);
    cfg.seed = seed;
    cfg
}

fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Tensor3 {
    Tensor3::from_fn(dims, |_, _, _| rng.gen_range(0.05..1.0)).unwrap()
}

fn loss(x: &Tensor3, f: &FactorSet, beta: f64) -> f64 {
    objective(x, &f.reconstruct().unwrap(), Beta::new(beta).unwrap()).unwrap()
}

const BETAS: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0];

fn monotonicity() -> Verdict {
    let start = Instant::now();
    let (dims, core) = ([12, 10, 8], [3, 3, 2]);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut violations = 0;
    for (bi, &beta) in BETAS.iter().enumerate() {
        for inst in 0..50u64 {
            let seed = 1000 * bi as u64 + inst;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_tensor(&mut rng, dims);
            let cfg = config(beta, core, seed);
            let mut f = init_factors(dims, &cfg).unwrap();
            let mut prev = loss(&x, &f, beta);
            for _ in 0..300 {
                f = iterate(&x, &f, &cfg).unwrap();
                let next = loss(&x, &f, beta);
                let rise = (next - prev) / prev;
                worst_rise = worst_rise.max(rise);
                if rise > 1e-10 {
                    violations += 1;
                }
                prev = next;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        violations == 0 && secs < 120.0,
        format!("300 instances x 300 iterations, {violations} increases beyond 1e-10, largest relative change {worst_rise:.2e}, {secs:.1} s"),
    )
}

fn kronecker_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut updates = 0;
    for inst in 0..20 {
        let dims = loop {
            let d = [rng.gen_range(1..12), rng.gen_range(1..12), rng.gen_range(1..12)];
            if d.iter().product::<usize>() <= 512 {
                break d;
            }
        };
        let core = [rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..5)];
        let beta = BETAS[inst % BETAS.len()];
        let x = random_tensor(&mut rng, dims);
        let cfg = config(beta, core, inst as u64);
        let mut f = init_factors(dims, &cfg).unwrap();
        for _ in 0..3 {
            for (n, mode) in Mode::ALL.into_iter().enumerate() {
                let ours = update_mode_factor(&x, &f, mode, &cfg).unwrap();
                let theirs = oracle::update_factor(&x, &f, n + 1, beta, cfg.epsilon);
                worst = worst.max(oracle::max_rel_err(ours.as_slice(), theirs.as_slice()));
                match mode {
                    Mode::First => f.w = theirs,
                    Mode::Second => f.h = theirs,
                    Mode::Third => f.q = theirs,
                }
                updates += 1;
            }
            let ours = update_core(&x, &f, &cfg).unwrap();
            let theirs = oracle::update_core(&x, &f, beta, cfg.epsilon);
            worst = worst.max(oracle::max_rel_err(ours.as_slice(), theirs.as_slice()));
            f.core = theirs;
            updates += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-12 && secs < 60.0,
        format!("{updates} updates on 20 instances, max relative error {worst:.2e}, {secs:.1} s"),
    )
}

fn stationarity() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut unconverged = 0;
    for seed in 0..10u64 {
        let beta = [0.0, 1.0, 2.0][seed as usize % 3];
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let x = random_tensor(&mut rng, [8, 7, 6]);
        let mut cfg = config(beta, [2, 2, 2], seed);
        cfg.rel_tol = 1e-12;
        cfg.max_iters = 200_000;
        let (f, trace) = solve(&x, &cfg, None).unwrap();
        if trace.converged_at.is_none() {
            unconverged += 1;
        }
        worst = worst.max(oracle::max_ratio_deviation(&x, &f, beta, 10.0 * cfg.epsilon));
    }
    verdict(
        worst <= 1e-3 && unconverged == 0,
        format!(
            "10 instances 8x7x6 / core 2x2x2 at rel_tol 1e-12, max |ratio - 1| {worst:.2e}, {unconverged} hit the iteration cap, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn gamma_table() -> Verdict {
    let table = [
        (-1.0, 1.0 / 3.0),
        (0.0, 1.0 / 2.0),
        (0.5, 1.0 / 1.5),
        (1.0, 1.0),
        (1.5, 1.0),
        (2.0, 1.0),
        (2.5, 1.0 / 1.5),
        (3.0, 1.0 / 2.0),
    ];
    let wrong: Vec<String> = table
        .iter()
        .filter(|(b, g)| gamma_exponent(Beta::new(*b).unwrap()) != *g)
        .map(|(b, _)| b.to_string())
        .collect();
    verdict(
        wrong.is_empty(),
        format!("8 betas checked exactly, mismatches: [{}]", wrong.join(", ")),
    )
}

fn divergence_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_homog: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    let mut failures = 0;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    for i in 0..10_000 {
        let beta = [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0][i % 8];
        let b = Beta::new(beta).unwrap();
        let x: f64 = rng.gen_range(0.01..10.0);
        let y: f64 = rng.gen_range(0.01..10.0);
        let lambda: f64 = rng.gen_range(0.1..10.0);
        let d = beta_div(x, y, b).unwrap();
        if d <= 0.0 || d.is_nan() || beta_div(x, x, b).unwrap() != 0.0 || beta_div(y, y, b).unwrap() != 0.0 {
            failures += 1;
        }
        let scaled = beta_div(lambda * x, lambda * y, b).unwrap();
        worst_homog = worst_homog.max(rel(scaled, lambda.powf(beta) * d));
        if beta == 0.0 {
            worst_scale = worst_scale.max(rel(scaled, d));
        }
    }
    verdict(
        failures == 0 && worst_homog <= 1e-10 && worst_scale <= 1e-10,
        format!(
            "10^4 pairs over 8 betas, {failures} nonnegativity/zero-iff-equal failures, homogeneity {worst_homog:.2e}, IS scale invariance {worst_scale:.2e}"
        ),
    )
}

fn planted_ratio(seed: u64, lo: f64, hi: f64) -> f64 {
    let (dims, core) = ([20, 18, 15], [4, 3, 3]);
    let planted = common::planted_factors(dims, core, seed);
    let x = planted.reconstruct().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
    let init = common::perturbed(&planted, &mut rng, lo, hi);
    let mut cfg = config(2.0, core, seed);
    cfg.max_iters = 500;
    cfg.rel_tol = 0.0;
    let (_, trace) = solve(&x, &cfg, Some(init)).unwrap();
    trace.final_loss().unwrap() / trace.losses[0]
}

fn planted_recovery() -> Verdict {
    let worst = (0..10).map(|s| planted_ratio(s, 0.0, 0.01)).fold(0.0, f64::max);
    let zero_mean = (0..10).map(|s| planted_ratio(s, -0.01, 0.01)).fold(0.0, f64::max);
    verdict(
        worst <= 1e-4,
        format!(
            "10 planted instances 20x18x15 / core 4x3x3, init x (1 + U[0, 1%)): worst final/initial loss {worst:.2e}; \
             informational, init x (1 + U[-1%, 1%)): worst {zero_mean:.2e}"
        ),
    )
}

fn bench_min_seconds(l: usize, dir: &std::path::Path) -> (f64, f64) {
    let out = dir.join(format!("bench-{l}"));
    common::run([
        "bench",
        "--dims",
        &format!("80,96,{l}"),
        "--core-dims",
        "32,32,32",
        "--betas",
        "1",
        "--iters",
        "5",
        "--out",
        &p(&out),
    ])
    .unwrap();
    let path = out.join(BENCH_FILE);
    let rows = commands::parse_bench(&path, &fs::read_to_string(&path).unwrap()).unwrap();
    (rows[0].mean_seconds, rows[0].min_seconds)
}

fn min_time(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn iteration_cost() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (mean100, min100) = bench_min_seconds(100, tmp.path());
    let (mean200, min200) = bench_min_seconds(200, tmp.path());
    let ratio = min200 / min100;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_tensor(&mut rng, [32, 32, 32]);
    let a = Matrix::from_fn(96, 32, |_, _| rng.gen_range(0.0..1.0)).unwrap();
    let b100 = Matrix::from_fn(100, 32, |_, _| rng.gen_range(0.0..1.0)).unwrap();
    let b200 = Matrix::from_fn(200, 32, |_, _| rng.gen_range(0.0..1.0)).unwrap();
    let t100 = min_time(5, || drop(contracted_unfolding(&g, &a, &b100, Mode::First).unwrap()));
    let t200 = min_time(5, || drop(contracted_unfolding(&g, &a, &b200, Mode::First).unwrap()));
    let contraction_ratio = t200.as_secs_f64() / t100.as_secs_f64();

    let within = |r: f64| (1.0..=3.0).contains(&r);
    verdict(
        mean100 <= 2.0 && within(ratio) && within(contraction_ratio),
        format!(
            "80x96x100 / core 32^3: mean {mean100:.3} s/iter (min {min100:.3}); L=200: mean {mean200:.3} (min {min200:.3}), \
             time ratio {ratio:.2}; contraction time ratio {contraction_ratio:.2}"
        ),
    )
}

fn random_boundaries(rng: &mut ChaCha8Rng) -> BoundarySet {
    let n = rng.gen_range(0..=8);
    let mut t: Vec<f64> = (0..n)
        .map(|_| (rng.gen_range(0.0..60.0_f64) * 100.0).round() / 100.0)
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    BoundarySet::new(t).unwrap()
}

fn boundary_matching() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut disagreements = 0;
    for _ in 0..10_000 {
        let est = random_boundaries(&mut rng);
        let reference = random_boundaries(&mut rng);
        for tol in [0.5, 3.0] {
            let report = evaluate_boundaries(&est, &reference, tol, false).unwrap();
            if report.hits != oracle::brute_force_hits(est.times(), reference.times(), tol) {
                disagreements += 1;
            }
        }
    }
    let mut imperfect = 0;
    for _ in 0..1000 {
        let set = random_boundaries(&mut rng);
        if set.len() < 3 {
            continue;
        }
        for tol in [0.5, 3.0] {
            for trim in [true, false] {
                if evaluate_boundaries(&set, &set, tol, trim).unwrap().f_measure != 1.0 {
                    imperfect += 1;
                }
            }
        }
    }
    verdict(
        disagreements == 0 && imperfect == 0,
        format!("10^4 pairs x 2 tolerances, {disagreements} disagreements with brute force; est = ref gave F != 1 {imperfect} times"),
    )
}

fn end_to_end_pipeline() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let layout = common::alternating_layout();
    let bars = common::bar_times(layout.len());
    let seams = [8usize, 16, 24];
    let mut good = 0;
    let mut details = Vec::new();
    for seed in 0..10u64 {
        let dir = tmp.path().join(format!("seed{seed}"));
        fs::create_dir(&dir).unwrap();
        let spec = common::patterned_spectrogram(&layout, seed);
        let (s, b) = common::write_pipeline_inputs(&dir, &spec, &bars);
        let out = dir.join("out");
        common::run([
            "pipeline",
            &p(&s),
            &p(&b),
            "--feature",
            "nnlms",
            "--beta",
            "1",
            "--core-dims",
            "4,8,2",
            "--max-iters",
            "300",
            "--seed",
            &seed.to_string(),
            "--out",
            &p(&out),
        ])
        .unwrap();
        let found = formats::read_times(&out.join(BOUNDARIES_FILE)).unwrap();
        let hit_all = seams.iter().all(|&s| {
            found
                .iter()
                .any(|t| (t - bars[s]).abs() <= common::bar_seconds() + 1e-9)
        });
        if hit_all {
            good += 1;
        }
        let as_bars: Vec<String> = found
            .iter()
            .map(|t| format!("{:.0}", t / common::bar_seconds()))
            .collect();
        details.push(format!("{}[{}]", if hit_all { "" } else { "!" }, as_bars.join(",")));
    }
    verdict(
        good >= 9,
        format!(
            "{good}/10 seeds found every seam within 1 bar; boundaries in bars: {}",
            details.join(" ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("monotone loss under multiplicative updates", monotonicity),
        (
            "updates match the explicit Kronecker formulation",
            kronecker_equivalence,
        ),
        ("converged iterates are stationary", stationarity),
        ("gamma(beta) branch table", gamma_table),
        ("beta-divergence properties", divergence_properties),
        ("planted model recovery", planted_recovery),
        ("iteration cost and linear scaling", iteration_cost),
        ("boundary evaluation matches brute-force matching", boundary_matching),
        ("end-to-end synthetic pipeline", end_to_end_pipeline),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} ({:.1} s): {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
