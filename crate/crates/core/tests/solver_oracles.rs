use ntd_core::{
    init_factors, iterate, objective, solve, update_core, update_mode_factor, Beta, Elementwise, FactorSet, Matrix,
    Mode, NtdError, SolverConfig, Tensor3,
};
use ntd_oracle as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-12;

fn config(beta: f64, core: [usize; 3]) -> SolverConfig {
    SolverConfig::new(Beta::new(beta).unwrap(), core)
}

fn random_data(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Tensor3 {
    Tensor3::from_fn(dims, |_, _, _| rng.gen_range(0.05..1.0)).unwrap()
}

fn random_factors(rng: &mut ChaCha8Rng, dims: [usize; 3], core: [usize; 3]) -> FactorSet {
    let mut cfg = config(1.0, core);
    cfg.seed = rng.gen();
    init_factors(dims, &cfg).unwrap()
}

fn loss(x: &Tensor3, f: &FactorSet, beta: f64) -> f64 {
    objective(x, &f.reconstruct().unwrap(), Beta::new(beta).unwrap()).unwrap()
}

#[test]
fn init_is_seeded_and_clamped() {
    let mut cfg = config(1.0, [3, 2, 2]);
    cfg.seed = 42;
    let a = init_factors([6, 5, 4], &cfg).unwrap();
    let b = init_factors([6, 5, 4], &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.min_entry() >= cfg.epsilon);
    cfg.seed = 43;
    assert_ne!(a, init_factors([6, 5, 4], &cfg).unwrap());
}

#[test]
fn exact_fit_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for beta in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let f = random_factors(&mut rng, [6, 5, 4], [2, 3, 2]);
        let x = f.reconstruct().unwrap();
        let cfg = config(beta, [2, 3, 2]);
        for mode in Mode::ALL {
            let u = update_mode_factor(&x, &f, mode, &cfg).unwrap();
            assert!(
                oracle::max_rel_err(u.as_slice(), f.factor(mode).as_slice()) <= 1e-12,
                "beta {beta}"
            );
        }
        let g = update_core(&x, &f, &cfg).unwrap();
        assert!(oracle::max_rel_err(g.as_slice(), f.core.as_slice()) <= 1e-12);
        let next = iterate(&x, &f, &cfg).unwrap();
        assert!(oracle::max_rel_err(next.w.as_slice(), f.w.as_slice()) <= 1e-12);
        assert!(oracle::max_rel_err(next.core.as_slice(), f.core.as_slice()) <= 1e-12);
    }
}

#[test]
fn rank_one_step_matches_scalar_nmf_rule() {
    // 2x2x1 data, 1x1x1 core, beta = 2: the W update is the rank-one NMF rule
    // w_j <- w_j * (sum_k x_jk v_k) / (w_j * sum_k v_k^2), v_k = g h_k q.
    let x = Tensor3::new([2, 2, 1], vec![0.9, 0.2, 0.4, 0.7]).unwrap();
    let (w, h, q, g) = ([0.3, 0.8], [0.5, 0.6], 0.9, 1.2);
    let f = FactorSet::new(
        Matrix::new(2, 1, w.to_vec()).unwrap(),
        Matrix::new(2, 1, h.to_vec()).unwrap(),
        Matrix::new(1, 1, vec![q]).unwrap(),
        Tensor3::new([1, 1, 1], vec![g]).unwrap(),
    )
    .unwrap();
    let cfg = config(2.0, [1, 1, 1]);
    let v = [g * h[0] * q, g * h[1] * q];
    let xs = [[0.9, 0.2], [0.4, 0.7]];
    let updated = update_mode_factor(&x, &f, Mode::First, &cfg).unwrap();
    for j in 0..2 {
        let num = xs[j][0] * v[0] + xs[j][1] * v[1];
        let den = w[j] * (v[0] * v[0] + v[1] * v[1]);
        let expect = w[j] * num / den;
        assert!((updated.get(j, 0) - expect).abs() <= 1e-14);
    }
}

#[test]
fn scalar_core_update() {
    let (x, w, h, q, g) = (2.0, 0.5, 3.0, 0.25, 0.7);
    let one = |v| Matrix::new(1, 1, vec![v]).unwrap();
    let f = FactorSet::new(one(w), one(h), one(q), Tensor3::new([1, 1, 1], vec![g]).unwrap()).unwrap();
    let data = Tensor3::new([1, 1, 1], vec![x]).unwrap();
    let out = update_core(&data, &f, &config(2.0, [1, 1, 1])).unwrap();
    // g * (x whq) / (g whq * whq) = x / whq
    let expect = x / (w * h * q);
    assert!((out.get(0, 0, 0) - expect).abs() <= 1e-14 * expect);
}

#[test]
fn single_updates_never_increase_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for trial in 0..500 {
        let beta = [0.0, 1.0, 2.0][trial % 3];
        let x = random_data(&mut rng, [6, 5, 4]);
        let mut f = random_factors(&mut rng, [6, 5, 4], [3, 2, 2]);
        let cfg = config(beta, [3, 2, 2]);
        let before = loss(&x, &f, beta);
        match trial % 4 {
            0 => f.w = update_mode_factor(&x, &f, Mode::First, &cfg).unwrap(),
            1 => f.h = update_mode_factor(&x, &f, Mode::Second, &cfg).unwrap(),
            2 => f.q = update_mode_factor(&x, &f, Mode::Third, &cfg).unwrap(),
            _ => f.core = update_core(&x, &f, &cfg).unwrap(),
        }
        let after = loss(&x, &f, beta);
        assert!(
            after <= before * (1.0 + 1e-12),
            "trial {trial} beta {beta}: {before} -> {after}"
        );
        assert!(f.min_entry() >= EPS);
    }
}

#[test]
fn updates_match_kronecker_formulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    // the 3x3x3 data / 2x2x2 core instance, then random small ones
    let mut cases = vec![([3, 3, 3], [2, 2, 2])];
    for _ in 0..10 {
        cases.push((
            [rng.gen_range(2..8), rng.gen_range(2..8), rng.gen_range(2..8)],
            [rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4)],
        ));
    }
    for (dims, core) in cases {
        for beta in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let x = random_data(&mut rng, dims);
            let f = random_factors(&mut rng, dims, core);
            let cfg = config(beta, core);
            for (n, mode) in Mode::ALL.into_iter().enumerate() {
                let ours = update_mode_factor(&x, &f, mode, &cfg).unwrap();
                let theirs = oracle::update_factor(&x, &f, n + 1, beta, EPS);
                assert!(oracle::max_rel_err(ours.as_slice(), theirs.as_slice()) <= 1e-12);
            }
            let ours = update_core(&x, &f, &cfg).unwrap();
            let theirs = oracle::update_core(&x, &f, beta, EPS);
            assert!(oracle::max_rel_err(ours.as_slice(), theirs.as_slice()) <= 1e-12);
        }
    }
}

#[test]
fn full_iterations_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for trial in 0..200 {
        for beta in [0.0, 1.0, 2.0] {
            let x = random_data(&mut rng, [6, 5, 4]);
            let f = random_factors(&mut rng, [6, 5, 4], [2, 2, 3]);
            let cfg = config(beta, [2, 2, 3]);
            let next = iterate(&x, &f, &cfg).unwrap();
            let (before, after) = (loss(&x, &f, beta), loss(&x, &next, beta));
            assert!(after <= before * (1.0 + 1e-10), "trial {trial} beta {beta}");
        }
    }
}

#[test]
fn euclidean_solve_tracks_the_kronecker_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..5 {
        let dims = [rng.gen_range(3..9), rng.gen_range(3..9), rng.gen_range(3..8)];
        let x = random_data(&mut rng, dims);
        let mut cfg = config(2.0, [2, 2, 2]);
        cfg.seed = rng.gen();
        cfg.max_iters = 1;
        cfg.rel_tol = 0.0;
        let mut ours = init_factors(dims, &cfg).unwrap();
        let mut theirs = ours.clone();
        for _ in 0..25 {
            ours = solve(&x, &cfg, Some(ours)).unwrap().0;
            theirs = oracle::iterate(&x, &theirs, 2.0, EPS);
            for (a, b) in [
                (ours.w.as_slice(), theirs.w.as_slice()),
                (ours.h.as_slice(), theirs.h.as_slice()),
                (ours.q.as_slice(), theirs.q.as_slice()),
                (ours.core.as_slice(), theirs.core.as_slice()),
            ] {
                assert!(oracle::max_rel_err(a, b) <= 1e-10);
            }
        }
    }
}

#[test]
fn planted_model_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let dims = [10, 9, 8];
    let core = [3, 2, 2];
    let planted = random_factors(&mut rng, dims, core);
    let x = planted.reconstruct().unwrap();
    let perturb = |m: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
        m.iter().map(|v| v * (1.0 + 0.01 * rng.gen_range(0.0..1.0))).collect()
    };
    let init = FactorSet::new(
        Matrix::new(10, 3, perturb(planted.w.as_slice(), &mut rng)).unwrap(),
        Matrix::new(9, 2, perturb(planted.h.as_slice(), &mut rng)).unwrap(),
        Matrix::new(8, 2, perturb(planted.q.as_slice(), &mut rng)).unwrap(),
        Tensor3::new(core, perturb(planted.core.as_slice(), &mut rng)).unwrap(),
    )
    .unwrap();
    let mut cfg = config(2.0, core);
    cfg.max_iters = 300;
    cfg.rel_tol = 0.0;
    let (_, trace) = solve(&x, &cfg, Some(init)).unwrap();
    assert!(trace.final_loss().unwrap() <= 1e-4 * trace.losses[0]);
}

#[test]
fn zero_iterations_returns_the_initialization() {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let x = random_data(&mut rng, [5, 4, 3]);
    let mut cfg = config(1.0, [2, 2, 2]);
    cfg.max_iters = 0;
    let init = init_factors([5, 4, 3], &cfg).unwrap();
    let (f, trace) = solve(&x, &cfg, Some(init.clone())).unwrap();
    assert_eq!(f, init);
    assert_eq!(trace.losses.len(), 1);
    assert!(trace.iter_times.is_empty());
    let (fresh, _) = solve(&x, &cfg, None).unwrap();
    assert_eq!(fresh, init);
}

#[test]
fn solve_is_deterministic_and_stops_on_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let x = random_data(&mut rng, [7, 6, 5]);
    let mut cfg = config(1.0, [2, 2, 2]);
    cfg.max_iters = 5000;
    cfg.rel_tol = 1e-6;
    let (fa, ta) = solve(&x, &cfg, None).unwrap();
    let (fb, tb) = solve(&x, &cfg, None).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(ta, tb);
    let stop = ta.converged_at.expect("converges well before 5000 iterations");
    assert!(stop < 5000);
    assert_eq!(ta.iterations(), stop);
    assert!(ta.losses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
}

#[test]
fn loss_is_evaluated_on_the_requested_period() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let x = random_data(&mut rng, [5, 5, 5]);
    let mut cfg = config(1.5, [2, 2, 2]);
    cfg.max_iters = 10;
    cfg.rel_tol = 0.0;
    cfg.loss_eval_period = 3;
    let (_, trace) = solve(&x, &cfg, None).unwrap();
    assert_eq!(trace.loss_iters, vec![0, 3, 6, 9, 10]);
    assert_eq!(trace.iterations(), 10);
}

#[test]
fn itakura_saito_needs_positive_data() {
    let mut x = vec![0.5; 4 * 3 * 2];
    x[5] = 0.0;
    let x = Tensor3::new([4, 3, 2], x).unwrap();
    let mut cfg = config(0.0, [2, 2, 1]);
    cfg.max_iters = 5;
    match solve(&x, &cfg, None) {
        Err(NtdError::NumericalDomain { iteration, message }) => {
            assert_eq!(iteration, Some(0));
            assert!(message.contains("(0, 2, 1)"), "{message}");
        }
        other => panic!("expected a domain error, got {other:?}"),
    }
    cfg.clamp_data = true;
    let (f, _) = solve(&x, &cfg, None).unwrap();
    assert!(f.min_entry() >= cfg.epsilon);
}

#[test]
fn rejects_bad_inputs() {
    let x = Tensor3::filled([3, 3, 3], 1.0).unwrap();
    let mut cfg = config(1.0, [2, 2, 2]);
    cfg.epsilon = 0.0;
    assert!(matches!(solve(&x, &cfg, None), Err(NtdError::InvalidArgument(_))));

    let cfg = config(1.0, [2, 2, 2]);
    let neg = Tensor3::new([1, 1, 2], vec![1.0, -1.0]).unwrap();
    assert!(matches!(solve(&neg, &cfg, None), Err(NtdError::InvalidArgument(_))));

    let wrong = init_factors([4, 3, 3], &cfg).unwrap();
    assert!(matches!(
        solve(&x, &cfg, Some(wrong)),
        Err(NtdError::InvalidArgument(_))
    ));

    let mut tiny = init_factors([3, 3, 3], &cfg).unwrap();
    tiny.core = tiny.core.clamp_min(0.0).power(0.0).unwrap();
    tiny.w = Matrix::filled(3, 2, 0.0).unwrap();
    assert!(matches!(solve(&x, &cfg, Some(tiny)), Err(NtdError::InvalidArgument(_))));
}

#[test]
fn converged_iterates_are_stationary() {
    for (seed, beta) in [(0u64, 0.0), (1, 1.0), (2, 2.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_data(&mut rng, [8, 7, 6]);
        let mut cfg = config(beta, [2, 2, 2]);
        cfg.seed = seed;
        cfg.rel_tol = 1e-12;
        cfg.max_iters = 200_000;
        let (f, trace) = solve(&x, &cfg, None).unwrap();
        assert!(trace.converged_at.is_some());
        let dev = oracle::max_ratio_deviation(&x, &f, beta, 10.0 * cfg.epsilon);
        assert!(dev <= 1e-3, "beta {beta}: ratio deviates by {dev}");
    }
}
