use norm_descent::analysis::{linf_bruteforce, smoothness_constant};
use norm_descent::matrix::{eigh, Matrix, SymMatrix};
use norm_descent::norms::{self, BlockPartition, NormKind};
use norm_descent::optim::{
    check_normalized_rate, run_normalized_sd, run_relaxed_nsd, run_signsgd, run_steepest_descent,
    verify_rate_bounds, RunOptions, StepSchedule,
};
use norm_descent::problems::{make_quadratic, CoshProblem, Oracle, QuadraticProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pd(d: usize, rng: &mut ChaCha8Rng) -> QuadraticProblem {
    let g = Matrix::from_fn(d, |_, _| rng.random_range(-1.0..1.0)).gram();
    let h = SymMatrix::from_fn(d, |i, j| g.get(i, j) + if i == j { 0.1 } else { 0.0 });
    QuadraticProblem::from_hessian(h).unwrap()
}

fn point(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

#[test]
fn descent_holds_for_every_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for k in 0..20 {
        let d = 2 + k % 7;
        let p = random_pd(d, &mut rng);
        let x0 = point(d, &mut rng);
        let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..4.0)).collect();
        for kind in [
            NormKind::Euclidean,
            NormKind::Max,
            NormKind::One,
            NormKind::WeightedDiag(weights),
            NormKind::BlockMax(BlockPartition::singletons(d)),
            NormKind::BlockMax(BlockPartition::whole(d)),
        ] {
            let l = smoothness_constant(p.hessian(), &kind).unwrap();
            let tr = run_steepest_descent(&mut &p, &kind, l, &x0, RunOptions::new(100)).unwrap();
            for w in tr.records.windows(2) {
                assert!(w[1].f <= w[0].f - w[0].dual_grad_norm.powi(2) / (2.0 * l) + 1e-10);
            }
        }
    }
}

#[test]
fn sign_step_obeys_quadratic_upper_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..30 {
        let d = rng.random_range(2..8);
        let p = random_pd(d, &mut rng);
        let linf = linf_bruteforce(p.hessian()).unwrap();
        let x = point(d, &mut rng);
        let (f, g) = p.quad_eval(&x);
        let alpha = rng.random_range(0.01..2.0);
        let s: Vec<f64> = (0..d)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let y: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + alpha * b).collect();
        let bound = f + alpha * norms::dot(&g, &s) + alpha * alpha * linf / 2.0;
        assert!(p.quad_eval(&y).0 <= bound + 1e-12 * bound.abs().max(1.0));
    }
}

#[test]
fn rate_bounds_hold_per_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..5 {
        let d = 5;
        let p = random_pd(d, &mut rng);
        let lmin = eigh(p.hessian()).unwrap().values[0];
        let x0 = point(d, &mut rng);
        for kind in [NormKind::Euclidean, NormKind::Max, NormKind::One] {
            let l = smoothness_constant(p.hessian(), &kind).unwrap();
            let tr = run_steepest_descent(&mut &p, &kind, l, &x0, RunOptions::new(300)).unwrap();
            let r = (2.0 * tr.f0() / lmin).sqrt();
            let check = verify_rate_bounds(
                &tr,
                l,
                Some(lmin * kind.dual_lower_ratio(d)),
                0.0,
                Some(r),
                &kind,
            );
            assert!(check.holds(), "{kind:?}: {check:?}");
        }
    }
}

#[test]
fn normalized_rate_on_rotated_quadratic() {
    let p = make_quadratic(6, 20.0, 0.6, 7).unwrap();
    let x0 = [1.0, -1.0, 0.5, 2.0, -0.5, 1.5];
    for kind in [NormKind::Euclidean, NormKind::Max] {
        let l = smoothness_constant(p.hessian(), &kind).unwrap();
        let tr = run_normalized_sd(&mut &p, &kind, l, &x0, RunOptions::new(1000)).unwrap();
        let check = check_normalized_rate(&tr, l, 0.0);
        assert!(check.holds(), "{kind:?}: {check:?}");
    }
}

#[test]
fn relaxed_descent_on_cosh() {
    let cosh = CoshProblem::new(4);
    let (l0, l1) = cosh.relaxed_constants();
    assert_eq!((l0, l1), (4.0, 1.0));
    let tr = run_relaxed_nsd(
        &mut cosh.clone(),
        &NormKind::Max,
        l0,
        l1,
        &[3.0; 4],
        RunOptions::new(10_000),
        1e-8,
    )
    .unwrap();
    for w in tr.records.windows(2) {
        let g = w[0].dual_grad_norm;
        let bound = w[0].f - g * g / (2.0 * (5.0 * l0 + 4.0 * l1 * g));
        assert!(w[1].f <= bound + 1e-10);
    }
    let hit = tr.first_hit.expect("reaches tolerance");
    assert_eq!(hit, tr.steps());
    assert!(tr.last().dual_grad_norm <= 1e-8);
}

#[test]
fn cosh_gradient_growth() {
    let mut cosh = CoshProblem::new(3);
    let (l0, l1) = cosh.relaxed_constants();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..500 {
        let x = point(3, &mut rng)
            .iter()
            .map(|v| v * 2.0)
            .collect::<Vec<_>>();
        let dx: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0) / l1).collect();
        let y: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let gx = norms::l1(&cosh.eval(&x).1);
        let gy = norms::l1(&cosh.eval(&y).1);
        assert!(gy <= 4.0 * (l0 / l1 + gx));
    }
}

#[test]
fn noisy_signsgd_regression() {
    let p = make_quadratic(6, 10.0, 0.5, 0).unwrap();
    let x0 = [1.0; 6];
    let mut ratios: Vec<f64> = (0..32)
        .map(|seed| {
            let mut oracle = p.with_noise(0.5, seed);
            let tr = run_signsgd(
                &mut oracle,
                StepSchedule::InvSqrt,
                &x0,
                RunOptions::new(2000),
            )
            .unwrap();
            tr.last().f / tr.f0()
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[15] + ratios[16]);
    assert!(median < 0.1, "median f_T/f_0 = {median}");
}

#[test]
fn noisy_runs_are_reproducible() {
    let p = make_quadratic(4, 5.0, 0.3, 1).unwrap();
    let run = |seed| {
        let mut oracle = p.with_noise(0.2, seed);
        run_signsgd(
            &mut oracle,
            StepSchedule::Constant(0.01),
            &[1.0; 4],
            RunOptions::new(200),
        )
        .unwrap()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn signsgd_on_stiff_quadratic_stays_bounded() {
    // sign updates are descent directions far from the optimum, so a large
    // constant step oscillates without blowing up
    let p = make_quadratic(4, 100.0, 0.3, 1).unwrap();
    let tr = run_signsgd(
        &mut &p,
        StepSchedule::Constant(10.0),
        &[1.0, -2.0, 0.5, 3.0],
        RunOptions::new(2000),
    )
    .unwrap();
    assert!(tr.records.iter().all(|r| r.f < 1e7));
    assert!(tr.last().f > 1.0);
}
