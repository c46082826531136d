//! Behavioural tests of the inner loops and the outer solver: hand-checked
//! recurrences on a one-sample problem, bitwise reduction to plain SGD,
//! sample accounting, determinism, and divergence guards.

use bilevel_core::estimator::anchor;
use bilevel_core::problems::{
    make_hyperclean_synthetic, HyperCleanProblem, SyntheticDataset, SyntheticProblem,
};
use bilevel_core::solver::{aux_refine, ll_refine, outer_step};
use bilevel_core::{
    project_ball, BallRadius, BilevelError, EstimatorConfig, OuterState, ProblemOracle,
    SampleLedger, SampleRng, Solver, SolverConfig, Vector,
};

/// One training sample (u = 1, label = 2) and one validation sample
/// (u = 1, label = 1) with reg = 0.5. Every batch is that sample, so the
/// directions are deterministic scalar functions:
///
///   dir_y(x, y)    = (y - 2) + 0.5 (y - x)
///   dir_v(y, v)    = 1.5 v - (y - 1)
///   dir_x(x, v)    = 2 (x - 1) + 0.5 v
fn one_sample_problem() -> SyntheticProblem {
    let train = SyntheticDataset::from_parts(vec![1.0], vec![2.0], 1).unwrap();
    let val = SyntheticDataset::from_parts(vec![1.0], vec![1.0], 1).unwrap();
    SyntheticProblem::new(train, val, 0.5).unwrap()
}

fn scalar(v: f64) -> Vector {
    Vector::from_vec(vec![v])
}

#[test]
fn lower_loop_follows_the_hand_recurrence_across_the_upper_update() {
    let prob = one_sample_problem();
    let mut rng = SampleRng::seed_from(0);
    let mut ledger = SampleLedger::new();

    // The very first correction must difference across the x update: the
    // step itself still uses the estimate computed at x_prev.
    let x_prev = scalar(0.0);
    let y0 = scalar(0.0);
    let d0 = prob.exact_dir_y(&x_prev, &y0).unwrap();
    assert_eq!(d0.as_slice()[0], -2.0);
    let x_new = scalar(1.0);

    let (y_out, d_out) = ll_refine(
        &prob,
        &x_prev,
        &y0,
        &d0,
        &x_new,
        3,
        0.1,
        0.0,
        1,
        0,
        &mut rng,
        &mut ledger,
    )
    .unwrap();

    let dir = |x: f64, y: f64| (y - 2.0) + 0.5 * (y - x);
    let mut ey = 0.0f64;
    let mut ed = dir(0.0, 0.0);
    for _ in 0..3 {
        ey -= 0.1 * ed;
        ed = dir(1.0, ey);
    }
    assert!(
        (y_out.as_slice()[0] - ey).abs() <= 1e-12,
        "y {}",
        y_out.as_slice()[0]
    );
    assert!(
        (d_out.as_slice()[0] - ed).abs() <= 1e-12,
        "d {}",
        d_out.as_slice()[0]
    );
    assert!((y_out.as_slice()[0] - 0.607).abs() <= 1e-10);
    assert_eq!(ledger.total(), 3 * 2);
}

#[test]
fn lower_loop_contracts_linearly_when_nothing_else_moves() {
    let prob = one_sample_problem();
    let mut rng = SampleRng::seed_from(0);
    let mut ledger = SampleLedger::new();

    let x = scalar(1.0);
    let y0 = scalar(0.0);
    let d0 = prob.exact_dir_y(&x, &y0).unwrap();
    let y_star = (2.0 + 0.5) / 1.5;

    for t_steps in [1usize, 4, 8] {
        let (y_out, _) = ll_refine(
            &prob,
            &x,
            &y0,
            &d0,
            &x,
            t_steps,
            0.1,
            0.0,
            1,
            0,
            &mut rng,
            &mut ledger,
        )
        .unwrap();
        let expect = y_star + (1.0f64 - 0.1 * 1.5).powi(t_steps as i32) * (0.0 - y_star);
        assert!(
            (y_out.as_slice()[0] - expect).abs() <= 1e-12,
            "t = {t_steps}: {} vs {expect}",
            y_out.as_slice()[0]
        );
    }
}

#[test]
fn auxiliary_loop_follows_the_hand_recurrence_and_refreshes_both_estimates() {
    let prob = one_sample_problem();
    let mut rng = SampleRng::seed_from(0);
    let mut ledger = SampleLedger::new();

    let x_prev = scalar(0.0);
    let y_prev = scalar(0.0);
    let v_prev = scalar(0.0);
    let d_x0 = prob.exact_dir_x(&x_prev, &y_prev, &v_prev).unwrap();
    let d_v0 = prob.exact_dir_v(&x_prev, &y_prev, &v_prev).unwrap();
    assert_eq!(d_x0.as_slice()[0], -2.0);
    assert_eq!(d_v0.as_slice()[0], 1.0);

    let x_new = scalar(1.0);
    let y_new = scalar(0.607);
    let radius = BallRadius::new(10.0).unwrap();

    let (v_out, d_x_out, d_v_out) = aux_refine(
        &prob,
        &x_prev,
        &y_prev,
        &v_prev,
        &d_x0,
        &d_v0,
        &x_new,
        &y_new,
        2,
        0.1,
        0.0,
        0.0,
        1,
        radius,
        0,
        &mut rng,
        &mut ledger,
    )
    .unwrap();

    // j = 0: v1 = -0.1; the corrections difference across the x and y moves,
    // so both estimates land exactly on the fresh directions at the new
    // point: d_x = 0.5 * v1 = -0.05, d_v = 1.5 * v1 - (0.607 - 1) = 0.243.
    // j = 1: v2 = -0.1 - 0.1 * 0.243 = -0.1243, d_x = -0.06215,
    // d_v = 1.5 * v2 + 0.393 = 0.20655.
    assert!((v_out.as_slice()[0] - (-0.1243)).abs() <= 1e-12);
    assert!((d_x_out.as_slice()[0] - (-0.06215)).abs() <= 1e-12);
    assert!((d_v_out.as_slice()[0] - 0.20655).abs() <= 1e-12);
    assert_eq!(ledger.total(), 2 * 4);
}

#[test]
fn auxiliary_iterates_clamp_to_the_ball_and_stay_there() {
    let prob = one_sample_problem();
    let mut rng = SampleRng::seed_from(0);
    let mut ledger = SampleLedger::new();

    let x = scalar(1.0);
    let y = scalar(0.0);
    let v0 = scalar(0.0);
    let d_x0 = prob.exact_dir_x(&x, &y, &v0).unwrap();
    let d_v0 = prob.exact_dir_v(&x, &y, &v0).unwrap();
    let radius = BallRadius::new(0.05).unwrap();

    // dir_v at (y = 0, v = 0) is 1.0, so the first unprojected step is
    // -0.1, twice the radius.
    let (v_out, _, _) = aux_refine(
        &prob,
        &x,
        &y,
        &v0,
        &d_x0,
        &d_v0,
        &x,
        &y,
        6,
        0.1,
        0.0,
        0.0,
        1,
        radius,
        0,
        &mut rng,
        &mut ledger,
    )
    .unwrap();
    let bound = 0.05 * (1.0 + 4.0 * f64::EPSILON);
    assert!(v_out.norm() <= bound, "norm {}", v_out.norm());
    assert!(v_out.norm() >= 0.05 - 1e-15, "should sit on the boundary");
}

#[test]
fn outer_step_composes_anchor_and_both_inner_loops() {
    let prob = SyntheticProblem::generate(30, 3, 0.5, 3).unwrap();
    let n = 30;
    let radius = BallRadius::new(10.0).unwrap();
    let config = SolverConfig {
        k_max: 4,
        t_steps: 3,
        j_steps: 2,
        step_x: 0.1,
        step_y: 0.2,
        step_v: 0.2,
        radius,
        estimator: EstimatorConfig::spider(n, n, 1),
        seed: 5,
    };

    let mut state = OuterState::zeros(3, 3);
    let mut rng = SampleRng::seed_from(config.seed);
    outer_step(&mut state, &config, &prob, &mut rng).unwrap();

    // Full batches consume no randomness, so the same composition by hand
    // must reproduce the state bitwise.
    let mut rng2 = SampleRng::seed_from(config.seed);
    let mut ledger = SampleLedger::new();
    let x0 = Vector::zeros(3);
    let y0 = Vector::zeros(3);
    let v0 = Vector::zeros(3);
    let est = anchor(&prob, &x0, &y0, &v0, n, &mut rng2, &mut ledger).unwrap();
    let mut x1 = x0.clone();
    x1.axpy(-config.step_x, &est.d_x);
    let (y1, d_y1) = ll_refine(
        &prob,
        &x0,
        &y0,
        &est.d_y,
        &x1,
        3,
        0.2,
        0.0,
        n,
        0,
        &mut rng2,
        &mut ledger,
    )
    .unwrap();
    let (v1, d_x1, d_v1) = aux_refine(
        &prob,
        &x0,
        &y0,
        &v0,
        &est.d_x,
        &est.d_v,
        &x1,
        &y1,
        2,
        0.2,
        0.0,
        0.0,
        n,
        radius,
        0,
        &mut rng2,
        &mut ledger,
    )
    .unwrap();

    assert_eq!(state.x, x1);
    assert_eq!(state.y, y1);
    assert_eq!(state.v, v1);
    assert_eq!(state.est.d_y, d_y1);
    assert_eq!(state.est.d_x, d_x1);
    assert_eq!(state.est.d_v, d_v1);
    assert_eq!(state.k, 1);
    assert_eq!(state.samples_used(), ledger.total());
}

#[test]
fn plain_sgd_mode_matches_a_handwritten_reference_loop_bitwise() {
    let prob = SyntheticProblem::generate(50, 4, 0.5, 9).unwrap();
    let (s1, s2) = (7usize, 3usize);
    let (t_steps, j_steps) = (2usize, 2usize);
    let (a, b, e) = (0.05, 0.1, 0.1);
    let radius = BallRadius::new(10.0).unwrap();
    let k_max = 3usize;
    let seed = 77u64;

    let config = SolverConfig {
        k_max,
        t_steps,
        j_steps,
        step_x: a,
        step_y: b,
        step_v: e,
        radius,
        estimator: EstimatorConfig::sgd_baseline(s1, s2),
        seed,
    };
    let mut solver = Solver::new(&prob, config).unwrap();
    solver.run().unwrap();

    // Reference: resample every estimate from scratch, drawing batches in
    // the same documented order.
    let n_up = prob.n_upper();
    let n_low = prob.n_lower();
    let mut rng = SampleRng::seed_from(seed);
    let mut x = Vector::zeros(4);
    let mut y = Vector::zeros(4);
    let mut v = Vector::zeros(4);
    for _ in 0..k_max {
        let bxu = rng.draw_batch(n_up, s1).unwrap();
        let bxl = rng.draw_batch(n_low, s1).unwrap();
        let byl = rng.draw_batch(n_low, s1).unwrap();
        let bvu = rng.draw_batch(n_up, s1).unwrap();
        let bvl = rng.draw_batch(n_low, s1).unwrap();
        let mut d_x = prob.dir_x(&x, &y, &v, &bxu, &bxl).unwrap();
        let mut d_y = prob.dir_y(&x, &y, &byl).unwrap();
        let mut d_v = prob.dir_v(&x, &y, &v, &bvu, &bvl).unwrap();

        let mut x_new = x.clone();
        x_new.axpy(-a, &d_x);

        for _ in 0..t_steps {
            let mut y_cur = y.clone();
            y_cur.axpy(-b, &d_y);
            let batch = rng.draw_batch(n_low, s2).unwrap();
            d_y = prob.dir_y(&x_new, &y_cur, &batch).unwrap();
            y = y_cur;
        }

        for _ in 0..j_steps {
            let mut v_cur = v.clone();
            v_cur.axpy(-e, &d_v);
            let v_cur = project_ball(&v_cur, radius).unwrap();
            let bxu = rng.draw_batch(n_up, s2).unwrap();
            let bxl = rng.draw_batch(n_low, s2).unwrap();
            let bvu = rng.draw_batch(n_up, s2).unwrap();
            let bvl = rng.draw_batch(n_low, s2).unwrap();
            d_x = prob.dir_x(&x_new, &y, &v_cur, &bxu, &bxl).unwrap();
            d_v = prob.dir_v(&x_new, &y, &v_cur, &bvu, &bvl).unwrap();
            v = v_cur;
        }
        x = x_new;
    }

    assert_eq!(solver.state().x, x);
    assert_eq!(solver.state().y, y);
    assert_eq!(solver.state().v, v);
}

#[test]
fn full_batch_correction_mode_tracks_full_batch_sgd() {
    let prob = SyntheticProblem::generate(60, 4, 0.5, 15).unwrap();
    let n = 60;
    let radius = BallRadius::new(100.0).unwrap();
    let mut configs = Vec::new();
    for estimator in [
        EstimatorConfig::spider(n, n, 1),
        EstimatorConfig::sgd_baseline(n, n),
    ] {
        configs.push(SolverConfig {
            k_max: 30,
            t_steps: 3,
            j_steps: 2,
            step_x: 0.1,
            step_y: 0.2,
            step_v: 0.2,
            radius,
            estimator,
            seed: 1,
        });
    }

    let mut finals = Vec::new();
    for config in configs {
        let mut solver = Solver::new(&prob, config).unwrap();
        solver.run().unwrap();
        finals.push(solver.state().clone());
    }

    // With full batches the corrections telescope, so the two modes follow
    // the same deterministic trajectory up to rounding.
    let dx = (&finals[0].x - &finals[1].x).norm();
    let dy = (&finals[0].y - &finals[1].y).norm();
    let dv = (&finals[0].v - &finals[1].v).norm();
    let scale = 1.0 + finals[1].x.norm() + finals[1].y.norm() + finals[1].v.norm();
    assert!(dx <= 1e-10 * scale, "x gap {dx:.3e}");
    assert!(dy <= 1e-10 * scale, "y gap {dy:.3e}");
    assert!(dv <= 1e-10 * scale, "v gap {dv:.3e}");
}

#[test]
fn sample_accounting_matches_the_anchoring_schedule() {
    let prob = SyntheticProblem::generate(40, 3, 0.5, 21).unwrap();
    let (s1, s2, q1) = (11usize, 3usize, 5usize);
    let (t_steps, j_steps) = (3usize, 2usize);
    let config = SolverConfig {
        k_max: 20,
        t_steps,
        j_steps,
        step_x: 0.05,
        step_y: 0.1,
        step_v: 0.1,
        radius: BallRadius::new(100.0).unwrap(),
        estimator: EstimatorConfig::spider(s1, s2, q1),
        seed: 2,
    };
    let mut solver = Solver::new(&prob, config).unwrap();

    let per_step = ((2 * t_steps + 4 * j_steps) * s2) as u64;
    let mut expected = 0u64;
    for k in 0..20 {
        solver.step().unwrap();
        if k % q1 == 0 {
            expected += 3 * s1 as u64;
        }
        expected += per_step;
        assert_eq!(solver.state().samples_used(), expected, "after step {k}");
    }
    let closed_form = (20 / q1) as u64 * 3 * s1 as u64 + 20 * per_step;
    assert_eq!(solver.state().samples_used(), closed_form);
}

#[test]
fn single_anchor_mode_charges_one_large_batch() {
    let prob = SyntheticProblem::generate(40, 3, 0.5, 25).unwrap();
    let (s1, s2, k_max) = (11usize, 3usize, 20usize);
    let (t_steps, j_steps) = (3usize, 2usize);
    let config = SolverConfig {
        k_max,
        t_steps,
        j_steps,
        step_x: 0.05,
        step_y: 0.1,
        step_v: 0.1,
        radius: BallRadius::new(100.0).unwrap(),
        estimator: EstimatorConfig::storm(s1, s2, k_max, 0.1, 0.1, 0.1),
        seed: 2,
    };
    let mut solver = Solver::new(&prob, config).unwrap();
    solver.run().unwrap();
    let expected = 3 * s1 as u64 + (k_max * (2 * t_steps + 4 * j_steps) * s2) as u64;
    assert_eq!(solver.state().samples_used(), expected);
}

#[test]
fn runs_are_reproducible_by_seed() {
    let prob = SyntheticProblem::generate(80, 5, 0.5, 33).unwrap();
    let mut config = SolverConfig {
        k_max: 10,
        t_steps: 2,
        j_steps: 2,
        step_x: 0.05,
        step_y: 0.1,
        step_v: 0.1,
        radius: BallRadius::new(100.0).unwrap(),
        estimator: EstimatorConfig::spider(20, 5, 5),
        seed: 123,
    };

    let mut a = Solver::new(&prob, config).unwrap();
    a.run().unwrap();
    let mut b = Solver::new(&prob, config).unwrap();
    b.run().unwrap();
    assert_eq!(a.state().x, b.state().x);
    assert_eq!(a.state().y, b.state().y);
    assert_eq!(a.state().v, b.state().v);
    assert_eq!(a.state().samples_used(), b.state().samples_used());

    config.seed = 124;
    let mut c = Solver::new(&prob, config).unwrap();
    c.run().unwrap();
    assert_ne!(a.state().x, c.state().x);
}

#[test]
fn auxiliary_iterates_respect_the_ball_along_stochastic_runs() {
    let prob = SyntheticProblem::generate(60, 4, 0.5, 39).unwrap();
    let radius = BallRadius::new(0.01).unwrap();
    let config = SolverConfig {
        k_max: 40,
        t_steps: 2,
        j_steps: 2,
        step_x: 0.05,
        step_y: 0.1,
        step_v: 0.5,
        radius,
        estimator: EstimatorConfig::spider(20, 5, 5),
        seed: 7,
    };
    let mut solver = Solver::new(&prob, config).unwrap();
    let bound = 0.01 * (1.0 + 4.0 * f64::EPSILON);
    for _ in 0..40 {
        solver.step().unwrap();
        assert!(solver.state().v.norm() <= bound);
    }
}

#[test]
fn exploding_steps_abort_with_a_divergence_error() {
    let prob = SyntheticProblem::generate(40, 3, 0.5, 43).unwrap();
    let config = SolverConfig {
        k_max: 50,
        t_steps: 2,
        j_steps: 1,
        step_x: 1e9,
        step_y: 1e9,
        step_v: 0.1,
        radius: BallRadius::new(1e9).unwrap(),
        estimator: EstimatorConfig::spider(10, 5, 1),
        seed: 3,
    };
    let mut solver = Solver::new(&prob, config).unwrap();
    let err = solver.run().unwrap_err();
    assert!(
        matches!(err, BilevelError::Diverged { .. }),
        "unexpected error: {err}"
    );
}

#[test]
fn full_batch_runs_drive_the_hypergradient_down() {
    let prob = SyntheticProblem::generate(100, 5, 0.5, 47).unwrap();
    let n = 100;
    let config = SolverConfig {
        k_max: 400,
        t_steps: 10,
        j_steps: 10,
        step_x: 0.4,
        step_y: 0.3,
        step_v: 0.3,
        radius: BallRadius::new(1000.0).unwrap(),
        estimator: EstimatorConfig::spider(n, n, 1),
        seed: 4,
    };
    let mut solver = Solver::new(&prob, config).unwrap();
    let initial = prob.exact(&solver.state().x).unwrap().grad_phi.norm();
    solver.run().unwrap();
    let final_norm = prob.exact(&solver.state().x).unwrap().grad_phi.norm();
    assert!(
        final_norm <= 1e-2 && final_norm < initial * 1e-2,
        "hypergradient norm went {initial:.3e} -> {final_norm:.3e}"
    );
}

#[test]
fn hyperclean_runs_end_to_end_and_stay_finite() {
    let data = make_hyperclean_synthetic(50, 40, 30, 4, 2, 0.3, 51).unwrap();
    let prob = HyperCleanProblem::new(data, 0.01).unwrap();
    let k_max = 20usize;
    let config = SolverConfig {
        k_max,
        t_steps: 3,
        j_steps: 2,
        step_x: 0.5,
        step_y: 0.3,
        step_v: 0.1,
        radius: BallRadius::new(100.0).unwrap(),
        estimator: EstimatorConfig::storm(25, 5, k_max, 0.1, 0.1, 0.1),
        seed: 8,
    };
    let mut solver = Solver::new(&prob, config).unwrap();
    solver.run().unwrap();

    let state = solver.state();
    assert!(state.x.all_finite() && state.y.all_finite() && state.v.all_finite());
    assert!(state.v.norm() <= 100.0 * (1.0 + 4.0 * f64::EPSILON));
    let loss = prob.validation_loss(&state.y);
    assert!(loss.is_finite() && loss > 0.0);
    let acc = prob.test_accuracy(&state.y);
    assert!((0.0..=1.0).contains(&acc));
}
