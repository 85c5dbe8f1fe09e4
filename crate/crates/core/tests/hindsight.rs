mod common;

use adactl_core::episode::step_costs;
use adactl_core::hindsight::{
    dac_approx_gap, linear_argmin, radicand_decayed, solve_benchmark_with, state_deviation_pairs, stationary_costs, Solver,
};
use adactl_core::scenario::gen_predictions;
use adactl_core::{
    builtin_scenario, run_episode, solve_benchmark, regret_bound, ControllerKind, EpisodeOptions, FeasibleSet, GradientMatrix,
    Matrix, PredictionPolicy, ScenarioSpec, Segment, SystemModel, RegretBound,
};
use common::*;
use rand::Rng;

fn small_spec(seed: u64) -> ScenarioSpec {
    let mut r = rng(seed);
    let horizon = 60;
    let system = SystemModel::scalar(r.gen_range(-0.8..0.8), r.gen_range(0.5..1.5), 0.2, 0.5).unwrap();
    let cut = r.gen_range(2..horizon);
    let (a, b) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
    ScenarioSpec {
        name: "small".into(),
        horizon,
        system,
        p: 3,
        kappa_m: 2.0,
        theta_segments: vec![Segment::new(1, cut, vec![a, 0.0]), Segment::new(cut, horizon + 1, vec![b, 0.0])],
        w_segments: vec![Segment::new(1, 20, vec![0.5]), Segment::new(20, horizon + 1, vec![-0.3])],
        g: 10.0,
        l: 3.0,
        predictions: PredictionPolicy::None,
    }
}

#[test]
fn linear_argmin_attains_minus_kappa_max_block_norm() {
    let mut r = rng(51);
    for _ in 0..300 {
        let (p, du, dx) = (r.gen_range(1..=5), r.gen_range(1..=2), r.gen_range(1..=2));
        let kappa = r.gen_range(0.1..4.0);
        let c = random_params(&mut r, p, du, dx, 2.0);
        let set = FeasibleSet::new(kappa, p).unwrap();
        let m = linear_argmin(&c, &set);
        let best = c.block_norms().into_iter().fold(0.0, f64::max);
        assert!((m.dot(&c) + kappa * best).abs() < 1e-12 * (1.0 + kappa * best));
        for _ in 0..20 {
            assert!(random_feasible(&mut r, p, du, dx, kappa).dot(&c) >= m.dot(&c) - 1e-12);
        }
    }
}

#[test]
fn linear_argmin_matches_projected_gradient_p3() {
    let mut r = rng(52);
    for _ in 0..50 {
        let c = random_params(&mut r, 3, 1, 2, 2.0);
        let set = FeasibleSet::new(1.5, 3).unwrap();
        let objective = |m: &adactl_core::PolicyParams| Ok((m.dot(&c), c.clone()));
        let start = adactl_core::PolicyParams::zeros(3, 1, 2);
        let (pg, _) = adactl_core::hindsight::projected_gradient(&objective, &set, start, 1e-12, 10_000).unwrap();
        let closed = linear_argmin(&c, &set);
        assert!((pg.dot(&c) - closed.dot(&c)).abs() < 1e-6);
    }
}

#[test]
fn closed_form_and_projected_gradient_agree() {
    for seed in 0..10 {
        let spec = small_spec(seed);
        let cf = solve_benchmark_with(&spec, Solver::ClosedFormLinear).unwrap();
        let pg = solve_benchmark_with(&spec, Solver::ProjectedGradient).unwrap();
        assert!((cf.benchmark_cost - pg.benchmark_cost).abs() <= 1e-6 * cf.benchmark_cost.abs().max(1.0));
        assert!(spec.feasible_set().unwrap().contains(&cf.m_star));
    }
}

#[test]
fn benchmark_beats_random_feasible_policies() {
    for seed in 0..5 {
        let spec = small_spec(seed);
        let b = solve_benchmark(&spec).unwrap();
        let mut r = rng(100 + seed);
        for _ in 0..100 {
            let m = random_feasible(&mut r, spec.p, 1, 1, spec.kappa_m);
            let c: f64 = stationary_costs(&spec, &m).unwrap().iter().sum();
            assert!(c >= b.benchmark_cost - 1e-6);
        }
    }
}

#[test]
fn zero_costs_give_zero_benchmark() {
    let mut spec = small_spec(3);
    spec.theta_segments = vec![Segment::new(1, spec.horizon + 1, vec![0.0, 0.0])];
    let b = solve_benchmark(&spec).unwrap();
    assert!(b.m_star.is_zero());
    assert_eq!(b.benchmark_cost, 0.0);
}

#[test]
fn regret_identity() {
    for seed in 0..5 {
        let spec = small_spec(seed);
        let b = solve_benchmark(&spec).unwrap();
        for kind in [ControllerKind::FtrlC, ControllerKind::AdaFtrlC, ControllerKind::Gpc] {
            let trace = run_episode(kind, &spec, None, &EpisodeOptions::default()).unwrap();
            let res = b.against(trace.learner_cost());
            let direct: f64 = step_costs(&trace).iter().sum::<f64>() - b.step_costs.iter().sum::<f64>();
            assert_eq!(res.regret, res.learner_cost - res.benchmark_cost);
            assert!((res.regret - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}

#[test]
fn zero_gradient_trace_has_zero_bound() {
    let mut spec = small_spec(4);
    spec.theta_segments = vec![Segment::new(1, spec.horizon + 1, vec![0.0, 0.0])];
    let trace = run_episode(ControllerKind::FtrlC, &spec, None, &EpisodeOptions::default()).unwrap();
    let rep = regret_bound(RegretBound::MaxAdaptive, &trace, &trace.constants, 0.0).unwrap();
    assert_eq!(rep.rhs_value, 0.0);
    assert!(rep.satisfied);
}

#[test]
fn state_deviation_inequality() {
    let mut r = rng(53);
    for _ in 0..500 {
        let (dx, du) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let delta = r.gen_range(0.05..0.9);
        let norm_a = r.gen_range(0.0..=1.0 - delta);
        let a = matrix_with_norm(&mut r, dx, dx, norm_a);
        // the inequality takes ||B|| ≤ 1
        let norm_b = r.gen_range(0.0..=1.0);
        let b = matrix_with_norm(&mut r, dx, du, norm_b);
        let model = SystemModel::new(a, b.clone(), None, delta, b.frobenius().max(1.0), 1.0).unwrap();
        let t = r.gen_range(1..40);
        let w = random_disturbances(&mut r, t, dx, 1.0);
        let u1: Vec<Vec<f64>> = (0..t).map(|_| uniform_vec(&mut r, du, 2.0)).collect();
        let u2: Vec<Vec<f64>> = (0..t).map(|_| uniform_vec(&mut r, du, 2.0)).collect();
        for (lhs, rhs) in state_deviation_pairs(&model, &u1, &u2, &w).unwrap() {
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }
}

#[test]
fn approximation_gap_examples() {
    let model = SystemModel::scalar(0.75, 1.0, 0.25, 0.25).unwrap();
    let w = vec![vec![0.25]; 400];
    let zero = dac_approx_gap(&model, &Matrix::scalar(0.0), 1e-3, &w).unwrap();
    assert_eq!(zero.max_action_gap, 0.0);
    let quiet = dac_approx_gap(&model, &Matrix::scalar(-0.3), 1e-3, &vec![vec![0.0]; 50]).unwrap();
    assert_eq!(quiet.max_cost_gap, 0.0);
    let gap = dac_approx_gap(&model, &Matrix::scalar(-0.3), 1e-3, &w).unwrap();
    // p = ⌈4 ln(0.3·0.25/(0.25·1e−3))⌉ = ⌈4 ln 300⌉
    assert_eq!(gap.p_required, (4.0 * 300.0_f64.ln()).ceil() as usize);
    assert!(gap.max_action_gap <= 1e-3);
    let unstable = dac_approx_gap(&model, &Matrix::scalar(0.5), 1e-3, &w);
    assert!(unstable.is_err());
}

#[test]
fn accurate_predictions_shrink_the_radicand() {
    let spec = builtin_scenario("D").unwrap();
    let grads = spec.true_gradients().unwrap();
    let preds = gen_predictions(&spec, &grads, 0).unwrap();
    let trace = run_episode(ControllerKind::OptFtrlC, &spec, Some(&preds), &EpisodeOptions::default()).unwrap();
    let t3 = regret_bound(RegretBound::Optimistic, &trace, &trace.constants, 0.0).unwrap();
    let g: Vec<f64> = grads.iter().map(|g| adactl_core::cost::g_signal(g)).collect();
    let t2 = radicand_decayed(&g, spec.system.delta());
    // a flipped prediction doubles the error, and the signal is quadratic
    // here, so the expected ratio is 4(1 − φ) = 0.8
    let ratio = t3.radicand / t2;
    assert!(ratio < 1.0 && (ratio - 0.8).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn perfect_predictions_leave_only_the_clamped_error() {
    let mut spec = builtin_scenario("D").unwrap();
    spec.predictions = PredictionPolicy::SignFlip { phi: 1.0 };
    let grads = spec.true_gradients().unwrap();
    let preds = gen_predictions(&spec, &grads, 7).unwrap();
    assert!(preds.iter().zip(&grads).all(|(a, b)| a == b));
    let trace = run_episode(ControllerKind::OptFtrlC, &spec, Some(&preds), &EpisodeOptions::default()).unwrap();
    let t3 = regret_bound(RegretBound::Optimistic, &trace, &trace.constants, 0.0).unwrap();
    assert_eq!(t3.radicand, 0.0);
    let _ = GradientMatrix::zeros(1, 1, 1);
}
