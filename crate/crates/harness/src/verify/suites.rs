use adactl_core::cost::{advance_sensitivity, cost, gradient, CostSpec, SensitivityState};
use adactl_core::hindsight::{dac_approx_gap, state_deviation_pairs, RegretBound};
use adactl_core::lti::rollout_stationary;
use adactl_core::policy::{action, block_norm_sum};
use adactl_core::scenario::BUILTIN_NAMES;
use adactl_core::schedule::{check_sqrt_sum, Weight};
use adactl_core::{
    builtin_scenario, run_episode, solve_benchmark, regret_bound, BoundConstants, ControllerKind, ControllerState,
    DisturbanceWindow, EpisodeOptions, FeasibleSet, GradientMatrix, Matrix, PolicyParams, ScheduleState,
    ScheduleVariant, SystemModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles::*;
use super::{SuiteFn, Tally, VerifyContext};
use crate::run::predictions_for;

pub(super) const ALL: [(&str, SuiteFn); 12] = [
    ("rollout_equivalence", rollout_equivalence),
    ("projection", projection),
    ("gradient_fd", gradient_fd),
    ("schedule_bruteforce", schedule_bruteforce),
    ("adagrad_reduction", adagrad_reduction),
    ("sqrt_sum_inequality", sqrt_sum_inequality),
    ("closed_form_update", closed_form_update),
    ("deviation_bounds", deviation_bounds),
    ("iterate_distance", iterate_distance),
    ("state_deviation", state_deviation),
    ("approximation_gap", approximation_gap),
    ("regret_bounds", regret_bounds),
];

fn rng(ctx: &VerifyContext, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(ctx.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn rollout_equivalence(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 1);
    for inst in 0..500 {
        let (dx, du, p) = (r.gen_range(1..=3), r.gen_range(1..=2), r.gen_range(1..=5));
        let model = model(&mut r, dx, du, 1.5, 1.0);
        let m = params(&mut r, p, du, dx, 2.0);
        let horizon = r.gen_range(1..=200);
        let w = disturbances(&mut r, horizon, dx, 1.0);
        // iterative simulation with the library's action and step
        let mut win = DisturbanceWindow::new(p, dx);
        let mut x = vec![0.0; dx];
        let mut states = vec![x.clone()];
        for wt in &w {
            let u = match action(&m, model.k(), &x, &win) {
                Ok(u) => u,
                Err(e) => return t.error(e),
            };
            x = adactl_core::lti::step(&model, &x, &u, wt).expect("shapes checked");
            win.push(wt);
            states.push(x.clone());
        }
        let (naive, _) = naive_replay(&model, &m, &w);
        let mut probes: Vec<usize> = (0..4).map(|_| r.gen_range(1..=horizon)).collect();
        probes.push(horizon);
        for s in probes {
            match rollout_stationary(&model, &m, &w, s) {
                Ok(got) => {
                    let ok = got.iter().zip(&states[s]).zip(&naive[s]).all(|((g, a), b)| {
                        (g - a).abs() <= 1e-9 * (1.0 + a.abs()) && (g - b).abs() <= 1e-9 * (1.0 + b.abs())
                    });
                    t.check(ok, || format!("instance {inst}, t = {s}: {got:?} vs {:?}", states[s]));
                }
                Err(e) => t.error(e),
            }
        }
    }
}

fn projection(ctx: &VerifyContext, t: &mut Tally) {
    let project = ctx.project;
    let mut r = rng(ctx, 2);
    let feasible_draws = if ctx.full() { 1000 } else { 400 };
    for inst in 0..500 {
        let (p, du, dx) = (r.gen_range(1..=5), r.gen_range(1..=2), r.gen_range(1..=2));
        let kappa = r.gen_range(0.2..3.0);
        let set = FeasibleSet::new(kappa, p).expect("valid set");
        // infeasible by construction
        let mut m = params(&mut r, p, du, dx, 3.0);
        let s = block_norm_sum(&m);
        if s <= kappa {
            m = m.scaled(2.0 * kappa / s.max(1e-12));
        }
        let pm = project(&m, &set);
        t.check(block_norm_sum(&pm) <= kappa + 1e-9, || format!("instance {inst}: infeasible output"));
        let reference = bisection_project(&m, kappa);
        t.check(pm.sub(&reference).frobenius() <= 1e-8, || format!("instance {inst}: differs from bisection"));
        let d = pm.sub(&m).frobenius();
        let mut worst = f64::INFINITY;
        for _ in 0..feasible_draws {
            let z = feasible(&mut r, p, du, dx, kappa);
            worst = worst.min(z.sub(&m).frobenius());
        }
        t.check(d <= worst + 1e-7, || format!("instance {inst}: a feasible point is closer ({worst} < {d})"));
        let again = project(&pm, &set);
        t.check(again.sub(&pm).frobenius() <= 1e-12 * (1.0 + pm.frobenius()), || format!("instance {inst}: not idempotent"));
        let other = params(&mut r, p, du, dx, 3.0);
        let po = project(&other, &set);
        t.check(po.sub(&pm).frobenius() <= other.sub(&m).frobenius() + 1e-12, || {
            format!("instance {inst}: expansive")
        });
        t.check(po.sub(&pm).frobenius() <= 2.0 * kappa + 1e-9, || format!("instance {inst}: diameter"));
    }
}

fn gradient_fd(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 3);
    for inst in 0..200 {
        let dim = if inst % 2 == 0 { 1 } else { 2 };
        let p = r.gen_range(1..=3);
        let model = model(&mut r, dim, dim, 1.5, 1.0);
        let theta = uniform(&mut r, 2 * dim, 3.0);
        let l = theta.iter().map(|v| v * v).sum::<f64>().sqrt() + 1.0;
        let spec = CostSpec::new(theta, l, 1.0).expect("l covers theta");
        let horizon = r.gen_range(1..=50);
        let w = disturbances(&mut r, horizon, dim, 1.0);
        let m = params(&mut r, p, dim, dim, 1.0);
        let mut sens = SensitivityState::for_model(&model, p);
        for wt in &w[..horizon - 1] {
            advance_sensitivity(&mut sens, &model, wt).expect("shapes checked");
        }
        let g = gradient(&spec, &sens).expect("shapes checked");
        let at = |m: &PolicyParams| {
            let (xs, us) = naive_replay(&model, m, &w);
            cost(&spec, &xs[horizon - 1], &us[horizon - 1]).expect("shapes checked")
        };
        let h = 1e-6;
        for k in 0..m.as_slice().len() {
            let (mut plus, mut minus) = (m.clone(), m.clone());
            plus.as_mut_slice()[k] += h;
            minus.as_mut_slice()[k] -= h;
            let fd = (at(&plus) - at(&minus)) / (2.0 * h);
            let an = g.as_slice()[k];
            t.check((fd - an).abs() <= 1e-5 * an.abs().max(1.0), || format!("instance {inst}, coord {k}: {fd} vs {an}"));
        }
    }
}

fn schedule_bruteforce(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 4);
    let runs = if ctx.full() { 20 } else { 6 };
    for run in 0..runs {
        let len = if run < 2 { 2000 } else { r.gen_range(1..=2000) };
        let delta = r.gen_range(0.01..=1.0);
        let lead = r.gen_range(0..4);
        let sig: Vec<f64> =
            (0..len).map(|i| if i < lead || r.gen_bool(0.1) { 0.0 } else { r.gen_range(0.0..10.0) }).collect();
        for (variant, clamp) in [(ScheduleVariant::DecayedMemory, false), (ScheduleVariant::Optimistic, true)] {
            let want = decayed_h(&sig, delta, clamp);
            let mut s = ScheduleState::new(variant, 1.0, delta).expect("valid schedule");
            let (mut sum_sigma, mut prefix) = (0.0, 0.0);
            let mut ok = true;
            for (k, &a) in sig.iter().enumerate() {
                let (h, sigma) = s.push_signal(a).expect("non-negative signal");
                prefix += want[k];
                sum_sigma += sigma;
                ok &= rel_close(h, want[k], 1e-10) && rel_close(sum_sigma, prefix.sqrt(), 1e-10) && sigma >= 0.0;
            }
            t.check(ok, || format!("run {run} ({variant:?}, δ = {delta}, T = {len}) deviates"));
        }
        let mut s = ScheduleState::new(ScheduleVariant::MaxAdaptive, 1.0, delta).expect("valid schedule");
        let mut running = 0.0_f64;
        let mut ok = true;
        for &a in &sig {
            running = running.max(a);
            ok &= s.push_signal(a).expect("non-negative signal").0 == running;
        }
        t.check(ok, || format!("run {run}: running max deviates"));
    }
}

fn adagrad_reduction(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 5);
    for run in 0..20 {
        let sig: Vec<f64> = (0..500).map(|_| if r.gen_bool(0.1) { 0.0 } else { r.gen_range(0.0..5.0) }).collect();
        let start = sig.iter().position(|&a| a > 0.0).unwrap_or(sig.len());
        let mut s = ScheduleState::new(ScheduleVariant::DecayedMemory, 1.0, 1.0).expect("valid schedule");
        let ok = sig.iter().enumerate().all(|(k, &a)| {
            let h = s.push_signal(a).expect("non-negative").0;
            k < start || h == a
        });
        t.check(ok, || format!("run {run}: δ = 1 schedule differs from the per-step signal"));
    }
}

fn sqrt_sum_inequality(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 6);
    for trial in 0..500 {
        let n = r.gen_range(1..150);
        let delta = r.gen_range(0.02..=1.0);
        let a: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.2) { 0.0 } else { r.gen_range(0.0..5.0) }).collect();
        let a0 = if r.gen_bool(0.5) { 0.0 } else { r.gen_range(0.0..3.0) };
        match check_sqrt_sum(&a, delta, Weight::InvSqrt, a0) {
            Ok((lhs, rhs)) => t.check(lhs <= rhs * (1.0 + 1e-12) + 1e-12, || format!("trial {trial}: {lhs} > {rhs}")),
            Err(e) => t.error(e),
        }
    }
}

/// Minimizes `Σ σ_s/2 ||M − M_s||² + ⟨C, M⟩` over the set by projected
/// gradient with step `1/(2σ_{1:t})` and the bisection projection.
fn pgd_argmin(anchor: &PolicyParams, total: f64, c: &GradientMatrix, kappa: f64) -> PolicyParams {
    let mut m = PolicyParams::zeros(c.p(), c.du(), c.dx());
    for _ in 0..5000 {
        let mut grad = m.scaled(total);
        grad.axpy(-1.0, anchor);
        grad.axpy(1.0, c);
        let mut y = m.clone();
        y.axpy(-0.5 / total, &grad);
        let next = bisection_project(&y, kappa);
        let moved = next.sub(&m).frobenius();
        m = next;
        if moved < 1e-15 {
            break;
        }
    }
    m
}

fn closed_form_update(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 7);
    for kind in [ControllerKind::FtrlC, ControllerKind::AdaFtrlC, ControllerKind::OptFtrlC] {
        for ep in 0..100 {
            let (p, dx, du) = (3, r.gen_range(1..=2), r.gen_range(1..=2));
            let kappa = r.gen_range(0.5..3.0);
            let c = BoundConstants::new(2.0, 5.0, 0.5, kappa, 1.0, 0.3, p, dx, du);
            let mut ctrl = ControllerState::new(kind, &c, du, dx, None, None).expect("valid controller");
            let horizon = 12;
            let grads: Vec<GradientMatrix> = (0..horizon).map(|_| params(&mut r, p, du, dx, 3.0)).collect();
            let preds: Vec<GradientMatrix> = grads.iter().map(|g| g.sub(&params(&mut r, p, du, dx, 1.0))).collect();
            if kind == ControllerKind::OptFtrlC {
                for (s, g) in preds.iter().enumerate() {
                    ctrl.receive_prediction(s + 1, g.clone()).expect("future step");
                }
            }
            let mut anchor = PolicyParams::zeros(p, du, dx);
            let mut lin = GradientMatrix::zeros(p, du, dx);
            if kind == ControllerKind::OptFtrlC {
                preds.iter().for_each(|g| lin.axpy(1.0, g));
            }
            for (k, g) in grads.iter().enumerate() {
                let before = ctrl.m().clone();
                let info = match ctrl.update(g) {
                    Ok(i) => i,
                    Err(e) => return t.error(e),
                };
                anchor.axpy(info.sigma.unwrap_or(0.0), &before);
                lin.axpy(1.0, g);
                if kind == ControllerKind::OptFtrlC {
                    lin.axpy(-1.0, &preds[k]);
                }
                let total = info.sigma_prefix.unwrap_or(0.0);
                if total == 0.0 {
                    continue;
                }
                let want = pgd_argmin(&anchor, total, &lin, kappa);
                let gap = ctrl.m().sub(&want).frobenius();
                t.check(gap <= 1e-6, || format!("{kind} episode {ep} step {}: off by {gap}", k + 1));
            }
        }
    }
}

fn builtin_runs(ctx: &VerifyContext, horizon: usize) -> Vec<(String, ControllerKind, u64)> {
    let mut out = Vec::new();
    for name in BUILTIN_NAMES {
        out.push((name.to_string(), ControllerKind::FtrlC, 0));
        out.push((name.to_string(), ControllerKind::AdaFtrlC, 0));
        if name == "C" || name == "D" {
            let seeds = if ctx.full() { 10 } else { 2 };
            out.extend((0..seeds).map(|s| (name.to_string(), ControllerKind::OptFtrlC, s)));
        }
    }
    let _ = horizon;
    out
}

fn deviation_bounds(ctx: &VerifyContext, t: &mut Tally) {
    for (name, kind, seed) in builtin_runs(ctx, 5000) {
        let spec = builtin_scenario(&name).expect("builtin");
        let run = predictions_for(kind, &spec, seed)
            .map_err(|e| e.to_string())
            .and_then(|p| run_episode(kind, &spec, p.as_ref(), &EpisodeOptions::default()).map_err(|e| e.to_string()));
        match run {
            Ok(tr) => {
                let v = tr.nu_violations();
                t.check(v.is_empty(), || format!("{name} {kind} seed {seed}: ν > ν̂ at steps {:?}", &v[..v.len().min(5)]));
            }
            Err(e) => t.error(e),
        }
    }
}

fn iterate_distance(ctx: &VerifyContext, t: &mut Tally) {
    let horizon = if ctx.full() { 5000 } else { 1500 };
    let mut r = rng(ctx, 9);
    for name in BUILTIN_NAMES {
        let spec = builtin_scenario(name).expect("builtin").with_horizon(horizon).expect("valid horizon");
        let kinds: &[ControllerKind] = if name == "C" || name == "D" {
            &[ControllerKind::FtrlC, ControllerKind::AdaFtrlC, ControllerKind::OptFtrlC]
        } else {
            &[ControllerKind::FtrlC, ControllerKind::AdaFtrlC]
        };
        for &kind in kinds {
            let preds = match predictions_for(kind, &spec, 0) {
                Ok(p) => p,
                Err(e) => return t.error(e),
            };
            let opts = EpisodeOptions { sigma: None, record_iterates: true };
            let tr = match run_episode(kind, &spec, preds.as_ref(), &opts) {
                Ok(tr) => tr,
                Err(e) => return t.error(e),
            };
            let grads = spec.true_gradients().expect("valid scenario");
            let diffs: Vec<f64> = match &preds {
                Some(p) => grads.iter().zip(p.iter()).map(|(g, q)| g.sub(q).frobenius()).collect(),
                None => grads.iter().map(|g| g.frobenius()).collect(),
            };
            let sigma = tr.sigma_scale.unwrap_or(0.0);
            let h: Vec<f64> = tr.rows.iter().map(|row| row.h.unwrap_or(0.0)).collect();
            let Some(start) = h.iter().position(|&v| v > 0.0) else { continue };
            let h1 = h[start];
            let mut hp = vec![0.0; h.len() + 1];
            for (k, v) in h.iter().enumerate() {
                hp[k + 1] = hp[k] + v;
            }
            for _ in 0..300 {
                let now = r.gen_range(start + 3..=horizon);
                let i = r.gen_range(0..(now - start - 2).min(50));
                let before = now - i - 1;
                let lhs = tr.iterates[before - 1].sub(&tr.iterates[now - 1]).frobenius();
                let total = sigma * hp[now].sqrt();
                let rhs = if kind == ControllerKind::FtrlC {
                    (i + 1) as f64 * h[now - 1] / total * (1.0 + spec.kappa_m * sigma / h1.sqrt())
                } else {
                    diffs[before - 1..now - 1].iter().sum::<f64>() / total
                        + spec.kappa_m * sigma * (hp[now] - hp[now - i - 1]) / (h1.sqrt() * total)
                };
                t.check(lhs <= rhs * (1.0 + 1e-9) + 1e-12, || format!("{name} {kind} t={now} i={i}: {lhs} > {rhs}"));
            }
        }
    }
}

fn state_deviation(ctx: &VerifyContext, t: &mut Tally) {
    let mut r = rng(ctx, 10);
    for trial in 0..500 {
        let (dx, du) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let model = model(&mut r, dx, du, 1.0, 1.0);
        let n = r.gen_range(1..60);
        let w = disturbances(&mut r, n, dx, 1.0);
        let u1: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut r, du, 2.0)).collect();
        let u2: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut r, du, 2.0)).collect();
        match state_deviation_pairs(&model, &u1, &u2, &w) {
            Ok(pairs) => {
                let bad = pairs.iter().position(|(l, r)| l > &(r + 1e-12));
                t.check(bad.is_none(), || format!("trial {trial}: violated at step {}", bad.unwrap_or(0) + 1));
            }
            Err(e) => t.error(e),
        }
    }
}

fn approximation_gap(_: &VerifyContext, t: &mut Tally) {
    let model = SystemModel::scalar(0.75, 1.0, 0.25, 0.25).expect("stable");
    let w = vec![vec![0.25]; 2000];
    match dac_approx_gap(&model, &Matrix::scalar(-0.3), 1e-3, &w) {
        Ok(g) => t.check(g.max_action_gap <= 1e-3, || format!("action gap {} at p = {}", g.max_action_gap, g.p_required)),
        Err(e) => t.error(e),
    }
    match dac_approx_gap(&model, &Matrix::scalar(0.0), 1e-3, &w) {
        Ok(g) => t.check(g.max_cost_gap == 0.0, || "zero policy has a gap".into()),
        Err(e) => t.error(e),
    }
}

fn regret_bounds(ctx: &VerifyContext, t: &mut Tally) {
    let horizon = if ctx.full() { 5000 } else { 1000 };
    for (name, kind, seed) in builtin_runs(ctx, horizon) {
        let spec = builtin_scenario(&name).expect("builtin").with_horizon(horizon).expect("valid horizon");
        let outcome = (|| -> Result<_, String> {
            let preds = predictions_for(kind, &spec, seed).map_err(|e| e.to_string())?;
            let tr = run_episode(kind, &spec, preds.as_ref(), &EpisodeOptions::default()).map_err(|e| e.to_string())?;
            let bench = solve_benchmark(&spec).map_err(|e| e.to_string())?;
            let regret = tr.learner_cost() - bench.benchmark_cost;
            let bound = RegretBound::for_controller(kind).expect("adaptive controller");
            regret_bound(bound, &tr, &tr.constants, regret).map_err(|e| e.to_string())
        })();
        match outcome {
            Ok(rep) => t.check(rep.satisfied, || {
                format!("{name} {kind} seed {seed}: regret {} > bound {}", rep.regret, rep.rhs_value)
            }),
            Err(e) => t.error(e),
        }
    }
}
