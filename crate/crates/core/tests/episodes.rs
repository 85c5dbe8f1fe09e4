mod common;

use adactl_core::scenario::{gen_predictions, BUILTIN_NAMES};
use adactl_core::{builtin_scenario, run_episode, ControllerKind, EpisodeOptions, RunTrace, ScenarioSpec};

fn run(kind: ControllerKind, spec: &ScenarioSpec, seed: u64, record: bool) -> RunTrace {
    let preds = match kind {
        ControllerKind::OptFtrlC => Some(gen_predictions(spec, &spec.true_gradients().unwrap(), seed).unwrap()),
        _ => None,
    };
    let opts = EpisodeOptions { sigma: None, record_iterates: record };
    run_episode(kind, spec, preds.as_ref(), &opts).unwrap()
}

#[test]
fn traces_have_one_row_per_step_and_prefix_sums() {
    for name in BUILTIN_NAMES {
        let spec = builtin_scenario(name).unwrap().with_horizon(700).unwrap();
        for kind in ControllerKind::ALL {
            if kind == ControllerKind::OptFtrlC && name != "C" && name != "D" {
                continue;
            }
            let tr = run(kind, &spec, 1, false);
            assert_eq!(tr.rows.len(), 700);
            let mut cum = 0.0;
            for (i, row) in tr.rows.iter().enumerate() {
                assert_eq!(row.t, i + 1);
                cum += row.cost;
                assert!((row.cum_cost - cum).abs() <= 1e-9 * cum.abs().max(1.0));
                assert!(row.w.iter().all(|w| w.abs() <= spec.system.w_bound() * (1.0 + 1e-12)));
            }
        }
    }
}

#[test]
fn nu_hat_bounds_hold_along_builtin_runs() {
    for name in BUILTIN_NAMES {
        let spec = builtin_scenario(name).unwrap();
        for kind in [ControllerKind::FtrlC, ControllerKind::AdaFtrlC] {
            let tr = run(kind, &spec, 0, false);
            assert!(tr.nu_violations().is_empty(), "{name} {kind}: {:?}", &tr.nu_violations()[..3.min(tr.nu_violations().len())]);
        }
    }
    for name in ["C", "D"] {
        let tr = run(ControllerKind::OptFtrlC, &builtin_scenario(name).unwrap(), 3, false);
        assert!(tr.nu_violations().is_empty());
    }
}

#[test]
fn runs_are_deterministic() {
    let spec = builtin_scenario("C").unwrap().with_horizon(800).unwrap();
    for kind in ControllerKind::ALL {
        assert_eq!(run(kind, &spec, 5, true), run(kind, &spec, 5, true));
    }
}

/// `||M_{t−i−1} − M_t|| ≤ Σ_{s=t−i−1}^{t−1} ||Ĝ_s|| / σ_{1:t} + κσ h_{t−i:t} / (√h_1 σ_{1:t})`,
/// with `Ĝ_s = G_s`, or `G_s − G̃_s` for the optimistic controller; for
/// FTRL-C the right side is further bounded by `(i+1)h_t/(σ√h_{1:t})(1 + κσ/√h_1)`.
fn check_iterate_distances(kind: ControllerKind, spec: &ScenarioSpec, seed: u64) {
    let tr = run(kind, spec, seed, true);
    let grads = spec.true_gradients().unwrap();
    let diffs: Vec<f64> = match kind {
        ControllerKind::OptFtrlC => {
            let preds = gen_predictions(spec, &grads, seed).unwrap();
            grads.iter().zip(preds.iter()).map(|(g, p)| g.sub(p).frobenius()).collect()
        }
        _ => grads.iter().map(|g| g.frobenius()).collect(),
    };
    let sigma = tr.sigma_scale.unwrap();
    let kappa = spec.kappa_m;
    let h: Vec<f64> = tr.rows.iter().map(|r| r.h.unwrap()).collect();
    let Some(start) = h.iter().position(|&v| v > 0.0) else { return };
    let h1 = h[start];
    let mut h_prefix = vec![0.0; h.len() + 1];
    for (k, v) in h.iter().enumerate() {
        h_prefix[k + 1] = h_prefix[k] + v;
    }
    let mut checked = 0;
    for t in (start + 3..=h.len()).step_by(7) {
        let sig_total = sigma * h_prefix[t].sqrt();
        for i in 0..30.min(t - start - 2) {
            let a = t - i - 1;
            let lhs = tr.iterates[a - 1].sub(&tr.iterates[t - 1]).frobenius();
            let grad_part: f64 = diffs[a - 1..t - 1].iter().sum::<f64>() / sig_total;
            let h_part = kappa * sigma * (h_prefix[t] - h_prefix[t - i - 1]) / (h1.sqrt() * sig_total);
            let rhs = if kind == ControllerKind::FtrlC {
                (i + 1) as f64 * h[t - 1] / (sigma * h_prefix[t].sqrt()) * (1.0 + kappa * sigma / h1.sqrt())
            } else {
                grad_part + h_part
            };
            assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{kind} t={t} i={i}: {lhs} > {rhs}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn iterate_distances_stay_within_bounds() {
    for name in ["A", "B", "E_alt200_small", "F_alt200_large"] {
        let spec = builtin_scenario(name).unwrap().with_horizon(1500).unwrap();
        check_iterate_distances(ControllerKind::FtrlC, &spec, 0);
        check_iterate_distances(ControllerKind::AdaFtrlC, &spec, 0);
    }
    for name in ["C", "D"] {
        let spec = builtin_scenario(name).unwrap().with_horizon(1500).unwrap();
        check_iterate_distances(ControllerKind::OptFtrlC, &spec, 2);
    }
}
