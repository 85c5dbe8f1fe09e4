//! End-to-end acceptance criteria: cost orderings on the builtin scenarios,
//! regret-bound satisfaction, growth of the regret, the payoff of exact
//! predictions, the property suites and the truncation gap of the DAC
//! parameterization.
//!
//! Every criterion evaluates to an [`Outcome`]; nothing is asserted here, so
//! a failing criterion is reported alongside the measured magnitudes.

use std::time::{Duration, Instant};

use adactl_core::cost::g_signal;
use adactl_core::hindsight::{dac_approx_gap, radicand_decayed, radicand_max, RegretBound};
use adactl_core::scenario::BUILTIN_NAMES;
use adactl_core::{
    builtin_scenario, run_episode, solve_benchmark, regret_bound, ControllerKind, EpisodeOptions, Matrix, PredictionPolicy,
    RunTrace, ScenarioSpec, SystemModel,
};
use adactl_harness::run::predictions_for;
use adactl_harness::verify::{run_suites, Level, VerifyContext};
use adactl_harness::Result;

use ControllerKind::{AdaFtrlC as Ada, BasicFtrl as Basic, FtrlC as Ftrl, Gpc, OptFtrlC as Opt};

/// Prediction seeds averaged over for the optimistic controller.
pub const PREDICTION_SEEDS: u64 = 10;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

fn timed(id: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id: id.to_string(), passed, detail, elapsed: start.elapsed() }
}

fn spec(name: &str) -> Result<ScenarioSpec> {
    Ok(builtin_scenario(name)?)
}

fn episode(kind: ControllerKind, spec: &ScenarioSpec, seed: u64) -> Result<RunTrace> {
    let preds = predictions_for(kind, spec, seed)?;
    Ok(run_episode(kind, spec, preds.as_ref(), &EpisodeOptions::default())?)
}

fn cost(kind: ControllerKind, spec: &ScenarioSpec) -> Result<f64> {
    Ok(episode(kind, spec, 0)?.learner_cost())
}

fn mean_cost(kind: ControllerKind, spec: &ScenarioSpec) -> Result<f64> {
    let mut total = 0.0;
    for seed in 0..PREDICTION_SEEDS {
        total += episode(kind, spec, seed)?.learner_cost();
    }
    Ok(total / PREDICTION_SEEDS as f64)
}

fn fmt_costs(pairs: &[(&str, f64)]) -> String {
    pairs.iter().map(|(n, v)| format!("{n} {v:.0}")).collect::<Vec<_>>().join(", ")
}

pub fn ordering_a() -> Outcome {
    let mut out = timed("1A", || {
        let s = spec("A")?;
        let (f, a, g) = (cost(Ftrl, &s)?, cost(Ada, &s)?, cost(Gpc, &s)?);
        Ok((f < g && f < a, format!("ftrl < gpc and ftrl < adaftrl: {}", fmt_costs(&[("ftrl", f), ("gpc", g), ("adaftrl", a)]))))
    });
    let limit = Duration::from_secs(5);
    if out.elapsed >= limit {
        out.passed = false;
    }
    out.detail += &format!("; runtime {:.2}s (limit 5s)", out.elapsed.as_secs_f64());
    out
}

pub fn ordering_b() -> Outcome {
    timed("1B", || {
        let s = spec("B")?;
        let (f, a, g) = (cost(Ftrl, &s)?, cost(Ada, &s)?, cost(Gpc, &s)?);
        Ok((a < f && f < g, format!("adaftrl < ftrl < gpc: {}", fmt_costs(&[("adaftrl", a), ("ftrl", f), ("gpc", g)]))))
    })
}

pub fn ordering_c() -> Outcome {
    timed("1C", || {
        let s = spec("C")?;
        let (f, a, g) = (cost(Ftrl, &s)?, cost(Ada, &s)?, cost(Gpc, &s)?);
        let o = mean_cost(Opt, &s)?;
        let ok = g < a && a < f && o > f.max(a).max(g) && o > 0.0;
        Ok((
            ok,
            format!(
                "gpc < adaftrl < ftrl < optftrl(phi 0.2, mean of {PREDICTION_SEEDS} seeds) with optftrl > 0: {}",
                fmt_costs(&[("gpc", g), ("adaftrl", a), ("ftrl", f), ("optftrl", o)])
            ),
        ))
    })
}

pub fn ordering_d() -> Outcome {
    timed("1D", || {
        let s = spec("D")?;
        let (o, g) = (mean_cost(Opt, &s)?, cost(Gpc, &s)?);
        Ok((o < g, format!("optftrl(phi 0.8, mean of {PREDICTION_SEEDS} seeds) < gpc: {}", fmt_costs(&[("optftrl", o), ("gpc", g)]))))
    })
}

pub fn ordering_e() -> Outcome {
    timed("1E", || {
        let s = spec("E")?;
        let (a, g) = (cost(Ada, &s)?, cost(Gpc, &s)?);
        let ok = a < 0.0 && a <= 2.0 * g.min(0.0);
        Ok((ok, format!("adaftrl saves at least twice gpc: {} (factor {:.2})", fmt_costs(&[("adaftrl", a), ("gpc", g)]), a / g)))
    })
}

pub fn ordering_f() -> Outcome {
    timed("1F", || {
        let s = spec("F")?;
        let (f, a) = (cost(Ftrl, &s)?, cost(Ada, &s)?);
        Ok((f < a, format!("ftrl < adaftrl: {}", fmt_costs(&[("ftrl", f), ("adaftrl", a)]))))
    })
}

/// Every builtin with FTRL-C and AdaFTRL-C, plus OptFTRL-C wherever the
/// scenario has predictions.
fn bound_runs() -> Vec<(&'static str, ControllerKind, u64)> {
    let mut runs = Vec::new();
    for name in BUILTIN_NAMES {
        runs.push((name, Ftrl, 0));
        runs.push((name, Ada, 0));
        if builtin_scenario(name).map(|s| s.predictions != PredictionPolicy::None).unwrap_or(false) {
            runs.extend((0..PREDICTION_SEEDS).map(|seed| (name, Opt, seed)));
        }
    }
    runs
}

pub fn regret_bounds() -> Outcome {
    let mut out = timed("2", || {
        let mut checked = 0;
        let mut violations = Vec::new();
        let mut tightest = (f64::NEG_INFINITY, String::new());
        for name in BUILTIN_NAMES {
            let s = spec(name)?;
            let bench = solve_benchmark(&s)?;
            for &(_, kind, seed) in bound_runs().iter().filter(|r| r.0 == name) {
                let tr = episode(kind, &s, seed)?;
                let regret = tr.learner_cost() - bench.benchmark_cost;
                let bound = RegretBound::for_controller(kind).expect("adaptive");
                let rep = regret_bound(bound, &tr, &tr.constants, regret)?;
                checked += 1;
                let frac = rep.regret / rep.rhs_value;
                if frac > tightest.0 {
                    tightest = (frac, format!("{name} {kind} seed {seed}"));
                }
                if !rep.satisfied {
                    violations.push(format!("{name} {kind} seed {seed}: {:.0} > {:.0}", rep.regret, rep.rhs_value));
                }
            }
        }
        Ok((
            violations.is_empty(),
            format!(
                "{checked} runs, {} violations{}; largest regret/bound {:.4} ({})",
                violations.len(),
                if violations.is_empty() { String::new() } else { format!(" [{}]", violations.join("; ")) },
                tightest.0,
                tightest.1
            ),
        ))
    });
    if out.elapsed >= Duration::from_secs(30) {
        out.passed = false;
    }
    out.detail += &format!("; runtime {:.2}s (limit 30s)", out.elapsed.as_secs_f64());
    out
}

pub fn sublinearity() -> Outcome {
    timed("3", || {
        let mut ratios = Vec::new();
        for t in [500, 1000, 2000, 5000] {
            let s = spec("A")?.with_horizon(t)?;
            let tr = episode(Ftrl, &s, 0)?;
            let regret = tr.learner_cost() - solve_benchmark(&s)?.benchmark_cost;
            let signals: Vec<f64> = tr.rows.iter().map(|r| r.signal.unwrap_or(0.0)).collect();
            ratios.push((t, regret / radicand_max(&signals).sqrt()));
        }
        let vals: Vec<f64> = ratios.iter().map(|r| r.1).collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = if min > 0.0 { max / min } else { f64::INFINITY };
        let listed: Vec<String> = ratios.iter().map(|(t, r)| format!("T={t}: {r:.3}")).collect();
        Ok((spread <= 3.0, format!("max/min {spread:.2} (limit 3); {}", listed.join(", "))))
    })
}

pub fn optimism_payoff() -> Outcome {
    timed("4", || {
        let mut s = spec("D")?;
        s.predictions = PredictionPolicy::SignFlip { phi: 1.0 };
        let bench = solve_benchmark(&s)?;
        let mut worst_opt = f64::NEG_INFINITY;
        let mut radicand = 0.0_f64;
        for seed in 0..PREDICTION_SEEDS {
            let tr = episode(Opt, &s, seed)?;
            let rep = regret_bound(RegretBound::Optimistic, &tr, &tr.constants, 0.0)?;
            radicand = radicand.max(rep.radicand);
            worst_opt = worst_opt.max(tr.learner_cost() - bench.benchmark_cost);
        }
        let mut others = Vec::new();
        for kind in [Ftrl, Ada, Gpc, Basic] {
            others.push((kind.name(), cost(kind, &s)? - bench.benchmark_cost));
        }
        let beaten = others.iter().all(|&(_, r)| worst_opt <= r);
        Ok((
            radicand == 0.0 && beaten,
            format!(
                "optimistic radicand {radicand:e}; optftrl regret {worst_opt:.3} (worst of {PREDICTION_SEEDS} seeds) vs {}",
                others.iter().map(|(n, r)| format!("{n} {r:.0}")).collect::<Vec<_>>().join(", ")
            ),
        ))
    })
}

/// The verification suites at the fast level, plus one line per suite.
pub fn property_suites() -> (Outcome, Vec<Outcome>) {
    let start = Instant::now();
    let results = run_suites(&VerifyContext::new(Level::Fast), None);
    let elapsed = start.elapsed();
    let per_suite: Vec<Outcome> = results
        .iter()
        .map(|r| Outcome {
            id: format!("5.{}", r.name),
            passed: r.passed,
            detail: if r.passed {
                format!("{} checks", r.checks)
            } else {
                format!("{} of {} checks failed: {}", r.failed, r.checks, r.failures.join("; "))
            },
            elapsed: r.elapsed,
        })
        .collect();
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    let within = elapsed < Duration::from_secs(60);
    let detail = format!(
        "{} suites, {} failed{}; runtime {:.2}s (limit 60s)",
        results.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) },
        elapsed.as_secs_f64()
    );
    (Outcome { id: "5".into(), passed: failed.is_empty() && within, detail, elapsed }, per_suite)
}

pub fn approximation_gap() -> Outcome {
    timed("6", || {
        let model = SystemModel::scalar(0.75, 1.0, 0.25, 0.25)?;
        let w = vec![vec![0.25]; 2000];
        let zeta = 1e-3;
        let gap = dac_approx_gap(&model, &Matrix::scalar(-0.3), zeta, &w)?;
        Ok((
            gap.max_action_gap <= zeta,
            format!(
                "p = {}, action gap {:e} (limit {zeta:e}), state gap {:e}",
                gap.p_required, gap.max_action_gap, gap.max_state_gap
            ),
        ))
    })
}

/// Scenario invariant: realized gradient norms stay below the declared `g`.
pub fn declared_gradient_bound() -> Outcome {
    timed("inv.g", || {
        let mut over = Vec::new();
        let mut listed = Vec::new();
        for name in BUILTIN_NAMES {
            let s = spec(name)?;
            let max = s.true_gradients()?.iter().map(|g| g.frobenius()).fold(0.0, f64::max);
            listed.push(format!("{name} {max:.2}/{}", s.g));
            if max > s.g {
                over.push(name);
            }
        }
        Ok((over.is_empty(), format!("max ||G_t|| / declared g: {}", listed.join(", "))))
    })
}

/// On scenario D the optimistic radicand should be far below the adaptive
/// one computed from the same gradients; "far" is read as one tenth.
pub fn optimistic_radicand() -> Outcome {
    timed("inv.radicand", || {
        let s = spec("D")?;
        let grads = s.true_gradients()?;
        let g: Vec<f64> = grads.iter().map(g_signal).collect();
        let t2 = radicand_decayed(&g, s.system.delta());
        let mut ratios = Vec::new();
        for seed in 0..PREDICTION_SEEDS {
            let tr = episode(Opt, &s, seed)?;
            ratios.push(regret_bound(RegretBound::Optimistic, &tr, &tr.constants, 0.0)?.radicand / t2);
        }
        let worst = ratios.iter().copied().fold(0.0, f64::max);
        Ok((worst <= 0.1, format!("optimistic/decayed radicand ratio up to {worst:.3} over {PREDICTION_SEEDS} seeds (limit 0.1)")))
    })
}

/// All criteria in order, the property suites expanded after criterion 5.
pub fn all() -> Vec<Outcome> {
    let mut out = vec![ordering_a(), ordering_b(), ordering_c(), ordering_d(), ordering_e(), ordering_f()];
    out.push(regret_bounds());
    out.push(sublinearity());
    out.push(optimism_payoff());
    let (summary, suites) = property_suites();
    out.push(summary);
    out.extend(suites);
    out.push(approximation_gap());
    out.push(declared_gradient_bound());
    out.push(optimistic_radicand());
    out
}
