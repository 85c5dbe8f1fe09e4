//! The observe–act–update loop.

use alloc::vec::Vec;

use crate::controller::{BoundConstants, ControllerKind, ControllerState};
use crate::cost::{advance_sensitivity, gradient_theta, linear_cost, SensitivityState};
use crate::error::Result;
use crate::linalg;
use crate::lti::{recover_disturbance, step};
use crate::policy::{action, PolicyParams};
use crate::scenario::{PredictionStream, ScenarioSpec};

#[derive(Clone, Debug, Default)]
pub struct EpisodeOptions {
    /// Replaces the prescribed σ of the adaptive controllers.
    pub sigma: Option<f64>,
    /// Keep every iterate `M_t` in the trace.
    pub record_iterates: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub cost: f64,
    pub cum_cost: f64,
    pub grad_norm: f64,
    /// `g_t`, or `ε_t` for the optimistic controller
    pub signal: Option<f64>,
    pub h: Option<f64>,
    pub sigma: Option<f64>,
    /// bound on `nu`
    pub nu_hat: Option<f64>,
    /// `|c_t(x_t, u_t) − c_t(x_t(M_t), u_t(M_t))|`, the gap to the stationary
    /// rollout of the current iterate
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub scenario: alloc::string::String,
    pub controller: ControllerKind,
    pub constants: BoundConstants,
    /// σ actually used, for the adaptive controllers
    pub sigma_scale: Option<f64>,
    /// η (GPC) or σ′ (basic FTRL)
    pub step_size: Option<f64>,
    pub rows: Vec<TraceRow>,
    pub final_m: PolicyParams,
    /// `M_1 … M_T` when requested
    pub iterates: Vec<PolicyParams>,
}

impl RunTrace {
    pub fn learner_cost(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_cost)
    }

    pub fn max_grad_norm(&self) -> f64 {
        self.rows.iter().map(|r| r.grad_norm).fold(0.0, f64::max)
    }

    /// Steps where the measured ν exceeds ν̂ (beyond a 1e−9 absolute slack).
    pub fn nu_violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.nu_hat.is_some_and(|b| r.nu > b + 1e-9))
            .map(|r| r.t)
            .collect()
    }
}

/// Runs one episode of `kind` on `spec`. The optimistic controller receives
/// every prediction upfront; missing predictions count as zero.
pub fn run_episode(
    kind: ControllerKind,
    spec: &ScenarioSpec,
    preds: Option<&PredictionStream>,
    opts: &EpisodeOptions,
) -> Result<RunTrace> {
    spec.validate()?;
    let model = &spec.system;
    model.require_zero_k()?;
    let constants = spec.constants();
    let (dx, du) = (model.dx(), model.du());
    let mut ctrl = ControllerState::new(kind, &constants, du, dx, Some(spec.horizon), opts.sigma)?;
    if let (ControllerKind::OptFtrlC, Some(preds)) = (kind, preds) {
        for (s, g) in preds.iter().enumerate().take(spec.horizon) {
            ctrl.receive_prediction(s + 1, g.clone())?;
        }
    }
    let streams = spec.streams();
    let mut sens = SensitivityState::for_model(model, spec.p);
    let mut x = alloc::vec![0.0; dx];
    let mut cum = 0.0;
    let mut rows = Vec::with_capacity(spec.horizon);
    let mut iterates = Vec::new();
    let mut nu_bound = NuBound::new(kind, &constants, ctrl.schedule().map(|s| s.sigma_scale()));

    for t in 1..=spec.horizon {
        let theta = &streams.theta[t - 1];
        let w = &streams.w[t - 1];
        let m = ctrl.m().clone();
        let inner = || -> Result<_> {
            let u = action(&m, model.k(), &x, sens.window())?;
            let c = linear_cost(theta, &x, &u)?;
            let g = gradient_theta(theta, &sens)?;
            let x_stat = sens.stationary_state(&m);
            let nu = linalg::dot(&theta[..dx], &linalg::sub(&x, &x_stat)).abs();
            let x_next = step(model, &x, &u, w)?;
            let w_rec = recover_disturbance(model, &x_next, &x, &u)?;
            Ok((u, c, g, nu, x_next, w_rec))
        };
        let (u, c, g, nu, x_next, w_rec) = inner().map_err(|e| e.at_step(t))?;
        advance_sensitivity(&mut sens, model, &w_rec).map_err(|e| e.at_step(t))?;
        let info = ctrl.update(&g).map_err(|e| e.at_step(t))?;
        let nu_hat = info.h.map(|h| nu_bound.push(h));
        cum += c;
        if opts.record_iterates {
            iterates.push(m);
        }
        rows.push(TraceRow {
            t,
            x: core::mem::replace(&mut x, x_next),
            u,
            w: w_rec,
            cost: c,
            cum_cost: cum,
            grad_norm: g.frobenius(),
            signal: info.signal,
            h: info.h,
            sigma: info.sigma,
            nu_hat,
            nu,
        });
    }
    Ok(RunTrace {
        scenario: spec.name.clone(),
        controller: kind,
        constants,
        sigma_scale: ctrl.schedule().map(|s| s.sigma_scale()),
        step_size: (!kind.is_adaptive()).then(|| ctrl.step_size()),
        rows,
        final_m: ctrl.m().clone(),
        iterates,
    })
}

/// Running ν̂_t, the bound on the gap between the executed cost and the cost
/// of the stationary rollout of the current iterate.
struct NuBound {
    kind: ControllerKind,
    c: BoundConstants,
    sigma: f64,
    h_prefix: f64,
    h_first: f64,
    /// `Σ_{i<n} (1−δ)^i h_{t−i:t}` over the steps since the first nonzero h
    decayed: f64,
    geometric: f64,
}

impl NuBound {
    fn new(kind: ControllerKind, c: &BoundConstants, sigma: Option<f64>) -> Self {
        NuBound { kind, c: *c, sigma: sigma.unwrap_or(0.0), h_prefix: 0.0, h_first: 0.0, decayed: 0.0, geometric: 0.0 }
    }

    fn push(&mut self, h: f64) -> f64 {
        if self.h_prefix == 0.0 && h == 0.0 {
            return 0.0;
        }
        if self.h_prefix == 0.0 {
            self.h_first = h;
        }
        self.h_prefix += h;
        let keep = 1.0 - self.c.delta;
        self.geometric = 1.0 + keep * self.geometric;
        self.decayed = keep * self.decayed + h * self.geometric;
        let (lz, d, k, s) = (self.c.l * self.c.z, self.c.delta, self.c.kappa_m, self.sigma);
        let root = libm::sqrt(self.h_prefix);
        let root1 = libm::sqrt(self.h_first);
        match self.kind {
            ControllerKind::FtrlC => lz * h / (d * d * s * root) * (1.0 + k * s / root1),
            _ => lz * (h / (s * root) + k / root1 * self.decayed / root),
        }
    }
}

/// The per-step costs of a trace.
pub fn step_costs(trace: &RunTrace) -> Vec<f64> {
    trace.rows.iter().map(|r| r.cost).collect()
}
