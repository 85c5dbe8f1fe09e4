//! The best fixed DAC policy in hindsight, policy regret, the regret-bound
//! right-hand sides, and the DAC-versus-linear-policy approximation gap.

use alloc::vec;
use alloc::vec::Vec;

use crate::controller::{BoundConstants, ControllerKind};
use crate::cost::linear_cost;
use crate::episode::RunTrace;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::lti::{step, DisturbanceWindow, SystemModel};
use crate::policy::{action, project, FeasibleSet, GradientMatrix, PolicyParams};
use crate::scenario::ScenarioSpec;

/// `argmin_{M ∈ set} ⟨C, M⟩`: all mass `−κ_M C^[j]/||C^[j]||` on the block
/// with the largest norm (lowest index on ties); zero when `C = 0`.
pub fn linear_argmin(c: &GradientMatrix, set: &FeasibleSet) -> PolicyParams {
    let norms = c.block_norms();
    let mut best = 0;
    for (j, &n) in norms.iter().enumerate() {
        if n > norms[best] {
            best = j;
        }
    }
    let mut m = PolicyParams::zeros(c.p(), c.du(), c.dx());
    let n = norms[best];
    if n > 0.0 {
        let s = -set.kappa_m() / n;
        for (dst, src) in m.block_mut(best).iter_mut().zip(c.block(best)) {
            *dst = s * src;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    ClosedFormLinear,
    ProjectedGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub m_star: PolicyParams,
    pub benchmark_cost: f64,
    pub step_costs: Vec<f64>,
    pub solver: Solver,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HindsightResult {
    pub m_star: PolicyParams,
    pub benchmark_cost: f64,
    pub learner_cost: f64,
    pub regret: f64,
    pub solver: Solver,
}

impl Benchmark {
    pub fn against(&self, learner_cost: f64) -> HindsightResult {
        HindsightResult {
            m_star: self.m_star.clone(),
            benchmark_cost: self.benchmark_cost,
            learner_cost,
            regret: learner_cost - self.benchmark_cost,
            solver: self.solver,
        }
    }
}

/// Per-step costs of replaying the fixed `m` from `x_1 = 0`.
pub fn stationary_costs(spec: &ScenarioSpec, m: &PolicyParams) -> Result<Vec<f64>> {
    let model = &spec.system;
    let streams = spec.streams();
    let mut win = DisturbanceWindow::new(m.p(), model.dx());
    let mut x = vec![0.0; model.dx()];
    let mut out = Vec::with_capacity(spec.horizon);
    for (theta, w) in streams.theta.iter().zip(&streams.w) {
        let u = action(m, model.k(), &x, &win)?;
        out.push(linear_cost(theta, &x, &u)?);
        x = step(model, &x, &u, w)?;
        win.push(w);
    }
    Ok(out)
}

/// Solves for the best fixed policy with the linear-cost closed form.
pub fn solve_benchmark(spec: &ScenarioSpec) -> Result<Benchmark> {
    solve_benchmark_with(spec, Solver::ClosedFormLinear)
}

pub fn solve_benchmark_with(spec: &ScenarioSpec, solver: Solver) -> Result<Benchmark> {
    spec.validate()?;
    spec.system.require_zero_k()?;
    let set = spec.feasible_set()?;
    let (dx, du) = (spec.system.dx(), spec.system.du());
    let mut total = GradientMatrix::zeros(spec.p, du, dx);
    for g in spec.true_gradients()? {
        total.axpy(1.0, &g);
    }
    let (m_star, iterations) = match solver {
        Solver::ClosedFormLinear => (linear_argmin(&total, &set), 0),
        Solver::ProjectedGradient => {
            let objective = |m: &PolicyParams| -> Result<(f64, GradientMatrix)> {
                Ok((stationary_costs(spec, m)?.iter().sum(), total.clone()))
            };
            let start = PolicyParams::zeros(spec.p, du, dx);
            projected_gradient(&objective, &set, start, 1e-7, 50_000)?
        }
    };
    let step_costs = stationary_costs(spec, &m_star)?;
    Ok(Benchmark { benchmark_cost: step_costs.iter().sum(), step_costs, m_star, solver, iterations })
}

/// Projected gradient descent with backtracking (halving from step 1) and a
/// relative objective-improvement stop. Returns the iterate and the number
/// of iterations.
pub fn projected_gradient(
    objective: &dyn Fn(&PolicyParams) -> Result<(f64, GradientMatrix)>,
    set: &FeasibleSet,
    start: PolicyParams,
    tol: f64,
    max_iter: usize,
) -> Result<(PolicyParams, usize)> {
    let mut m = project(&start, set);
    let (mut f, mut g) = objective(&m)?;
    for it in 1..=max_iter {
        let mut s = 1.0;
        let (next, f_next, g_next) = loop {
            let mut y = m.clone();
            y.axpy(-s, &g);
            let cand = project(&y, set);
            let d = cand.sub(&m);
            let (fc, gc) = objective(&cand)?;
            let model = f + g.dot(&d) + d.dot(&d) / (2.0 * s);
            if fc <= model + 1e-12 * f.abs().max(1.0) || s < 1e-20 {
                break (cand, fc, gc);
            }
            s *= 0.5;
        };
        let improvement = f - f_next;
        let moved = next != m;
        m = next;
        f = f_next;
        g = g_next;
        if !moved || improvement.abs() <= tol * f.abs().max(1.0) {
            return Ok((m, it));
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: f })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegretBound {
    /// FTRL-C, max-adaptive schedule
    MaxAdaptive,
    /// AdaFTRL-C, decayed-memory schedule over gradients
    Decayed,
    /// OptFTRL-C, decayed-memory schedule over prediction errors
    Optimistic,
}

impl RegretBound {
    pub fn for_controller(kind: ControllerKind) -> Option<RegretBound> {
        match kind {
            ControllerKind::FtrlC => Some(RegretBound::MaxAdaptive),
            ControllerKind::AdaFtrlC => Some(RegretBound::Decayed),
            ControllerKind::OptFtrlC => Some(RegretBound::Optimistic),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub kind: RegretBound,
    pub rhs_value: f64,
    pub constant_term: f64,
    pub radicand: f64,
    pub regret: f64,
    pub satisfied: bool,
}

/// `Σ_t max_{s≤t} a_s`
pub fn radicand_max(signals: &[f64]) -> f64 {
    let mut run = 0.0_f64;
    signals.iter().map(|&a| {
        run = run.max(a);
        run
    })
    .sum()
}

/// `Σ_t Σ_{i=0}^{t−1} (1−δ)^i a_{t−i:t}`, with the clock started at the first
/// nonzero signal.
pub fn radicand_decayed(signals: &[f64], delta: f64) -> f64 {
    let keep = 1.0 - delta;
    let mut geometric = 0.0;
    let mut h = 0.0;
    let mut total = 0.0;
    let mut started = false;
    for &a in signals {
        if !started && a == 0.0 {
            continue;
        }
        started = true;
        geometric = 1.0 + keep * geometric;
        h = keep * h + a * geometric;
        total += h;
    }
    total
}

/// Right-hand side of the regret bound for the trace's controller, compared
/// against `regret`.
///
/// The max-adaptive and decayed bounds read `g_t = max(||G_t||, ||G_t||²)` off the
/// gradient-norm column; the optimistic bound needs the prediction-error column.
pub fn regret_bound(kind: RegretBound, trace: &RunTrace, constants: &BoundConstants, regret: f64) -> Result<BoundReport> {
    let signals: Vec<f64> = match kind {
        RegretBound::MaxAdaptive | RegretBound::Decayed => trace.rows.iter().map(|r| r.grad_norm.max(r.grad_norm * r.grad_norm)).collect(),
        RegretBound::Optimistic => {
            if trace.controller != ControllerKind::OptFtrlC {
                return Err(Error::KindMismatch);
            }
            trace
                .rows
                .iter()
                .map(|r| r.signal.ok_or(Error::InvalidParameter { name: "trace", reason: "missing signal column" }))
                .collect::<Result<_>>()?
        }
    };
    let c = constants;
    let lz = c.l * c.z;
    let h1 = signals.iter().copied().find(|&a| a > 0.0).unwrap_or(0.0);
    let radicand = match kind {
        RegretBound::MaxAdaptive => radicand_max(&signals),
        _ => radicand_decayed(&signals, c.delta),
    };
    let constant_term = if h1 == 0.0 {
        0.0
    } else {
        let r1 = libm::sqrt(h1);
        match kind {
            RegretBound::MaxAdaptive => {
                2.0 * c.kappa_m / c.delta * (libm::sqrt(2.0 * (c.delta * c.delta + 2.0 * lz)) + lz / (c.delta * r1))
            }
            _ => {
                2.0 * libm::sqrt(2.0 * c.kappa_m * c.kappa_m * (1.0 + lz))
                    + 2.0 * lz * c.kappa_m / (r1 * c.delta * c.delta)
            }
        }
    };
    let rhs_value = constant_term * libm::sqrt(radicand);
    Ok(BoundReport { kind, rhs_value, constant_term, radicand, regret, satisfied: regret <= rhs_value })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxGap {
    pub p_required: usize,
    /// `max_t ||u_t(linear) − u_t(DAC)||`
    pub max_action_gap: f64,
    /// `max_t ||x_t(linear) − x_t(DAC)||`
    pub max_state_gap: f64,
    /// `max_t ||(Δx_t, Δu_t)||`, the largest per-step cost gap for a cost
    /// with unit Lipschitz constant
    pub max_cost_gap: f64,
    /// `max_cost_gap / ζ`
    pub ratio: f64,
}

/// Compares the linear policy `u = K_lin x` with its truncated DAC
/// counterpart `M^[j+1] = K_lin (A + B K_lin)^j`, `j < p`, where
/// `p = ⌈δ^{−1} ln(√d_x κ^L w / (δ ζ))⌉` and `κ^L = ||K_lin||`.
pub fn dac_approx_gap(model: &SystemModel, k_lin: &Matrix, zeta: f64, disturbances: &[Vec<f64>]) -> Result<ApproxGap> {
    model.require_zero_k()?;
    let (dx, du) = (model.dx(), model.du());
    if k_lin.rows() != du || k_lin.cols() != dx {
        return Err(Error::DimensionMismatch { what: "K_lin", expected: du * dx, found: k_lin.rows() * k_lin.cols() });
    }
    if !(zeta > 0.0) {
        return Err(Error::InvalidParameter { name: "zeta", reason: "must be positive" });
    }
    let closed = model.a().add(&model.b().matmul(k_lin));
    let rho = closed.spectral_radius(1e-8, 10_000);
    if rho >= 1.0 {
        return Err(Error::Unstable { spectral_radius: rho, limit: 1.0 });
    }
    let delta = model.delta();
    let kappa_l = k_lin.frobenius();
    let arg = libm::sqrt(dx as f64) * kappa_l * model.w_bound() / (delta * zeta);
    let p_required = if arg > 1.0 { (libm::ceil(libm::log(arg) / delta) as usize).max(1) } else { 1 };

    let mut blocks = Vec::with_capacity(p_required);
    let mut pow = Matrix::identity(dx);
    for _ in 0..p_required {
        blocks.push(k_lin.matmul(&pow));
        pow = pow.matmul(&closed);
    }
    let m = PolicyParams::from_blocks(&blocks)?;
    let zero_k = Matrix::zeros(du, dx);

    let mut win = DisturbanceWindow::new(p_required, dx);
    let mut x_lin = vec![0.0; dx];
    let mut x_dac = vec![0.0; dx];
    let (mut act, mut st, mut joint) = (0.0_f64, 0.0_f64, 0.0_f64);
    for w in disturbances {
        model.check_w(w)?;
        let u_lin = k_lin.mul_vec(&x_lin);
        let u_dac = action(&m, &zero_k, &x_dac, &win)?;
        let du_gap = linalg::norm(&linalg::sub(&u_lin, &u_dac));
        let dx_gap = linalg::norm(&linalg::sub(&x_lin, &x_dac));
        act = act.max(du_gap);
        st = st.max(dx_gap);
        joint = joint.max(libm::sqrt(du_gap * du_gap + dx_gap * dx_gap));
        x_lin = step(model, &x_lin, &u_lin, w)?;
        x_dac = step(model, &x_dac, &u_dac, w)?;
        win.push(w);
    }
    Ok(ApproxGap { p_required, max_action_gap: act, max_state_gap: st, max_cost_gap: joint, ratio: joint / zeta })
}

/// Pairs `(lhs, rhs)` of the state-deviation inequality
/// `||x_{t+1}(π_1) − x_{t+1}(π_2)|| ≤ (√d_x/δ) max_{s≤t} ||u_s(π_1) − u_s(π_2)||`
/// for two open-loop action sequences on the same disturbances.
pub fn state_deviation_pairs(model: &SystemModel, u1: &[Vec<f64>], u2: &[Vec<f64>], w: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    if u1.len() != w.len() || u2.len() != w.len() {
        return Err(Error::DimensionMismatch { what: "action sequence", expected: w.len(), found: u1.len().min(u2.len()) });
    }
    let factor = libm::sqrt(model.dx() as f64) / model.delta();
    let mut x1 = vec![0.0; model.dx()];
    let mut x2 = x1.clone();
    let mut max_du = 0.0_f64;
    let mut out = Vec::with_capacity(w.len());
    for ((a, b), wt) in u1.iter().zip(u2).zip(w) {
        max_du = max_du.max(linalg::norm(&linalg::sub(a, b)));
        x1 = step(model, &x1, a, wt)?;
        x2 = step(model, &x2, b, wt)?;
        out.push((linalg::norm(&linalg::sub(&x1, &x2)), factor * max_du));
    }
    Ok(out)
}
