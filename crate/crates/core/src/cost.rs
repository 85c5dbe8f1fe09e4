//! Linear costs `c_t(x, u) = ⟨θ_t, (x, u)⟩` and their gradients with respect
//! to the DAC parameters, through the stationary rollout.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, check_len};
use crate::lti::{DisturbanceWindow, SystemModel};
use crate::policy::{GradientMatrix, PolicyParams};

#[derive(Clone, Debug, PartialEq)]
pub struct CostSpec {
    theta: Vec<f64>,
    lipschitz: f64,
    grad_bound: f64,
}

impl CostSpec {
    /// `theta` holds the state weights followed by the action weights.
    pub fn new(theta: Vec<f64>, lipschitz: f64, grad_bound: f64) -> Result<Self> {
        if !(lipschitz > 0.0) || !(grad_bound > 0.0) {
            return Err(Error::InvalidParameter { name: "l/g", reason: "must be positive" });
        }
        if linalg::norm(&theta) > lipschitz * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter { name: "theta", reason: "norm exceeds the Lipschitz constant" });
        }
        Ok(CostSpec { theta, lipschitz, grad_bound })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }
}

pub fn cost(spec: &CostSpec, x: &[f64], u: &[f64]) -> Result<f64> {
    linear_cost(&spec.theta, x, u)
}

pub(crate) fn linear_cost(theta: &[f64], x: &[f64], u: &[f64]) -> Result<f64> {
    check_len("theta", theta, x.len() + u.len())?;
    let (tx, tu) = theta.split_at(x.len());
    Ok(linalg::dot(tx, x) + linalg::dot(tu, u))
}

/// `∂x_t/∂M` along the stationary rollout, plus the M-free part of the
/// rollout and the disturbance window feeding both.
///
/// With `x_t(M) = base_t + Σ_{j,a,b} S_t[j,:,a,b]·M^[j]_{ab}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityState {
    p: usize,
    dx: usize,
    du: usize,
    /// index `((j·dx + i)·du + a)·dx + b`
    s: Vec<f64>,
    base: Vec<f64>,
    window: DisturbanceWindow,
}

impl SensitivityState {
    pub fn new(p: usize, dx: usize, du: usize) -> Self {
        SensitivityState {
            p,
            dx,
            du,
            s: vec![0.0; p * dx * du * dx],
            base: vec![0.0; dx],
            window: DisturbanceWindow::new(p, dx),
        }
    }

    pub fn for_model(model: &SystemModel, p: usize) -> Self {
        SensitivityState::new(p, model.dx(), model.du())
    }

    #[inline]
    fn idx(&self, j: usize, i: usize, a: usize, b: usize) -> usize {
        ((j * self.dx + i) * self.du + a) * self.dx + b
    }

    /// `∂x_t^{(i)}/∂M^[j+1]_{ab}`
    pub fn get(&self, j: usize, i: usize, a: usize, b: usize) -> f64 {
        self.s[self.idx(j, i, a, b)]
    }

    pub fn window(&self) -> &DisturbanceWindow {
        &self.window
    }

    /// State under the all-zero policy.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn is_zero(&self) -> bool {
        self.s.iter().all(|&v| v == 0.0)
    }

    /// `x_t(M)`, the state reached by replaying `m` from the start.
    pub fn stationary_state(&self, m: &PolicyParams) -> Vec<f64> {
        let mut x = self.base.clone();
        for j in 0..self.p {
            for (i, xi) in x.iter_mut().enumerate() {
                for a in 0..self.du {
                    for b in 0..self.dx {
                        *xi += self.get(j, i, a, b) * m.get(j, a, b);
                    }
                }
            }
        }
        x
    }
}

/// Advances from step `t` to `t + 1` given `w_t`:
/// `S^[j] ← A S^[j] + B E(w_{t−j})`, then pushes `w_t` into the window.
pub fn advance_sensitivity(state: &mut SensitivityState, model: &SystemModel, w_new: &[f64]) -> Result<()> {
    model.require_zero_k()?;
    if model.dx() != state.dx || model.du() != state.du {
        return Err(Error::DimensionMismatch { what: "sensitivity state", expected: model.dx(), found: state.dx });
    }
    check_len("disturbance", w_new, state.dx)?;
    let (dx, du) = (state.dx, state.du);
    let a_mat = model.a();
    let b_mat = model.b();
    let mut col = vec![0.0; dx];
    for j in 0..state.p {
        let w_lag = state.window.lag(j + 1).to_vec();
        for a in 0..du {
            for b in 0..dx {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = state.s[state.idx(j, i, a, b)];
                }
                for i in 0..dx {
                    let v = linalg::dot(a_mat.row(i), &col) + b_mat.get(i, a) * w_lag[b];
                    let k = state.idx(j, i, a, b);
                    state.s[k] = v;
                }
            }
        }
    }
    let mut base = a_mat.mul_vec(&state.base);
    linalg::axpy(1.0, w_new, &mut base);
    state.base = base;
    state.window.push(w_new);
    Ok(())
}

/// Gradient of `c_t(x_t(M), u_t(M))` with respect to `M`.
///
/// The proxy cost is linear in `M`, so the gradient does not depend on it.
pub fn gradient(spec: &CostSpec, state: &SensitivityState) -> Result<GradientMatrix> {
    gradient_theta(spec.theta(), state)
}

pub(crate) fn gradient_theta(theta: &[f64], state: &SensitivityState) -> Result<GradientMatrix> {
    let (p, dx, du) = (state.p, state.dx, state.du);
    check_len("theta", theta, dx + du)?;
    let (tx, tu) = theta.split_at(dx);
    let mut g = GradientMatrix::zeros(p, du, dx);
    for j in 0..p {
        let w_lag = state.window.lag(j + 1);
        for a in 0..du {
            for b in 0..dx {
                let mut v = tu[a] * w_lag[b];
                for (i, ti) in tx.iter().enumerate() {
                    v += ti * state.get(j, i, a, b);
                }
                g.set(j, a, b, v);
            }
        }
    }
    Ok(g)
}

/// `max(||G||, ||G||²)`
pub fn g_signal(g: &GradientMatrix) -> f64 {
    let n = g.frobenius();
    n.max(n * n)
}

/// `max(||G − G̃||, ||G − G̃||²)`
pub fn epsilon_signal(g: &GradientMatrix, g_pred: &GradientMatrix) -> Result<f64> {
    g.check_same(g_pred)?;
    let n = linalg::norm(&linalg::sub(g.as_slice(), g_pred.as_slice()));
    Ok(n.max(n * n))
}
