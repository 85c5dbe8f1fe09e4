//! Online update rules: the three adaptive FTRL controllers and the GPC and
//! fixed-regularizer FTRL baselines.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cost::{epsilon_signal, g_signal};
use crate::error::{Error, Result};
use crate::hindsight::linear_argmin;
use crate::policy::{project, FeasibleSet, GradientMatrix, PolicyParams};
use crate::schedule::{sigma_scale_for, ScheduleState, ScheduleVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    FtrlC,
    AdaFtrlC,
    OptFtrlC,
    Gpc,
    BasicFtrl,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] =
        [ControllerKind::FtrlC, ControllerKind::AdaFtrlC, ControllerKind::OptFtrlC, ControllerKind::Gpc, ControllerKind::BasicFtrl];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::FtrlC => "ftrl",
            ControllerKind::AdaFtrlC => "adaftrl",
            ControllerKind::OptFtrlC => "optftrl",
            ControllerKind::Gpc => "gpc",
            ControllerKind::BasicFtrl => "basic",
        }
    }

    pub fn schedule_variant(self) -> Option<ScheduleVariant> {
        match self {
            ControllerKind::FtrlC => Some(ScheduleVariant::MaxAdaptive),
            ControllerKind::AdaFtrlC => Some(ScheduleVariant::DecayedMemory),
            ControllerKind::OptFtrlC => Some(ScheduleVariant::Optimistic),
            ControllerKind::Gpc | ControllerKind::BasicFtrl => None,
        }
    }

    pub fn is_adaptive(self) -> bool {
        self.schedule_variant().is_some()
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ftrl" | "ftrl-c" => Ok(ControllerKind::FtrlC),
            "adaftrl" | "adaftrl-c" => Ok(ControllerKind::AdaFtrlC),
            "optftrl" | "optftrl-c" => Ok(ControllerKind::OptFtrlC),
            "gpc" => Ok(ControllerKind::Gpc),
            "basic" | "basic-ftrl" => Ok(ControllerKind::BasicFtrl),
            _ => Err(Error::InvalidParameter { name: "controller", reason: "expected ftrl, adaftrl, optftrl, gpc or basic" }),
        }
    }
}

/// Problem constants entering σ, the baselines' step sizes and the regret bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub l: f64,
    pub g: f64,
    pub w: f64,
    pub kappa_m: f64,
    pub kappa_b: f64,
    pub delta: f64,
    pub p: usize,
    pub dx: usize,
    pub du: usize,
    /// `p·w·√d_u·κ_B`
    pub z: f64,
}

impl BoundConstants {
    #[allow(clippy::too_many_arguments)]
    pub fn new(l: f64, g: f64, w: f64, kappa_m: f64, kappa_b: f64, delta: f64, p: usize, dx: usize, du: usize) -> Self {
        let z = Self::z_from(p, w, du, kappa_b);
        BoundConstants { l, g, w, kappa_m, kappa_b, delta, p, dx, du, z }
    }

    pub fn z_from(p: usize, w: f64, du: usize, kappa_b: f64) -> f64 {
        p as f64 * w * libm::sqrt(du as f64) * kappa_b
    }

    pub fn z_consistent(&self) -> bool {
        Self::z_from(self.p, self.w, self.du, self.kappa_b) == self.z
    }
}

/// Schedule values produced by one update; `None` for the baselines.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateInfo {
    /// `g_t`, or `ε_t` for the optimistic controller (after the first-error clamp)
    pub signal: Option<f64>,
    pub h: Option<f64>,
    pub sigma: Option<f64>,
    /// `σ_{1:t}` after the update
    pub sigma_prefix: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    kind: ControllerKind,
    m: PolicyParams,
    schedule: Option<ScheduleState>,
    grad_sum: GradientMatrix,
    anchor_sum: PolicyParams,
    /// `Σ_{s>t} G̃_s` over the predictions received so far
    future_pred_sum: GradientMatrix,
    /// `preds[s−1] = G̃_s` when known
    preds: Vec<Option<GradientMatrix>>,
    /// η for GPC, σ′ for basic FTRL, unused otherwise
    step_size: f64,
    feasible: FeasibleSet,
    /// gradients consumed so far
    t: usize,
}

impl ControllerState {
    /// Builds a controller with `M_1 = 0`.
    ///
    /// `sigma` overrides the prescribed σ of the adaptive kinds. The baselines
    /// need the horizon.
    pub fn new(
        kind: ControllerKind,
        constants: &BoundConstants,
        du: usize,
        dx: usize,
        horizon: Option<usize>,
        sigma: Option<f64>,
    ) -> Result<Self> {
        let feasible = FeasibleSet::new(constants.kappa_m, constants.p)?;
        let zero = PolicyParams::zeros(constants.p, du, dx);
        let schedule = match kind.schedule_variant() {
            Some(v) => {
                let s = match sigma {
                    Some(s) => s,
                    None => sigma_scale_for(kind, constants)?,
                };
                Some(ScheduleState::new(v, s, constants.delta)?)
            }
            None => None,
        };
        let step_size = match kind {
            ControllerKind::Gpc | ControllerKind::BasicFtrl => {
                let t = horizon.filter(|&t| t > 0).ok_or(Error::InvalidParameter {
                    name: "horizon",
                    reason: "baseline controllers need the horizon",
                })? as f64;
                if !(constants.g > 0.0) {
                    return Err(Error::InvalidParameter { name: "g", reason: "baseline controllers need g > 0" });
                }
                if kind == ControllerKind::Gpc {
                    gpc_step_size(constants, t)
                } else {
                    basic_ftrl_weight(constants, t)
                }
            }
            _ => 0.0,
        };
        Ok(ControllerState {
            kind,
            m: zero.clone(),
            schedule,
            grad_sum: zero.clone(),
            anchor_sum: zero.clone(),
            future_pred_sum: zero,
            preds: Vec::new(),
            step_size,
            feasible,
            t: 0,
        })
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }
    /// The current iterate `M_{t+1}` (or `M_1` before any update).
    pub fn m(&self) -> &PolicyParams {
        &self.m
    }
    pub fn schedule(&self) -> Option<&ScheduleState> {
        self.schedule.as_ref()
    }
    pub fn grad_sum(&self) -> &GradientMatrix {
        &self.grad_sum
    }
    pub fn anchor_sum(&self) -> &PolicyParams {
        &self.anchor_sum
    }
    pub fn future_pred_sum(&self) -> &GradientMatrix {
        &self.future_pred_sum
    }
    pub fn step_size(&self) -> f64 {
        self.step_size
    }
    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }
    pub fn steps(&self) -> usize {
        self.t
    }

    /// Registers the prediction `G̃_s` for a step that has not been processed yet.
    pub fn receive_prediction(&mut self, s: usize, g_pred: GradientMatrix) -> Result<()> {
        if self.kind != ControllerKind::OptFtrlC {
            return Err(Error::KindMismatch);
        }
        self.m.check_same(&g_pred)?;
        if s <= self.t {
            return Err(Error::InvalidParameter { name: "prediction step", reason: "step already processed" });
        }
        if self.preds.len() < s {
            self.preds.resize(s, None);
        }
        if let Some(old) = self.preds[s - 1].take() {
            self.future_pred_sum.axpy(-1.0, &old);
        }
        self.future_pred_sum.axpy(1.0, &g_pred);
        self.preds[s - 1] = Some(g_pred);
        Ok(())
    }

    /// Dispatches to the update rule of this controller's kind.
    pub fn update(&mut self, g: &GradientMatrix) -> Result<UpdateInfo> {
        match self.kind {
            ControllerKind::FtrlC | ControllerKind::AdaFtrlC => ftrl_update(self, g),
            ControllerKind::OptFtrlC => optimistic_update(self, g),
            ControllerKind::Gpc => gpc_update(self, g).map(|_| UpdateInfo::default()),
            ControllerKind::BasicFtrl => basic_ftrl_update(self, g).map(|_| UpdateInfo::default()),
        }
    }

    fn proximal_step(&mut self, g: &GradientMatrix, signal: f64) -> Result<(UpdateInfo, f64)> {
        self.m.check_same(g)?;
        let sched = self.schedule.as_mut().ok_or(Error::KindMismatch)?;
        let a = sched.effective_signal(signal);
        let (h, sigma) = sched.push_signal(signal)?;
        let prefix = sched.sigma_prefix();
        self.anchor_sum.axpy(sigma, &self.m);
        self.grad_sum.axpy(1.0, g);
        self.t += 1;
        let info = UpdateInfo { signal: Some(a), h: Some(h), sigma: Some(sigma), sigma_prefix: Some(prefix) };
        Ok((info, prefix))
    }
}

/// GPC step size `η = κ_M/(g·T)`.
pub fn gpc_step_size(c: &BoundConstants, horizon: f64) -> f64 {
    c.kappa_m / (c.g * horizon)
}

/// Fixed per-step regularization weight `σ′ = g√T·δ / (2κ_M √(2δ² + 4lz/g))`.
pub fn basic_ftrl_weight(c: &BoundConstants, horizon: f64) -> f64 {
    let d = c.delta;
    c.g * libm::sqrt(horizon) * d / (2.0 * c.kappa_m * libm::sqrt(2.0 * d * d + 4.0 * c.l * c.z / c.g))
}

/// FTRL-C / AdaFTRL-C:
/// `M_{t+1} = Π((Σ_s σ_s M_s − G_{1:t}) / σ_{1:t})`, or `M_t` while `σ_{1:t} = 0`.
pub fn ftrl_update(state: &mut ControllerState, g: &GradientMatrix) -> Result<UpdateInfo> {
    if !matches!(state.kind, ControllerKind::FtrlC | ControllerKind::AdaFtrlC) {
        return Err(Error::KindMismatch);
    }
    let (info, prefix) = state.proximal_step(g, g_signal(g))?;
    if prefix > 0.0 {
        let mut y = state.anchor_sum.clone();
        y.axpy(-1.0, &state.grad_sum);
        state.m = project(&y.scaled(1.0 / prefix), &state.feasible);
    }
    Ok(info)
}

/// OptFTRL-C:
/// `M_{t+1} = Π((Σ_s σ_s M_s − G_{1:t} − Σ_{s>t} G̃_s) / σ_{1:t})`.
///
/// Missing predictions count as zero. While `σ_{1:t} = 0` the update
/// minimizes the linear term `⟨G_{1:t} + Σ_{s>t} G̃_s, M⟩` alone.
pub fn optimistic_update(state: &mut ControllerState, g: &GradientMatrix) -> Result<UpdateInfo> {
    if state.kind != ControllerKind::OptFtrlC {
        return Err(Error::KindMismatch);
    }
    let s = state.t + 1;
    let pred = state.preds.get(s - 1).cloned().flatten();
    let eps = match &pred {
        Some(p) => epsilon_signal(g, p)?,
        None => g_signal(g),
    };
    let (info, prefix) = state.proximal_step(g, eps)?;
    if let Some(p) = pred {
        state.future_pred_sum.axpy(-1.0, &p);
        state.preds[s - 1] = None;
    }
    let mut c = state.grad_sum.clone();
    c.axpy(1.0, &state.future_pred_sum);
    state.m = if prefix > 0.0 {
        let mut y = state.anchor_sum.clone();
        y.axpy(-1.0, &c);
        project(&y.scaled(1.0 / prefix), &state.feasible)
    } else {
        linear_argmin(&c, &state.feasible)
    };
    Ok(info)
}

/// Projected gradient step `M_{t+1} = Π(M_t − η G_t)`.
pub fn gpc_update<'a>(state: &'a mut ControllerState, g: &GradientMatrix) -> Result<&'a PolicyParams> {
    if state.kind != ControllerKind::Gpc {
        return Err(Error::KindMismatch);
    }
    state.m.check_same(g)?;
    let mut y = state.m.clone();
    y.axpy(-state.step_size, g);
    state.grad_sum.axpy(1.0, g);
    state.t += 1;
    state.m = project(&y, &state.feasible);
    Ok(&state.m)
}

/// FTRL with the fixed regularizer `σ′||M||²` per step:
/// `M_{t+1} = Π(−G_{1:t} / (2σ′t))`.
pub fn basic_ftrl_update<'a>(state: &'a mut ControllerState, g: &GradientMatrix) -> Result<&'a PolicyParams> {
    if state.kind != ControllerKind::BasicFtrl {
        return Err(Error::KindMismatch);
    }
    state.m.check_same(g)?;
    state.grad_sum.axpy(1.0, g);
    state.t += 1;
    let y = state.grad_sum.scaled(-1.0 / (2.0 * state.step_size * state.t as f64));
    state.m = project(&y, &state.feasible);
    Ok(&state.m)
}
