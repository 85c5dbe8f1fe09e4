//! Regularization schedules: the running `h_t`, the increments
//! `σ_t = σ(√h_{1:t} − √h_{1:t−1})` and the prefix `σ_{1:t} = σ√h_{1:t}`.
//!
//! Until the first nonzero signal arrives every `h_t` and `σ_t` is zero and
//! the schedule clock does not start; step 1 of the schedule is the first
//! step with a nonzero signal.

use crate::controller::{BoundConstants, ControllerKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleVariant {
    /// `h_t = max_{s≤t} a_s`
    MaxAdaptive,
    /// `h_t = Σ_{i=0}^{t−1} (1−δ)^i a_{t−i:t}` over gradient signals
    DecayedMemory,
    /// Same form as `DecayedMemory`, over prediction errors. The first
    /// nonzero error is clamped to at most 1.
    Optimistic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleState {
    variant: ScheduleVariant,
    sigma_scale: f64,
    delta: f64,
    /// number of steps since the first nonzero signal
    steps: usize,
    h_prefix: f64,
    sigma_prefix: f64,
    last_h: f64,
    first_h: f64,
    /// `Σ_{i<steps} (1−δ)^i`
    geometric: f64,
    signal_prefix: f64,
}

impl ScheduleState {
    pub fn new(variant: ScheduleVariant, sigma_scale: f64, delta: f64) -> Result<Self> {
        if !(sigma_scale > 0.0) || !sigma_scale.is_finite() {
            return Err(Error::InvalidParameter { name: "sigma", reason: "must be positive and finite" });
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter { name: "delta", reason: "must lie in (0, 1]" });
        }
        Ok(ScheduleState {
            variant,
            sigma_scale,
            delta,
            steps: 0,
            h_prefix: 0.0,
            sigma_prefix: 0.0,
            last_h: 0.0,
            first_h: 0.0,
            geometric: 0.0,
            signal_prefix: 0.0,
        })
    }

    pub fn variant(&self) -> ScheduleVariant {
        self.variant
    }
    pub fn sigma_scale(&self) -> f64 {
        self.sigma_scale
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    /// `h_{1:t}`
    pub fn h_prefix(&self) -> f64 {
        self.h_prefix
    }
    /// `σ_{1:t}`
    pub fn sigma_prefix(&self) -> f64 {
        self.sigma_prefix
    }
    /// `h_t`
    pub fn last_h(&self) -> f64 {
        self.last_h
    }
    /// The first nonzero `h`, or 0 before it.
    pub fn first_h(&self) -> f64 {
        self.first_h
    }
    /// Whether a nonzero signal has been seen.
    pub fn started(&self) -> bool {
        self.steps > 0
    }
    /// `a_{1:t}` (after the clamp for the optimistic variant).
    pub fn signal_prefix(&self) -> f64 {
        self.signal_prefix
    }

    /// The signal actually entering the schedule, after the first-error clamp.
    pub fn effective_signal(&self, a: f64) -> f64 {
        if self.variant == ScheduleVariant::Optimistic && !self.started() && a > 0.0 {
            a.min(1.0)
        } else {
            a
        }
    }

    /// Feeds `a_t ≥ 0` and returns `(h_t, σ_t)`.
    pub fn push_signal(&mut self, a: f64) -> Result<(f64, f64)> {
        if !(a >= 0.0) {
            return Err(Error::NegativeSignal(a));
        }
        let a = self.effective_signal(a);
        if !self.started() && a == 0.0 {
            return Ok((0.0, 0.0));
        }
        self.steps += 1;
        self.signal_prefix += a;
        let h = match self.variant {
            ScheduleVariant::MaxAdaptive => self.last_h.max(a),
            ScheduleVariant::DecayedMemory | ScheduleVariant::Optimistic => {
                // h_t = (1−δ) h_{t−1} + a_t Σ_{i<t} (1−δ)^i
                let keep = 1.0 - self.delta;
                self.geometric = 1.0 + keep * self.geometric;
                keep * self.last_h + a * self.geometric
            }
        };
        if self.steps == 1 {
            self.first_h = h;
        }
        let old = libm::sqrt(self.h_prefix);
        self.h_prefix += h;
        let new = libm::sqrt(self.h_prefix);
        self.last_h = h;
        self.sigma_prefix = self.sigma_scale * new;
        Ok((h, self.sigma_scale * (new - old)))
    }
}

/// The σ prescribed for each adaptive controller. Baselines have none.
pub fn sigma_scale_for(kind: ControllerKind, c: &BoundConstants) -> Result<f64> {
    if !(c.delta > 0.0) {
        return Err(Error::InvalidParameter { name: "delta", reason: "must be positive" });
    }
    let lz = c.l * c.z;
    match kind {
        ControllerKind::FtrlC => Ok(libm::sqrt(c.delta * c.delta + 2.0 * lz)
            / (core::f64::consts::SQRT_2 * c.kappa_m * c.delta)),
        ControllerKind::AdaFtrlC | ControllerKind::OptFtrlC => {
            Ok(libm::sqrt((1.0 + 2.0 * lz) / (2.0 * c.kappa_m * c.kappa_m)))
        }
        ControllerKind::Gpc | ControllerKind::BasicFtrl => Err(Error::KindMismatch),
    }
}

/// Non-increasing weight used in the arithmo-geometric sum.
pub enum Weight<'a> {
    /// `f(x) = x^{−1/2}`, integrated in closed form
    InvSqrt,
    /// Any non-increasing `f`, integrated by adaptive Simpson quadrature. It
    /// must be finite on the integration range.
    Custom(&'a dyn Fn(f64) -> f64),
}

impl Weight<'_> {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Weight::InvSqrt => 1.0 / libm::sqrt(x),
            Weight::Custom(f) => f(x),
        }
    }

    fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            Weight::InvSqrt => 2.0 * (libm::sqrt(hi) - libm::sqrt(lo)),
            Weight::Custom(f) => adaptive_simpson(*f, lo, hi, 1e-12, 40),
        }
    }
}

/// Returns `(lhs, rhs)` with
/// `lhs = Σ_t Σ_{i=0}^{t−1} (1−δ)^i a_{t−i:t} f(a_{0:t})` and
/// `rhs = δ^{−2} ∫_{a_0}^{a_{0:T}} f`.
///
/// Terms whose coefficient is zero contribute zero even where `f` is infinite.
pub fn check_sqrt_sum(a: &[f64], delta: f64, f: Weight<'_>, a0: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter { name: "delta", reason: "must lie in (0, 1]" });
    }
    if !(a0 >= 0.0) {
        return Err(Error::NegativeSignal(a0));
    }
    if let Some(&bad) = a.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::NegativeSignal(bad));
    }
    // prefix[k] = a_1 + … + a_k
    let mut prefix = alloc::vec![0.0; a.len() + 1];
    for (k, v) in a.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v;
    }
    let keep = 1.0 - delta;
    let mut lhs = 0.0;
    for t in 1..=a.len() {
        let mut inner = 0.0;
        let mut w = 1.0;
        for i in 0..t {
            inner += w * (prefix[t] - prefix[t - i - 1]);
            w *= keep;
        }
        if inner > 0.0 {
            lhs += inner * f.eval(a0 + prefix[t]);
        }
    }
    let rhs = f.integral(a0, a0 + prefix[a.len()]) / (delta * delta);
    Ok((lhs, rhs))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * eps {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), eps, depth)
}
