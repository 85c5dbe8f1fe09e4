//! Scripted environments: piecewise-constant cost and disturbance schedules,
//! the builtin scenarios, and sign-flip gradient predictions.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::controller::BoundConstants;
use crate::cost::{advance_sensitivity, gradient_theta, SensitivityState};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::SystemModel;
use crate::policy::{FeasibleSet, GradientMatrix};

/// A constant value on the half-open step range `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub value: Vec<f64>,
}

impl Segment {
    pub fn new(start: usize, end: usize, value: Vec<f64>) -> Self {
        Segment { start, end, value }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PredictionPolicy {
    None,
    /// `G̃_t = G_t` with probability φ, otherwise `−G_t`.
    SignFlip { phi: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub horizon: usize,
    pub system: SystemModel,
    pub p: usize,
    pub kappa_m: f64,
    pub theta_segments: Vec<Segment>,
    pub w_segments: Vec<Segment>,
    /// declared gradient bound, used by the baselines
    pub g: f64,
    /// declared Lipschitz constant
    pub l: f64,
    pub predictions: PredictionPolicy,
}

/// Per-step cost weights and disturbances; index `t − 1` holds step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Streams {
    pub theta: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter { name: "T", reason: "must be at least 1" });
        }
        FeasibleSet::new(self.kappa_m, self.p)?;
        if !(self.g > 0.0) || !(self.l > 0.0) {
            return Err(Error::InvalidParameter { name: "g/l", reason: "must be positive" });
        }
        let (dx, du) = (self.system.dx(), self.system.du());
        check_cover(&self.theta_segments, self.horizon, dx + du, "theta segment")?;
        check_cover(&self.w_segments, self.horizon, dx, "w segment")?;
        for s in &self.theta_segments {
            if linalg::norm(&s.value) > self.l * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter { name: "theta", reason: "norm exceeds l" });
            }
        }
        for s in self.w_segments.iter().filter(|s| s.start <= self.horizon) {
            self.system.check_w(&s.value)?;
        }
        if let PredictionPolicy::SignFlip { phi } = self.predictions {
            if !(0.0..=1.0).contains(&phi) {
                return Err(Error::InvalidParameter { name: "phi", reason: "must lie in [0, 1]" });
            }
        }
        Ok(())
    }

    pub fn with_horizon(mut self, t: usize) -> Result<Self> {
        self.horizon = t;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kappa_m(mut self, kappa_m: f64) -> Result<Self> {
        self.kappa_m = kappa_m;
        self.validate()?;
        Ok(self)
    }

    pub fn with_memory(mut self, p: usize) -> Result<Self> {
        self.p = p;
        self.validate()?;
        Ok(self)
    }

    pub fn streams(&self) -> Streams {
        Streams {
            theta: expand(&self.theta_segments, self.horizon),
            w: expand(&self.w_segments, self.horizon),
        }
    }

    pub fn feasible_set(&self) -> Result<FeasibleSet> {
        FeasibleSet::new(self.kappa_m, self.p)
    }

    pub fn constants(&self) -> BoundConstants {
        let s = &self.system;
        BoundConstants::new(self.l, self.g, s.w_bound(), self.kappa_m, s.kappa_b(), s.delta(), self.p, s.dx(), s.du())
    }

    /// `G_1 … G_T`. For linear costs these do not depend on the policy, so
    /// they are known upfront for a scripted scenario.
    pub fn true_gradients(&self) -> Result<Vec<GradientMatrix>> {
        let streams = self.streams();
        let mut sens = SensitivityState::for_model(&self.system, self.p);
        let mut out = Vec::with_capacity(self.horizon);
        for (theta, w) in streams.theta.iter().zip(&streams.w) {
            out.push(gradient_theta(theta, &sens)?);
            advance_sensitivity(&mut sens, &self.system, w)?;
        }
        Ok(out)
    }
}

fn check_cover(segs: &[Segment], horizon: usize, dim: usize, what: &'static str) -> Result<()> {
    let mut sorted: Vec<&Segment> = segs.iter().collect();
    sorted.sort_by_key(|s| s.start);
    let mut next = 1;
    for s in sorted {
        if s.end <= s.start {
            return Err(Error::BadSegments { t: s.start });
        }
        linalg::check_len(what, &s.value, dim)?;
        if s.start > horizon {
            continue;
        }
        if s.start != next {
            return Err(Error::BadSegments { t: next.min(s.start) });
        }
        next = s.end;
    }
    if next <= horizon {
        return Err(Error::BadSegments { t: next });
    }
    Ok(())
}

fn expand(segs: &[Segment], horizon: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); horizon];
    for s in segs {
        for t in s.start..s.end.min(horizon + 1) {
            out[t - 1] = s.value.clone();
        }
    }
    out
}

/// Names accepted by [`builtin_scenario`].
pub const BUILTIN_NAMES: [&str; 6] = ["A", "B", "C", "D", "E_alt200_small", "F_alt200_large"];

/// Memory length of the builtin scenarios.
pub const BUILTIN_P: usize = 10;
/// Feasible-set radius of the builtin scenarios.
pub const BUILTIN_KAPPA_M: f64 = 10.0;
/// Horizon of the builtin scenarios.
pub const BUILTIN_T: usize = 5000;

/// The scalar experiments on `x_{t+1} = 0.75 x_t + u_t + w_t` with
/// `p = 10`, `T = 5000`, `K = 0`. Costs weight the state only.
pub fn builtin_scenario(name: &str) -> Result<ScenarioSpec> {
    let end = BUILTIN_T + 1;
    let th = |v: f64| vec![v, 0.0];
    let seg = |a: usize, b: usize, v: f64| Segment::new(a, b, th(v));
    let (canonical, theta, w, g, l, preds) = match name {
        "A" => ("A", vec![seg(1, 2, 15.0), seg(2, 751, -7.0), seg(751, end, 7.0)], 0.25, 15.0, 15.0, PredictionPolicy::None),
        "B" => ("B", vec![seg(1, 2, -5.0), seg(2, 501, -1.0), seg(501, end, 1.0)], 0.1, 15.0, 5.0, PredictionPolicy::None),
        "C" | "D" => {
            let phi = if name == "C" { 0.2 } else { 0.8 };
            (name, vec![seg(1, 501, -12.0), seg(501, end, 12.0)], 0.25, 15.0, 12.0, PredictionPolicy::SignFlip { phi })
        }
        "E" | "E_alt200_small" => ("E_alt200_small", alternating(7.0, None), 0.25, 150.0, 7.0, PredictionPolicy::None),
        "F" | "F_alt200_large" => ("F_alt200_large", alternating(50.0, Some(100.0)), 0.25, 150.0, 100.0, PredictionPolicy::None),
        _ => return Err(Error::UnknownScenario),
    };
    let spec = ScenarioSpec {
        name: canonical.to_string(),
        horizon: BUILTIN_T,
        system: SystemModel::scalar(0.75, 1.0, 0.25, w)?,
        p: BUILTIN_P,
        kappa_m: BUILTIN_KAPPA_M,
        theta_segments: theta,
        w_segments: vec![Segment::new(1, end, vec![w])],
        g,
        l,
        predictions: preds,
    };
    spec.validate()?;
    Ok(spec)
}

/// `∓mag` alternating every 200 steps on `[1, 1000]` and `[4000, 5000]`,
/// each stretch starting negative, zero in between. `first` replaces θ_1.
fn alternating(mag: f64, first: Option<f64>) -> Vec<Segment> {
    let mut segs = Vec::new();
    let mut lo = 1;
    if let Some(v) = first {
        segs.push(Segment::new(1, 2, vec![v, 0.0]));
        lo = 2;
    }
    for (start, stop) in [(1usize, 1001usize), (4000, BUILTIN_T + 1)] {
        for (k, a) in (start..stop).step_by(200).enumerate() {
            let b = (a + 200).min(stop);
            let v = if k % 2 == 0 { -mag } else { mag };
            if a.max(lo) < b {
                segs.push(Segment::new(a.max(lo), b, vec![v, 0.0]));
            }
        }
        if start == 1 {
            segs.push(Segment::new(1001, 4000, vec![0.0, 0.0]));
        }
    }
    segs
}

/// Predicted gradients `G̃_1 … G̃_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionStream {
    preds: Vec<GradientMatrix>,
}

impl PredictionStream {
    pub fn new(preds: Vec<GradientMatrix>) -> Self {
        PredictionStream { preds }
    }
    /// `G̃_t`, 1-based.
    pub fn get(&self, t: usize) -> Option<&GradientMatrix> {
        t.checked_sub(1).and_then(|i| self.preds.get(i))
    }
    pub fn len(&self) -> usize {
        self.preds.len()
    }
    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }
    pub fn iter(&self) -> impl Iterator<Item = &GradientMatrix> {
        self.preds.iter()
    }
}

/// Sign-flip predictions keyed by `(seed, t)`, so any single step can be
/// regenerated without replaying the stream.
pub fn gen_predictions(spec: &ScenarioSpec, true_grads: &[GradientMatrix], seed: u64) -> Result<PredictionStream> {
    let phi = match spec.predictions {
        PredictionPolicy::SignFlip { phi } => phi,
        PredictionPolicy::None => return Err(Error::NoPredictionPolicy),
    };
    Ok(sign_flip(true_grads, phi, seed))
}

pub fn sign_flip(true_grads: &[GradientMatrix], phi: f64, seed: u64) -> PredictionStream {
    let preds = true_grads
        .iter()
        .enumerate()
        .map(|(i, g)| if unit_draw(seed, (i + 1) as u64) < phi { g.clone() } else { g.scaled(-1.0) })
        .collect();
    PredictionStream { preds }
}

/// Uniform draw in `[0, 1)` determined by `(seed, t)`.
pub fn unit_draw(seed: u64, t: u64) -> f64 {
    let key = mix64(seed ^ 0xD1B5_4A32_D192_ED03);
    let bits = mix64(key.wrapping_add(t.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// splitmix64 finalizer
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
