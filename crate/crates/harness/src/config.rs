//! Scenario JSON files.
//!
//! ```json
//! {
//!   "name": "two-state",
//!   "horizon": 2000,
//!   "system": {"A": [[0.5, 0.1], [0.0, 0.6]], "B": [[1.0], [0.5]], "delta": 0.3, "w_bound": 0.5},
//!   "policy": {"p": 5, "kappa_M": 4.0},
//!   "theta_segments": [[1, 1001, [1.0, -1.0, 0.0]], [1001, 2001, [-1.0, 1.0, 0.0]]],
//!   "w_segments": [[1, 2001, [0.2, -0.1]]],
//!   "g": 10.0,
//!   "l": 2.0,
//!   "predictions": {"mode": "sign_flip", "phi": 0.7}
//! }
//! ```
//!
//! `theta` vectors hold the state weights followed by the action weights.
//! Segments are half-open `[start, end)` in 1-based steps. `horizon`
//! defaults to 5000, `kappa_B` to the Frobenius norm of `B`, and
//! `predictions` may be `null`.

use std::path::Path;

use adactl_core::scenario::BUILTIN_T;
use adactl_core::{builtin_scenario, ControllerKind, Matrix, PredictionPolicy, ScenarioSpec, Segment, SystemModel};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub system: SystemBlock,
    pub policy: PolicyBlock,
    pub theta_segments: Vec<SegmentEntry>,
    pub w_segments: Vec<SegmentEntry>,
    pub g: f64,
    pub l: f64,
    #[serde(default)]
    pub predictions: Option<PredictionBlock>,
    /// Defaults for `run` when the command line leaves them out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub delta: f64,
    pub w_bound: f64,
    #[serde(rename = "kappa_B", default, skip_serializing_if = "Option::is_none")]
    pub kappa_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    pub p: usize,
    #[serde(rename = "kappa_M")]
    pub kappa_m: f64,
}

/// `[start, end, value]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry(pub usize, pub usize, pub Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictionBlock {
    SignFlip { phi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

fn default_name() -> String {
    "custom".into()
}

fn default_horizon() -> usize {
    BUILTIN_T
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| HarnessError::Config(format!("{what}: {e}")))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let a = matrix(&self.system.a, "A")?;
        let b = matrix(&self.system.b, "B")?;
        let kappa_b = self.system.kappa_b.unwrap_or_else(|| b.frobenius());
        let system = SystemModel::new(a, b, None, self.system.delta, kappa_b, self.system.w_bound)
            .map_err(|e| HarnessError::Config(format!("system: {e}")))?;
        let segs = |v: &[SegmentEntry]| v.iter().map(|s| Segment::new(s.0, s.1, s.2.clone())).collect();
        let spec = ScenarioSpec {
            name: self.name.clone(),
            horizon: self.horizon,
            system,
            p: self.policy.p,
            kappa_m: self.policy.kappa_m,
            theta_segments: segs(&self.theta_segments),
            w_segments: segs(&self.w_segments),
            g: self.g,
            l: self.l,
            predictions: match self.predictions {
                Some(PredictionBlock::SignFlip { phi }) => PredictionPolicy::SignFlip { phi },
                None => PredictionPolicy::None,
            },
        };
        spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        let rows = |m: &Matrix| (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
        let segs = |v: &[Segment]| v.iter().map(|s| SegmentEntry(s.start, s.end, s.value.clone())).collect();
        ScenarioFile {
            name: spec.name.clone(),
            horizon: spec.horizon,
            system: SystemBlock {
                a: rows(spec.system.a()),
                b: rows(spec.system.b()),
                delta: spec.system.delta(),
                w_bound: spec.system.w_bound(),
                kappa_b: Some(spec.system.kappa_b()),
            },
            policy: PolicyBlock { p: spec.p, kappa_m: spec.kappa_m },
            theta_segments: segs(&spec.theta_segments),
            w_segments: segs(&spec.w_segments),
            g: spec.g,
            l: spec.l,
            predictions: match spec.predictions {
                PredictionPolicy::SignFlip { phi } => Some(PredictionBlock::SignFlip { phi }),
                PredictionPolicy::None => None,
            },
            controller: None,
        }
    }
}

/// A builtin name, or a path to a scenario file.
pub fn load_scenario(name_or_path: &str) -> Result<(ScenarioSpec, Option<ControllerBlock>)> {
    if let Ok(spec) = builtin_scenario(name_or_path) {
        return Ok((spec, None));
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(HarnessError::Config(format!("'{name_or_path}' is neither a builtin scenario nor a file")));
    }
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ReadConfig { path: path.into(), source })?;
    let file = ScenarioFile::parse(&text)?;
    Ok((file.to_spec()?, file.controller))
}

/// Everything `run` needs, after overrides.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: ScenarioSpec,
    pub controller: ControllerKind,
    pub seed: u64,
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub kappa_m: Option<f64>,
    pub p: Option<usize>,
}

pub fn parse_controller(s: &str) -> Result<ControllerKind> {
    s.parse().map_err(|e: adactl_core::Error| HarnessError::Config(e.to_string()))
}

impl RunConfig {
    pub fn resolve(
        scenario: &str,
        controller: Option<&str>,
        seed: Option<u64>,
        sigma: Option<f64>,
        overrides: &Overrides,
    ) -> Result<Self> {
        let (spec, block) = load_scenario(scenario)?;
        let spec = apply_overrides(spec, overrides)?;
        let kind = match (controller, &block) {
            (Some(c), _) => c.to_string(),
            (None, Some(b)) => b.kind.clone(),
            (None, None) => return Err(HarnessError::Config("no controller given".into())),
        };
        let sigma = sigma.or(block.as_ref().and_then(|b| b.sigma));
        if let Some(s) = sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(HarnessError::Config("sigma must be positive and finite".into()));
            }
        }
        Ok(RunConfig {
            spec,
            controller: parse_controller(&kind)?,
            seed: seed.or(block.and_then(|b| b.seed)).unwrap_or(0),
            sigma,
        })
    }
}

pub fn apply_overrides(mut spec: ScenarioSpec, o: &Overrides) -> Result<ScenarioSpec> {
    let bad = |e: adactl_core::Error| HarnessError::Config(e.to_string());
    if let Some(t) = o.horizon {
        spec = spec.with_horizon(t).map_err(bad)?;
    }
    if let Some(k) = o.kappa_m {
        spec = spec.with_kappa_m(k).map_err(bad)?;
    }
    if let Some(p) = o.p {
        spec = spec.with_memory(p).map_err(bad)?;
    }
    Ok(spec)
}
