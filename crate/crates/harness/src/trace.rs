//! Trace CSV files.
//!
//! Lines starting with `#` carry the resolved scenario and constants as
//! JSON. The table has the columns
//!
//! `t, x1..x{dx}, u1..u{du}, w1..w{dx}, cost, cum_cost, grad_norm, signal, h, sigma, nu_hat, nu`
//!
//! where `signal` is `g_t` (or `ε_t` for the optimistic controller). Columns
//! that do not apply to a controller are empty. Numbers use the shortest
//! representation that parses back to the same `f64`.

use std::io::{BufRead, Write};

use adactl_core::{BoundConstants, RunTrace, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::error::{HarnessError, Result};

/// Serializable mirror of [`BoundConstants`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsHeader {
    pub l: f64,
    pub g: f64,
    pub w: f64,
    #[serde(rename = "kappa_M")]
    pub kappa_m: f64,
    #[serde(rename = "kappa_B")]
    pub kappa_b: f64,
    pub delta: f64,
    pub p: usize,
    pub dx: usize,
    pub du: usize,
    pub z: f64,
    pub sigma: Option<f64>,
    pub step_size: Option<f64>,
}

impl ConstantsHeader {
    pub fn new(c: &BoundConstants, sigma: Option<f64>, step_size: Option<f64>) -> Self {
        ConstantsHeader {
            l: c.l,
            g: c.g,
            w: c.w,
            kappa_m: c.kappa_m,
            kappa_b: c.kappa_b,
            delta: c.delta,
            p: c.p,
            dx: c.dx,
            du: c.du,
            z: c.z,
            sigma,
            step_size,
        }
    }
}

pub fn column_names(dx: usize, du: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=dx).map(|i| format!("x{i}")));
    cols.extend((1..=du).map(|i| format!("u{i}")));
    cols.extend((1..=dx).map(|i| format!("w{i}")));
    cols.extend(["cost", "cum_cost", "grad_norm", "signal", "h", "sigma", "nu_hat", "nu"].map(String::from));
    cols
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_trace<W: Write>(mut out: W, spec: &ScenarioSpec, trace: &RunTrace, seed: u64) -> Result<()> {
    let header = |e: std::io::Error| HarnessError::Trace(e.into());
    let scenario = serde_json::to_string(&ScenarioFile::from_spec(spec))?;
    let consts = serde_json::to_string(&ConstantsHeader::new(&trace.constants, trace.sigma_scale, trace.step_size))?;
    writeln!(out, "# controller={} seed={seed}", trace.controller).map_err(header)?;
    writeln!(out, "# scenario={scenario}").map_err(header)?;
    writeln!(out, "# constants={consts}").map_err(header)?;
    let (dx, du) = (trace.constants.dx, trace.constants.du);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(column_names(dx, du))?;
    for r in &trace.rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.x.iter().chain(&r.u).chain(&r.w).map(|&v| num(v)));
        rec.extend([num(r.cost), num(r.cum_cost), num(r.grad_norm)]);
        rec.extend([opt(r.signal), opt(r.h), opt(r.sigma), opt(r.nu_hat), num(r.nu)]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(header)?;
    Ok(())
}

/// A trace read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTrace {
    pub controller: String,
    pub seed: u64,
    pub scenario: ScenarioFile,
    pub constants: ConstantsHeader,
    pub columns: Vec<String>,
    /// `None` for empty cells
    pub rows: Vec<Vec<Option<f64>>>,
}

impl ParsedTrace {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_trace<R: BufRead>(mut input: R) -> Result<ParsedTrace> {
    let bad = |m: &str| HarnessError::Config(format!("trace header: {m}"));
    let mut header = Vec::new();
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line).map_err(|e| HarnessError::Trace(e.into()))? == 0 {
            break;
        }
        match line.strip_prefix("# ") {
            Some(h) => header.push(h.trim_end().to_string()),
            None => body.push_str(&line),
        }
    }
    let field = |key: &str| header.iter().find_map(|h| h.strip_prefix(key)).ok_or_else(|| bad(key));
    let first = header.first().ok_or_else(|| bad("missing"))?;
    let mut controller = None;
    let mut seed = None;
    for kv in first.split_whitespace() {
        match kv.split_once('=') {
            Some(("controller", v)) => controller = Some(v.to_string()),
            Some(("seed", v)) => seed = v.parse().ok(),
            _ => {}
        }
    }
    let scenario: ScenarioFile = serde_json::from_str(field("scenario=")?)?;
    let constants: ConstantsHeader = serde_json::from_str(field("constants=")?)?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let columns: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| bad("non-numeric cell"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(ParsedTrace {
        controller: controller.ok_or_else(|| bad("controller"))?,
        seed: seed.ok_or_else(|| bad("seed"))?,
        scenario,
        constants,
        columns,
        rows,
    })
}
