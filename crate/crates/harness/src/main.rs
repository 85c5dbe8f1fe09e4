use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adactl_core::ControllerKind;
use adactl_harness::bench::bench;
use adactl_harness::config::{apply_overrides, load_scenario, parse_controller, Overrides, RunConfig};
use adactl_harness::run::{execute, report_path, write_outputs};
use adactl_harness::sweep::{sweep, write_summary};
use adactl_harness::verify::{failure_list, run_suites, Level, VerifyContext};
use adactl_harness::{HarnessError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adactl", version, about = "Online control of linear systems with adaptive FTRL controllers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode; writes the trace CSV and a regret report next to it.
    Run(RunArgs),
    /// Run controllers × seeds and print a summary table.
    Sweep(SweepArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Time full episodes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ScenarioOverrides {
    /// Horizon T.
    #[arg(long = "t")]
    t: Option<usize>,
    #[arg(long = "kappa-m")]
    kappa_m: Option<f64>,
    /// Memory length of the policy.
    #[arg(long)]
    p: Option<usize>,
}

impl ScenarioOverrides {
    fn get(&self) -> Overrides {
        Overrides { horizon: self.t, kappa_m: self.kappa_m, p: self.p }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Builtin name (A–F) or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// ftrl, adaftrl, optftrl, gpc or basic. May come from the scenario file instead.
    #[arg(long)]
    controller: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the prescribed σ of the adaptive controllers.
    #[arg(long)]
    sigma: Option<f64>,
    /// Trace CSV path; the report goes to the same path with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: ScenarioOverrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: String,
    /// Comma-separated controller names.
    #[arg(long, value_delimiter = ',', default_value = "gpc,ftrl,adaftrl")]
    controllers: Vec<String>,
    /// Comma-separated seeds, or a half-open range `a..b`.
    #[arg(long, default_value = "0")]
    seeds: String,
    #[arg(long)]
    sigma: Option<f64>,
    /// Summary CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-run traces.
    #[arg(long = "trace-dir")]
    trace_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: ScenarioOverrides,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced instance counts and horizons (default).
    #[arg(long, conflicts_with = "full")]
    fast: bool,
    /// Full instance counts and 5000-step regret-bound checks.
    #[arg(long)]
    full: bool,
    /// Run only the named suite; repeatable.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Also write the failure list as JSON to this path.
    #[arg(long = "failures")]
    failures: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, value_delimiter = ',', default_value = "ftrl,adaftrl,optftrl,gpc,basic")]
    controllers: Vec<String>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[command(flatten)]
    overrides: ScenarioOverrides,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn stdout_err(e: io::Error) -> HarnessError {
    HarnessError::Write { path: "<stdout>".into(), source: e }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&a.scenario, a.controller.as_deref(), a.seed, a.sigma, &a.overrides.get())?;
    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}_{}_{}.csv", cfg.spec.name, cfg.controller, cfg.seed)));
    let outcome = execute(&cfg)?;
    write_outputs(&out, &cfg.spec, &outcome, cfg.seed)?;
    let r = &outcome.report;
    let mut o = io::stdout().lock();
    let mut lines = vec![
        format!("final cumulative cost: {:.6}", r.learner_cost),
        format!("benchmark cost: {:.6}", r.benchmark_cost),
        format!("regret: {:.6}", r.regret),
    ];
    if let (Some(rhs), Some(ok)) = (r.bound_rhs, r.satisfied) {
        lines.push(format!("bound: {rhs:.6} ({})", if ok { "satisfied" } else { "violated" }));
    }
    lines.push(format!("trace: {}", out.display()));
    lines.push(format!("report: {}", report_path(&out).display()));
    for l in lines {
        writeln!(o, "{l}").map_err(stdout_err)?;
    }
    Ok(())
}

fn parse_controllers(names: &[String]) -> Result<Vec<ControllerKind>> {
    names.iter().map(|s| parse_controller(s.trim())).collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || HarnessError::Config(format!("invalid seed list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let (spec, _) = load_scenario(&a.scenario)?;
    let spec = apply_overrides(spec, &a.overrides.get())?;
    let controllers = parse_controllers(&a.controllers)?;
    let seeds = parse_seeds(&a.seeds)?;
    if let Some(s) = a.sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(HarnessError::Config("sigma must be positive and finite".into()));
        }
    }
    if let Some(dir) = &a.trace_dir {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write { path: dir.clone(), source })?;
    }
    let summary = sweep(&spec, &controllers, &seeds, a.sigma, a.trace_dir.as_deref())?;
    match &a.out {
        Some(path) => {
            let f = File::create(path).map_err(|source| HarnessError::Write { path: path.clone(), source })?;
            write_summary(BufWriter::new(f), &summary)?;
        }
        None => write_summary(io::stdout().lock(), &summary)?,
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let level = if a.full { Level::Full } else { Level::Fast };
    let ctx = VerifyContext::new(level);
    let only = (!a.suites.is_empty()).then_some(a.suites.as_slice());
    if let Some(names) = only {
        let known = adactl_harness::verify::suite_names();
        if let Some(n) = names.iter().find(|n| !known.contains(&n.as_str())) {
            return Err(HarnessError::Config(format!("unknown suite '{n}'")));
        }
    }
    let results = run_suites(&ctx, only);
    let mut out = io::stdout().lock();
    for r in &results {
        writeln!(
            out,
            "[{}] {:<22} {:>6} checks {:>4} failed  {:.2}s",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.checks,
            r.failed,
            r.elapsed.as_secs_f64()
        )
        .map_err(stdout_err)?;
        for m in &r.failures {
            writeln!(out, "       {m}").map_err(stdout_err)?;
        }
    }
    let list = failure_list(&results);
    writeln!(out, "failures: {list}").map_err(stdout_err)?;
    if let Some(path) = &a.failures {
        std::fs::write(path, format!("{list}\n")).map_err(|source| HarnessError::Write { path: path.clone(), source })?;
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.name.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Verify(failed))
    }
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let (spec, _) = load_scenario(&a.scenario)?;
    let spec = apply_overrides(spec, &a.overrides.get())?;
    let controllers = parse_controllers(&a.controllers)?;
    let results = bench(&spec, &controllers, a.repeats)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{:<12} {:>7} {:>10} {:>10} {:>12}", "controller", "steps", "best_ms", "mean_ms", "steps/s")
        .map_err(stdout_err)?;
    for r in &results {
        writeln!(
            out,
            "{:<12} {:>7} {:>10.2} {:>10.2} {:>12.0}",
            r.controller.name(),
            r.steps,
            r.best.as_secs_f64() * 1e3,
            r.mean.as_secs_f64() * 1e3,
            r.steps_per_sec()
        )
        .map_err(stdout_err)?;
    }
    Ok(())
}
