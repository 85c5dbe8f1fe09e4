use adactl_core::{builtin_scenario, run_episode, ControllerKind, EpisodeOptions};
use adactl_harness::config::ScenarioFile;
use adactl_harness::run::predictions_for;
use adactl_harness::trace::{column_names, read_trace, write_trace};

fn round_trip(kind: ControllerKind, scenario: &str, t: usize) {
    let spec = builtin_scenario(scenario).unwrap().with_horizon(t).unwrap();
    let preds = predictions_for(kind, &spec, 4).unwrap();
    let trace = run_episode(kind, &spec, preds.as_ref(), &EpisodeOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_trace(&mut buf, &spec, &trace, 4).unwrap();
    let parsed = read_trace(buf.as_slice()).unwrap();

    assert_eq!(parsed.controller, kind.name());
    assert_eq!(parsed.seed, 4);
    assert_eq!(parsed.scenario.to_spec().unwrap(), spec);
    assert_eq!(parsed.scenario, ScenarioFile::from_spec(&spec));
    assert_eq!(parsed.constants.kappa_m, trace.constants.kappa_m);
    assert_eq!(parsed.columns, column_names(spec.system.dx(), spec.system.du()));
    assert_eq!(parsed.rows.len(), t);

    // bit-exact
    for (row, r) in parsed.rows.iter().zip(&trace.rows) {
        let mut want = vec![Some(r.t as f64)];
        want.extend(r.x.iter().chain(&r.u).chain(&r.w).map(|&v| Some(v)));
        want.extend([Some(r.cost), Some(r.cum_cost), Some(r.grad_norm), r.signal, r.h, r.sigma, r.nu_hat, Some(r.nu)]);
        assert_eq!(row.len(), want.len());
        for (a, b) in row.iter().zip(&want) {
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    let cost = parsed.column("cost").unwrap();
    let cum = parsed.column("cum_cost").unwrap();
    let mut s = 0.0;
    for (c, k) in cost.iter().zip(&cum) {
        s += c.unwrap();
        assert!((s - k.unwrap()).abs() <= 1e-9 * s.abs().max(1.0));
    }
}

#[test]
fn adaptive_traces_round_trip() {
    round_trip(ControllerKind::FtrlC, "A", 400);
    round_trip(ControllerKind::AdaFtrlC, "B", 400);
    round_trip(ControllerKind::OptFtrlC, "D", 400);
}

#[test]
fn baseline_traces_have_empty_schedule_cells() {
    round_trip(ControllerKind::Gpc, "E", 300);
    let spec = builtin_scenario("F").unwrap().with_horizon(50).unwrap();
    let trace = run_episode(ControllerKind::BasicFtrl, &spec, None, &EpisodeOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_trace(&mut buf, &spec, &trace, 0).unwrap();
    let parsed = read_trace(buf.as_slice()).unwrap();
    assert!(parsed.column("sigma").unwrap().iter().all(Option::is_none));
    assert!(parsed.column("nu_hat").unwrap().iter().all(Option::is_none));
}

#[test]
fn header_lines_precede_columns() {
    let spec = builtin_scenario("A").unwrap().with_horizon(3).unwrap();
    let trace = run_episode(ControllerKind::FtrlC, &spec, None, &EpisodeOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_trace(&mut buf, &spec, &trace, 0).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# controller=ftrl seed=0");
    assert!(lines[1].starts_with("# scenario={"));
    assert!(lines[2].starts_with("# constants={"));
    assert_eq!(lines[3], "t,x1,u1,w1,cost,cum_cost,grad_norm,signal,h,sigma,nu_hat,nu");
    assert_eq!(lines.len(), 7);
}

#[test]
fn truncated_header_rejected() {
    assert!(read_trace("t,x1\n1,0\n".as_bytes()).is_err());
}
