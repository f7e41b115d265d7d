use std::path::Path;

use bdm_core::grid::GridSet;
use bdm_core::pairing::ClassDescriptor;
use bdm_core::parallel::with_workers;
use bdm_core::suite::*;

fn small() -> GridSet {
    GridSet {
        n_x1: 16,
        n_x2: 32,
        x2_max: 1.0,
        n_theta: 16,
        n_xi2: 64,
        hardy_dim: 64,
        symbol_modes: 16,
        fd_order: 4,
    }
}

fn config(suite: Suite, tuples: usize) -> RunConfig {
    let mut c = RunConfig::new(suite);
    c.grids = small();
    c.generators.tuples = Some(tuples);
    c.seed = 5;
    c
}

#[test]
fn configs_fill_in_defaults() {
    let c = RunConfig::from_json(r#"{"suite": "verify-cocycle"}"#).unwrap();
    assert_eq!(c.tolerance, 1e-5);
    assert_eq!(c.seed, 0);
    assert_eq!(c.convention, Convention::Literal);
    assert_eq!(c.grids, GridSet::default());
    assert_eq!((c.grids.n_x1, c.grids.n_theta, c.grids.hardy_dim), (64, 64, 256));
    assert_eq!(c, RunConfig::new(Suite::VerifyCocycle));
    let c = RunConfig::from_json(r#"{"suite": "sweep", "convention": "consistent", "tolerance": 0}"#).unwrap();
    assert_eq!((c.convention, c.tolerance), (Convention::Consistent, 0.0));
}

#[test]
fn bad_configs_are_rejected() {
    for text in [
        r#"{}"#,
        r#"{"suite": "verify-cocycle", "extra": 1}"#,
        r#"{"suite": "verify-cocycle", "tolerance": -1e-3}"#,
        r#"{"suite": "verify-cocycle", "grids": {"n_x1": 3}}"#,
        r#"{"suite": "sweep", "generators": {"sweep_levels": 1}}"#,
        r#"{"suite": "pair-index", "generators": {"classes": [{"kind": "boundary_winding", "k": 1, "component": 2}]}}"#,
        r#"{"suite": "verify-cocycle", "generators": {"symbols": [[]]}}"#,
    ] {
        assert!(RunConfig::from_json(text).is_err(), "{text}");
    }
}

#[test]
fn output_paths_and_formats() {
    assert_eq!(replay_dir(Path::new("out/r.json")), Path::new("out/r.json.replay"));
    assert_eq!(replay_dir(Path::new("r.csv")), Path::new("r.csv.replay"));
    let mut c = RunConfig::new(Suite::VerifyTrace);
    assert_eq!(output_format(&c, Path::new("r.csv")), Format::Csv);
    assert_eq!(output_format(&c, Path::new("r.txt")), Format::Json);
    c.output.format = Some(Format::Json);
    assert_eq!(output_format(&c, Path::new("r.csv")), Format::Json);
}

#[test]
fn failing_tuples_replay_to_the_same_residuals() {
    let mut c = config(Suite::VerifyCocycle, 2);
    c.tolerance = 0.0;
    let out = run_suite(&c).unwrap();
    assert!(!out.report.pass);
    assert_eq!(out.exit_code(), 1);
    assert_eq!(out.report.failing, ["t000", "t001"]);
    let (id, replay) = &out.replays[1];
    assert_eq!(id, "t001");
    let replay = RunConfig::from_json(&serde_json::to_string(replay).unwrap()).unwrap();
    let again = run_suite(&replay).unwrap();
    let values = |r: &Report, id: &str| -> Vec<f64> { r.rows.iter().filter(|x| x.tuple_id == id).map(|x| x.value).collect() };
    assert_eq!(values(&again.report, "s000"), values(&out.report, "t001"));
}

#[test]
fn reports_serialize_to_fixed_columns() {
    let out = run_suite(&config(Suite::VerifyTrace, 1)).unwrap();
    let csv = out.report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), out.report.rows.len() + 1);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 9 && l.starts_with("verify-trace,t000,")));
    let names: Vec<&str> = out.report.rows.iter().map(|r| r.residual_name.as_str()).collect();
    for want in ["commutator_trace_rel", "fedosov_step", "stokes_chart", "stokes_boundary"] {
        assert!(names.contains(&want), "{names:?}");
    }
    assert_eq!(names.iter().filter(|n| n.starts_with("dilation_trace_")).count(), TRACE_DILATIONS.len());
    let back: serde_json::Value = serde_json::from_str(&out.report.to_json()).unwrap();
    assert_eq!(back["suite"], "verify-trace");
    assert_eq!(back["artifact_version"], ARTIFACT_VERSION);
}

#[test]
fn sweep_reports_levels_and_orders() {
    let mut c = config(Suite::Sweep, 1);
    c.convention = Convention::Consistent;
    c.grids = GridSet { n_x1: 8, n_x2: 16, n_theta: 16, n_xi2: 32, hardy_dim: 32, symbol_modes: 8, ..small() };
    let out = run_suite(&c).unwrap();
    let rows = &out.report.rows;
    assert_eq!(rows.len(), 3 * 2 + 3);
    assert!(rows.iter().filter(|r| r.residual_name.contains("@L") && !r.residual_name.starts_with("order_")).all(|r| r.pass));
    let order: Vec<_> = rows.iter().filter(|r| r.residual_name.starts_with("order_")).collect();
    assert_eq!(order.len(), 3);
    for r in order {
        assert!(r.value >= 0.0 && r.value.is_finite(), "{r:?}");
        assert_eq!(r.grid_n_x1, 16);
    }
}

#[test]
fn pair_index_reports_calibration_and_classes() {
    let mut c = RunConfig::new(Suite::PairIndex);
    c.grids = GridSet { n_x1: 32, n_x2: 64, n_theta: 32, n_xi2: 64, hardy_dim: 32, symbol_modes: 16, fd_order: 8, x2_max: 1.0 };
    c.generators.classes = vec![ClassDescriptor::BoundaryWinding { k: 2, component: -1, wobble: 0.3 }];
    let out = run_suite(&c).unwrap();
    assert!(out.report.pass, "{}", out.report.to_json());
    assert_eq!(out.report.rows.len(), 1);
    assert_eq!(out.report.rows[0].tuple_id, "c000");
    let cal = &out.report.records[0]["calibration"];
    assert!(cal.is_object(), "{cal}");
    assert_eq!(out.report.records[1]["oracle"], -2);
}

#[test]
fn reports_do_not_depend_on_the_worker_count() {
    let c = config(Suite::VerifyCocycle, 3);
    let one = with_workers(Some(1), || run_suite(&c).unwrap().report.to_json());
    let three = with_workers(Some(3), || run_suite(&c).unwrap().report.to_json());
    let default = run_suite(&c).unwrap().report.to_json();
    assert_eq!(one, three);
    assert_eq!(one, default);
}
