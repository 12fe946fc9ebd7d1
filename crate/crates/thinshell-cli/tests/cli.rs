//! End-to-end tests of the `thinshell` binary and the runner layer:
//! exit codes, deterministic reports, output schemas, and the operator
//! sweep's advertised algebra.

use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};

use thinshell_cli::config::{self, compile, RunConfig};
use thinshell_cli::runner;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thinshell"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn verify_sphere_slip_passes() {
    let out = run(&[
        "verify",
        "--surface",
        "sphere:R=1",
        "--profile",
        "slip",
        "--field",
        "random:count=2,seed=3",
        "--points",
        "sobol:count=4",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["meta"]["checks_failed"], 0);
    assert!(report["meta"]["checks_total"].as_u64().unwrap() > 0);
}

#[test]
fn verify_ellipsoid_partial_slip_reports_anisotropy_gap() {
    let out = run(&[
        "verify",
        "--surface",
        "ellipsoid:a=1,b=1.3,c=2",
        "--profile",
        "alpha:0.5",
        "--field",
        "random:count=1,seed=9",
        "--points",
        "sobol:count=4",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let aniso: Vec<&serde_json::Value> = checks
        .iter()
        .filter(|c| c["check_id"] == "anisotropy")
        .collect();
    assert!(!aniso.is_empty());
    for record in aniso {
        // generic ellipsoid points: the extrinsic gap is genuinely there
        assert!(record["pass"].as_bool().unwrap());
        assert!(record["residual"].as_f64().unwrap() > 1e-4);
    }
    // the family limit checks all pass
    assert!(checks
        .iter()
        .filter(|c| c["check_id"] == "alpha_family")
        .all(|c| c["pass"].as_bool().unwrap()));
}

#[test]
fn malformed_surface_expression_exits_2_with_offset() {
    let out = run(&["verify", "--surface", "graph:f=sin(u1", "--profile", "slip"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("syntax error at byte"), "stderr: {err}");
}

#[test]
fn tolerance_override_can_force_failure() {
    let out = run(&[
        "verify",
        "--surface",
        "sphere:R=1",
        "--profile",
        "slip",
        "--field",
        "random:count=1,seed=3",
        "--points",
        "sobol:count=2",
        "--tol.decomposition=1e-30",
        "--check",
        "decomposition",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.json");
    let path_b = dir.path().join("b.json");
    let args = |path: &std::path::Path| {
        vec![
            "verify".to_string(),
            "--surface".into(),
            "torus:R=2,r=0.7".into(),
            "--profile".into(),
            "hodge".into(),
            "--field".into(),
            "random:count=2,seed=11".into(),
            "--points".into(),
            "sobol:count=3".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            path.display().to_string(),
        ]
    };
    let out = bin().args(args(&path_a)).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let out = bin().args(args(&path_b)).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read(&path_a).unwrap();
    let b = std::fs::read(&path_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "reports differ between identical runs");
}

#[test]
fn check_tuples_appear_exactly_once() {
    let out = run(&[
        "verify",
        "--surface",
        "torus:R=2,r=0.7",
        "--field",
        "random:count=2,seed=5",
        "--points",
        "sobol:count=3",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mut seen = std::collections::HashSet::new();
    for check in report["checks"].as_array().unwrap() {
        let key = format!(
            "{}|{}|{}|{}|{:?}",
            check["check_id"], check["profile"], check["alpha"], check["field"], check["point"]
        );
        assert!(seen.insert(key.clone()), "duplicate check tuple {key}");
    }
}

#[test]
fn csv_report_has_the_documented_columns() {
    let out = run(&[
        "verify",
        "--surface",
        "sphere:R=1",
        "--profile",
        "slip",
        "--field",
        "random:count=1,seed=3",
        "--points",
        "sobol:count=2",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "check_id,surface,profile,alpha,u1,u2,residual,tolerance,pass,order"
    );
    assert!(text.lines().count() > 10);
}

#[test]
fn dump_config_round_trips() {
    let out = run(&[
        "verify",
        "--surface",
        "ellipsoid:a=1,b=1.3,c=2",
        "--profile",
        "alpha:0.3",
        "--points",
        "sobol:count=2",
        "--dump-config",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let document: RunConfig = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(document.surface.name, "ellipsoid");
    assert_eq!(document.profiles, vec!["alpha:0.3".to_string()]);
    compile(&document).expect("dumped config compiles");
}

#[test]
fn config_file_drives_a_run_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "surface": {"name": "custom", "components": ["u1", "u2", "0"],
                         "domain": [[-1.0, 1.0], [-1.0, 1.0]]},
            "profiles": ["slip"],
            "fields": [{"expr": ["u1^2", "u1*u2"]}],
            "samples": {"points": [[0.3, 0.4]]},
            "seed": 5
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&[
        "verify",
        "--config",
        config_path.to_str().unwrap(),
        "--check",
        "decomposition",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["meta"]["seed"], 5);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["check_id"] == "decomposition"));
}

#[test]
fn catalog_lists_and_describes() {
    let out = run(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["sphere", "ellipsoid", "torus", "graph", "custom"] {
        assert!(text.contains(name), "missing {name}");
    }
    let out = run(&["catalog", "--describe", "torus"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("tube angle"));

    let out = run(&["catalog", "--describe", "shpere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sphere"), "suggestion expected");
}

#[test]
fn operator_sweep_is_quadratic_in_alpha() {
    // the effective operator is a polynomial of degree two in alpha, so
    // a quadratic fit of the sweep reproduces it to roundoff
    let document = RunConfig {
        surface: config::parse_surface_shorthand("ellipsoid:a=1,b=1.3,c=2").unwrap(),
        fields: vec![config::parse_field_shorthand("random:count=1,seed=4").unwrap()],
        samples: config::parse_points_shorthand("0.9,1.2").unwrap(),
        alpha_grid: Some((0..=10).map(|k| k as f64 / 10.0).collect()),
        ..RunConfig::default()
    };
    let cc = compile(&document).unwrap();
    let rows = runner::run_operator(&cc).unwrap();
    assert_eq!(rows.len(), 11);
    let alphas: Vec<f64> = rows.iter().map(|r| r.alpha.unwrap()).collect();
    for comp in 0..2 {
        let values: Vec<f64> = rows.iter().map(|r| r.components[comp]).collect();
        let vandermonde = DMatrix::from_fn(alphas.len(), 3, |r, c| alphas[r].powi(c as i32));
        let rhs = DVector::from_column_slice(&values);
        let coeffs = vandermonde
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-300)
            .unwrap();
        let residual = (vandermonde * coeffs - rhs).abs().max();
        assert!(
            residual < 1e-10,
            "component {comp}: fit residual {residual:e}"
        );
    }
}

#[test]
fn operator_on_flat_chart_is_alpha_independent() {
    // zero curvature: Ric = S = 0, so the whole family collapses to the
    // Bochner Laplacian at every alpha
    let document = RunConfig {
        surface: config::SurfaceSpec {
            name: "custom".into(),
            components: Some(vec!["u1".into(), "u2".into(), "0".into()]),
            domain: Some(vec![[-1.0, 1.0], [-1.0, 1.0]]),
            ..config::SurfaceSpec::default()
        },
        fields: vec![config::parse_field_shorthand("sin(u1)*u2;cos(u2)").unwrap()],
        samples: config::parse_points_shorthand("0.2,-0.4").unwrap(),
        alpha_grid: Some(vec![0.0, 0.37, 1.0]),
        operators: Some(vec!["alpha".into(), "bochner".into()]),
        ..RunConfig::default()
    };
    let cc = compile(&document).unwrap();
    let rows = runner::run_operator(&cc).unwrap();
    let bochner: Vec<f64> = rows
        .iter()
        .find(|r| r.operator == "bochner")
        .unwrap()
        .components
        .clone();
    for row in rows.iter().filter(|r| r.operator == "alpha") {
        for (a, b) in row.components.iter().zip(&bochner) {
            assert!(
                (a - b).abs() < 1e-12,
                "alpha sweep deviates on a flat chart"
            );
        }
    }
}

#[test]
fn operator_endpoint_difference_is_twice_ricci() {
    // α = 0 minus α = 1 equals 2 Ric V + 4·0·S² V = 2 Ric V
    let document = RunConfig {
        surface: config::parse_surface_shorthand("torus:R=2,r=0.7").unwrap(),
        fields: vec![config::parse_field_shorthand("random:count=1,seed=8").unwrap()],
        samples: config::parse_points_shorthand("sobol:count=5").unwrap(),
        alpha_grid: Some(vec![0.0, 1.0]),
        ..RunConfig::default()
    };
    let cc = compile(&document).unwrap();
    let rows = runner::run_operator(&cc).unwrap();
    assert_eq!(rows.len(), 10);
    for pair in rows.chunks(2) {
        let (zero, one) = (&pair[0], &pair[1]);
        assert_eq!(zero.alpha, Some(0.0));
        assert_eq!(one.alpha, Some(1.0));
        let point = &zero.point;
        let ric = thinshell::geometry::intrinsic_at(&cc.chart, point)
            .unwrap()
            .ricci_mixed;
        let v = cc.fields[0].field.values(point).unwrap();
        let expected = ric * v * 2.0;
        for i in 0..2 {
            let diff = zero.components[i] - one.components[i];
            assert!(
                (diff - expected[i]).abs() < 1e-10 * (1.0 + expected[i].abs()),
                "endpoint difference is not 2 Ric V"
            );
        }
    }
}

#[test]
fn convergence_command_emits_orders() {
    let out = run(&[
        "convergence",
        "--surface",
        "ellipsoid:a=1,b=1.3,c=2",
        "--profile",
        "slip",
        "--field",
        "random:count=1,seed=2",
        "--points",
        "sobol:count=2",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    assert_eq!(header, "check,surface,profile,u1,u2,step,residual,order");
    assert!(text.contains("metric_expansion"));
    assert!(text.contains("shape_radial"));
    assert!(text.contains("oracle_stencil"));
    // shape_radial rows carry an order near 2
    for line in text.lines().filter(|l| l.starts_with("shape_radial")) {
        let order: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((1.5..2.5).contains(&order), "order {order} out of range");
    }
}

#[test]
fn unknown_check_id_is_rejected_with_suggestion() {
    let out = run(&["verify", "--surface", "sphere:R=1", "--check", "weitzenbok"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("weitzenbock"),
        "stderr: {}",
        stderr(&out)
    );
}
