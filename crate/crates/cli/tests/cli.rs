use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gatedist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gatedist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gatedist(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn report(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn f(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_dual_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("dual.json");
    ok(&[
        "gen",
        "--spec",
        r#"{"family": "dual_random", "d": 3, "seed": 4}"#,
        "--out",
        path_str(&g),
    ]);
    let r = report(&["analyze", path_str(&g)]);
    assert!((f(&r, "kd") - 12f64.sqrt()).abs() < 1e-6, "{r}");
    assert!(f(&r, "ubb_residual") < 1e-8);
}

#[test]
fn gen_canonical_then_analyze_schmidt() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("c.json");
    let spec = format!(
        r#"{{"family": "canonical2q", "params": {{"c1": {}, "c2": 0, "c3": 0}}, "d": 2}}"#,
        std::f64::consts::FRAC_PI_4
    );
    ok(&["gen", "--spec", &spec, "--out", path_str(&g)]);
    let r = report(&["analyze", path_str(&g)]);
    let lambdas: Vec<f64> = r["schmidt"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (got, want) in lambdas.iter().zip([0.5, 0.5, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-12, "{lambdas:?}");
    }
}

#[test]
fn gen_matches_spec_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let spec = r#"{"family": "cue_random", "d": 3, "seed": 11}"#;
    ok(&["gen", "--spec", spec, "--out", path_str(&a)]);
    let read = gatedist::io::read_gate(&a).unwrap();
    let built: gatedist::GateFamilySpec = serde_json::from_str(spec).unwrap();
    assert_eq!(read.matrix(), built.build().unwrap().matrix());
}

#[test]
fn analyze_reference_gates() {
    let r = report(&["analyze", "--spec", r#"{"family": "u_cz", "d": 2}"#]);
    assert!((f(&r, "kd") - 1.530734).abs() < 1e-6);
    assert!((f(&r, "closed_form") - 1.530734).abs() < 1e-6);

    let r = report(&[
        "analyze",
        "--spec",
        r#"{"family": "frac_swap", "params": {"alpha": 1.0}, "d": 3}"#,
    ]);
    assert!((f(&r, "kd") - 3.4641016).abs() < 1e-6);

    let r = report(&["analyze", "--spec", r#"{"family": "identity", "d": 3}"#]);
    for key in ["kd", "kd_star", "kd_upper", "e_p"] {
        assert!(f(&r, key).abs() < 1e-6, "{key} = {}", f(&r, key));
    }
}

#[test]
fn spec_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("spec.json");
    fs::write(&s, r#"{"family": "swap", "d": 2}"#).unwrap();
    let r = report(&["analyze", "--spec", path_str(&s)]);
    assert!((f(&r, "kd") - 2.0).abs() < 1e-6);
}

#[test]
fn reproducible_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        ok(&[
            "ensemble",
            "--samples",
            "4",
            "--seed",
            "9",
            "--reproducible",
            "--out",
            path_str(&p),
        ]);
        fs::read(p).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("family,"));
    assert_eq!(text.lines().count(), 1 + 3 * 4);

    let stamped = ok(&["scan2q", "--res", "3"]);
    assert!(stamped.starts_with('#'));
    let plain = ok(&["scan2q", "--res", "3", "--reproducible"]);
    assert_eq!(
        stamped.lines().skip(1).collect::<Vec<_>>(),
        plain.lines().collect::<Vec<_>>()
    );
}

#[test]
fn config_file_selects_experiment_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"experiment": "scan2q", "res": 9, "reproducible": true}"#,
    )
    .unwrap();
    let csv = ok(&["--config", path_str(&cfg)]);
    assert_eq!(csv.lines().count(), 1 + 9 * 10 * 11 / 6);
    let csv = ok(&["--config", path_str(&cfg), "--res", "3"]);
    assert_eq!(csv.lines().count(), 1 + 3 * 4 * 5 / 6);
}

#[test]
fn ubb_demo_rows_end_converged() {
    let csv = ok(&[
        "ubb-demo",
        "--samples",
        "2",
        "--seed",
        "3",
        "--reproducible",
    ]);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("sample,seeds_tried,status,step,d_n,linear_entropy,renyi_half,delta")
    );
    let last_delta = |sample: &str| -> f64 {
        csv.lines()
            .rfind(|l| l.starts_with(&format!("{sample},")))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(last_delta("0") < 1e-8);
    assert!(last_delta("1") < 1e-8);
}

#[test]
fn input_errors_exit_with_2() {
    let bad = gatedist(&["analyze", "--spec", r#"{"family": "nope", "d": 2}"#]);
    assert_eq!(bad.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    fs::write(&m, r#"{"d": 2, "re": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,2]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let out = gatedist(&["analyze", path_str(&m)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("deficit"));

    let missing = gatedist(&["analyze", path_str(&dir.path().join("absent.json"))]);
    assert_eq!(missing.status.code(), Some(2));

    assert_eq!(gatedist(&["scan2q", "--d", "3"]).status.code(), Some(2));
    assert_eq!(
        gatedist(&["ensemble", "--eps", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(gatedist(&["gen"]).status.code(), Some(2));
    assert_eq!(gatedist(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn convergence_failure_exits_with_3() {
    let out = gatedist(&[
        "ubb-demo",
        "--samples",
        "1",
        "--max-iter",
        "2",
        "--reseeds",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    // the flagged row is still written
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains(",failed,"));
}
