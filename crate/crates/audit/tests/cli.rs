use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn audit(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walker-audit"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn theorem_audit_on_cubic_passes() {
    let o = audit(&["theorem-audit", "--seed", "42"], &scenario("cubic_theorem_audit.toml"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: toml::Table = toml::from_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(report["seed"].as_integer(), Some(42));
    assert_eq!(report["scenario"]["analysis"]["trials"].as_integer(), Some(1000));
    let checks = report["sections"][0]["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    for want in ["worked_example", "curvature_gradient_lemma", "bracket_difference_identity", "v3_zero_identity"] {
        assert!(names.contains(&want), "{names:?}");
    }
}

#[test]
fn lcf_test_on_quadratic_passes() {
    let o = audit(&["lcf-test"], &scenario("lcf_quadratic.toml"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("value = \"locally conformally flat\""), "{text}");
}

#[test]
fn lcf_test_reports_non_flat_metric_without_failing() {
    let o = audit(&["lcf-test"], &scenario("cubic_theorem_audit.toml"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("\"not locally conformally flat\""));
}

#[test]
fn malformed_expression_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[metric]\nepsilon = 1\nf = \"x^^2\"\n");
    let o = audit(&["frame-check"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("scenario.toml:3: metric.f:"), "{err}");
    assert!(err.contains("at byte 2"), "{err}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (body, needle) in [
        ("[metric]\nepsilon = 1\n", "missing field `f`"),
        ("[metric]\nepsilon = 0\nf = \"x\"\n", ":2: metric.epsilon"),
        ("[metric]\nepsilon = 1\nf = \"x\"\n[analysis.tolerances]\numbilic = 0.0\n", ":5: analysis.tolerances.umbilic"),
        ("[metric]\nepsilon = 1\nf = \"x\"\n[surface]\nkind = \"torus\"\n", ":5: surface.kind"),
    ] {
        let cfg = write_config(dir.path(), body);
        let o = audit(&["frame-check"], &cfg);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(stderr(&o).contains(needle), "{body}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_2() {
    let o = audit(&["umbilic-scan"], &scenario("cubic_theorem_audit.toml"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("needs a [surface] section"));
    let o = audit(&["parallel-construct"], &scenario("cubic_graph.toml"));
    assert_eq!(o.status.code(), Some(2));
    let o = audit(&["frame-check", "--tol-override", "bogus=1"], &scenario("cubic_theorem_audit.toml"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown tolerance"));
    let o = audit(&["frame-check"], Path::new("/nonexistent/scenario.toml"));
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_walker-audit")).arg("frame-check").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_override_can_fail_a_check() {
    let cfg = scenario("parallel_family.toml");
    let o = audit(&["parallel-construct", "--tol-override", "parallel=1e-12"], &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL parallel-construct.trajectory_0.umbilic"), "{}", stderr(&o));
}

#[test]
fn non_umbilical_graph_writes_witness_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_walker-audit"))
        .args(["umbilic-scan", "--config"])
        .arg(scenario("cubic_graph.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let check = &report["sections"][0]["checks"][0];
    assert_eq!(check["name"], "umbilical");
    assert_eq!(check["passed"], false);
    assert!(check["witness"].as_str().unwrap().starts_with("(u, v) = (0.3, 0.3)"));
    assert_eq!(report["points"].as_array().unwrap().len(), 25);

    let mut rows = csv::Reader::from_path(dir.path().join("points.csv")).unwrap();
    let header: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "u",
            "v",
            "t",
            "x",
            "y",
            "lambda",
            "rho",
            "v1",
            "v2",
            "v3",
            "fx",
            "fxx",
            "fxxx",
            "obstruction",
            "bracket_first",
            "bracket_second",
            "status"
        ]
    );
    assert_eq!(rows.records().count(), 25);
}

#[test]
fn degenerate_points_are_marked_in_csv() {
    // The plane t = 0 is lightlike for epsilon = 1, so every point is degenerate.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[metric]\nepsilon = 1\nf = \"0\"\n[surface]\nkind = \"explicit\"\nt = \"0\"\nx = \"u\"\ny = \"v\"\nu = [0, 1]\nv = [0, 1]\nresolution = [2, 2]\n",
    );
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_walker-audit"))
        .args(["umbilic-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("points.csv")).unwrap();
    let body: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(body.len(), 4);
    assert!(body.iter().all(|l| l.contains("degenerate")), "{csv}");
    assert!(stderr(&o).contains("regular_points"));
}

/// Checks `value` against the documented report layout.
fn check_schema(report: &serde_json::Value) {
    use serde_json::Value;
    let obj = report.as_object().expect("report is an object");
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["passed", "points", "scenario", "sections", "seed", "subcommand", "tool", "version"]);
    assert!(report["tool"].is_string() && report["version"].is_string() && report["subcommand"].is_string());
    assert!(report["seed"].is_u64() && report["passed"].is_boolean());
    for key in ["metric", "analysis"] {
        assert!(report["scenario"][key].is_object(), "scenario.{key}");
    }
    assert!(report["scenario"]["analysis"]["tolerances"].is_object());
    for section in report["sections"].as_array().unwrap() {
        assert!(section["name"].is_string() && section["passed"].is_boolean());
        for c in section["checks"].as_array().unwrap() {
            assert!(c["name"].is_string() && c["passed"].is_boolean());
            assert!(c["value"].is_number() || c["value"].is_null());
            for opt in ["tolerance", "witness"] {
                assert!(c.get(opt).is_none_or(|v| v.is_number() || v.is_string()), "{c}");
            }
        }
        for n in section["notes"].as_array().unwrap() {
            assert!(n["key"].is_string() && n["value"].is_string());
        }
    }
    for row in report["points"].as_array().unwrap() {
        let row = row.as_object().unwrap();
        assert_eq!(row.len(), 17);
        let regular = row["status"] == "regular";
        for (k, v) in row {
            match k.as_str() {
                "status" => assert!(v.is_string()),
                "u" | "v" => assert!(v.as_f64().is_some_and(f64::is_finite)),
                _ if regular => assert!(v.as_f64().is_some_and(f64::is_finite), "{k}: {v}"),
                _ => assert!(matches!(v, Value::Null | Value::Number(_))),
            }
        }
    }
}

#[test]
fn structured_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_walker-audit"))
        .args(["all", "--format", "json", "--seed", "7", "--config"])
        .arg(scenario("parallel_family.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    check_schema(&report);
    // Top-level keys keep their declared order in the file.
    let at = |k: &str| text.find(&format!("\n  \"{k}\":")).unwrap();
    let order = ["tool", "version", "subcommand", "seed", "passed", "scenario", "sections", "points"].map(at);
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
    assert_eq!(report["seed"], 7);
    let names: Vec<&str> = report["sections"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        ["frame-check", "curvature-check", "lcf-test", "theorem-audit", "umbilic-scan", "parallel-construct"]
    );
}
