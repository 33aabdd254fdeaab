use std::path::Path;
use std::process::{Command, Output};

use rtdcm::cli::{EXIT_CLUSTER, EXIT_INPUT, EXIT_OK};
use rtdcm::io::{parse_curve_csv, read_curve};

fn rtdcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtdcm")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = rtdcm(&["simulate", "--tendon-mm", "100", "--disk", "5=-70", "--out-dir", s(&sim)]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    for f in ["disk_centers.csv", "dense_curve.csv", "report.json", "manifest.json"] {
        assert!(sim.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sim.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["equilibrium"]["converged"], true);
    assert_eq!(read_curve(&sim.join("disk_centers.csv")).unwrap().len(), 9);

    let an = dir.path().join("an");
    let o = rtdcm(&["analyze", s(&sim.join("disk_centers.csv")), "--out-dir", s(&an)]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let sc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(an.join("sign_changes.json")).unwrap()).unwrap();
    let changes = sc["sign_changes"].as_array().unwrap();
    assert_eq!(changes.len(), 1);
    assert_eq!(changes[0]["direction"], "PosToNeg");
    let svg = std::fs::read_to_string(an.join("ct_profile.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("D5"));
}

#[test]
fn actuation_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let act = dir.path().join("act.json");
    std::fs::write(&act, r#"{"tendon_mm": 40, "disk_angles_deg": [0,0,0,0,0,0,0,0,0]}"#).unwrap();
    let out = dir.path().join("o");
    let o = rtdcm(&["simulate", "--actuation", s(&act), "--tendon-mm", "90", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"tendon_mm\": 90"), "{report}");
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let garbled = dir.path().join("garbled.csv");
    std::fs::write(&garbled, "x_mm,y_mm,z_mm\n1,2,3\n4,five,6\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--disk", "5=-95", "--out-dir", out],
        vec!["simulate", "--disk", "12=10", "--out-dir", out],
        vec!["simulate", "--tendon-mm", "150", "--out-dir", out],
        vec!["simulate", "--bogus"],
        vec!["analyze", s(&empty), "--out-dir", out],
        vec!["analyze", s(&garbled), "--out-dir", out],
        vec!["match", "/nonexistent/target.csv", "--out-dir", out],
        vec!["simulate", "--config", s(&garbled), "--out-dir", out],
    ];
    for args in cases {
        let o = rtdcm(&args);
        assert_eq!(o.status.code(), Some(EXIT_INPUT), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        assert!(err.starts_with(&format!("ERROR {EXIT_INPUT}: ")), "{args:?}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
    let o = rtdcm(&["analyze", s(&garbled), "--out-dir", out]);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn synthetic_points_cluster_back_to_centers() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    let o = rtdcm(&["synth-points", "--tendon-mm", "80", "--disk", "4=60", "--seed", "5", "--out-dir", s(&syn)]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let cl = dir.path().join("cl");
    let raw = syn.join("raw_points.csv");
    let o = rtdcm(&["cluster", s(&raw), "--expect", "9", "--out-dir", s(&cl)]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let got = parse_curve_csv(&std::fs::read_to_string(cl.join("centroids.csv")).unwrap()).unwrap();
    let truth = read_curve(&syn.join("true_centers.csv")).unwrap();
    assert_eq!(got.len(), truth.len());
    for (a, b) in got.points().iter().zip(truth.points()) {
        assert!((a - b).norm() < 1.5);
    }

    let o = rtdcm(&["cluster", s(&raw), "--expect", "9", "--eps", "0.2", "--out-dir", s(&cl)]);
    assert_eq!(o.status.code(), Some(EXIT_CLUSTER), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("ERROR 4: "));
}

#[test]
fn match_writes_report_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(rtdcm(&["simulate", "--tendon-mm", "100", "--disk", "5=-70", "--out-dir", s(&sim)]).status.code(), Some(0));
    let m = dir.path().join("m");
    let o = rtdcm(&["match", s(&sim.join("disk_centers.csv")), "--out-dir", s(&m)]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let j: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(m.join("match.json")).unwrap()).unwrap();
    assert_eq!(j["hypotheses"].as_array().unwrap().len(), 1);
    assert!((j["tendon_mm"].as_f64().unwrap() - 100.0).abs() < 15.0);
    assert!(j["metrics"]["shape_rmse_cm"].as_f64().unwrap() < 1.0);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(m.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "match");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    for f in ["step1_torsion.svg", "step2_overlay.svg", "step3_overlay.svg", "step4_overlay.svg"] {
        assert!(std::fs::read_to_string(m.join(f)).unwrap().contains("</svg>"));
    }
}

#[test]
fn help_and_version_go_to_stdout() {
    let o = rtdcm(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("simulate"));
    let o = rtdcm(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
