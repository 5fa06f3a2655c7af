//! End-to-end tests of the `lars` binary: file formats, round trips,
//! diagnostics and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array1;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lars")
}

fn work_dir(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lars-cli-{}-{test}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_identity_csv(dir: &Path) -> PathBuf {
    let p = dir.join("identity.csv");
    std::fs::write(&p, "x1,x2,y\n1,0,3\n0,1,1\n").unwrap();
    p
}

fn write_small_csv(dir: &Path) -> PathBuf {
    let p = dir.join("small.csv");
    let mut s = String::from("a,b,c,y\n");
    let rows = [
        (0.5, -1.0, 0.3, 0.9),
        (1.5, 0.5, -0.2, 2.1),
        (2.0, -0.5, 0.8, 2.4),
        (3.2, 1.0, -0.5, 4.0),
        (4.1, 0.2, 0.1, 4.6),
        (5.3, -1.2, 0.7, 5.2),
        (6.0, 0.8, -0.9, 6.8),
        (7.2, -0.3, 0.2, 7.1),
        (8.1, 1.1, -0.4, 8.9),
        (9.0, 0.4, 0.6, 9.3),
        (9.8, -0.8, -0.1, 10.2),
        (10.6, 0.1, 0.4, 11.0),
    ];
    for (a, b, c, y) in rows {
        s.push_str(&format!("{a},{b},{c},{y}\n"));
    }
    std::fs::write(&p, s).unwrap();
    p
}

/// Rebuild a coefficient path from an emitted knots file.
fn path_from_json(doc: &serde_json::Value) -> lars::CoefficientPath {
    let knots = doc["knots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| lars::PathKnot {
            step_index: k["step_index"].as_u64().unwrap() as usize,
            active: k["active"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap() as usize)
                .collect(),
            signs: k["signs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_i64().unwrap() as i8)
                .collect(),
            beta: Array1::from(
                k["beta_standardized"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|v| v.as_f64().unwrap())
                    .collect::<Vec<f64>>(),
            ),
            max_abs_corr: k["max_abs_corr"].as_f64().unwrap(),
            gamma: k["gamma"].as_f64().unwrap(),
            event: serde_json::from_value(k["event"].clone()).unwrap(),
        })
        .collect();
    lars::CoefficientPath {
        method: serde_json::from_value(doc["method"].clone()).unwrap(),
        knots,
        design_fingerprint: doc["design_fingerprint"].as_str().unwrap().to_string(),
    }
}

#[test]
fn path_identity_fixture_knots_and_plot() {
    let dir = work_dir("identity");
    let input = write_identity_csv(&dir);
    let out = dir.join("knots.json");
    let plot = dir.join("path.svg");
    let output = run(&[
        "path",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "lar",
        "--no-standardize",
        "--out",
        out.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let knots = doc["knots"].as_array().unwrap();
    assert_eq!(knots.len(), 3);
    let betas: Vec<Vec<f64>> = knots
        .iter()
        .map(|k| {
            k["beta_standardized"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_f64().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(betas[0], vec![0.0, 0.0]);
    assert!((betas[1][0] - 2.0).abs() < 1e-12 && betas[1][1] == 0.0);
    assert!((betas[2][0] - 3.0).abs() < 1e-12 && (betas[2][1] - 1.0).abs() < 1e-12);

    // SVG structure: well-formed XML prologue, exactly m polylines.
    let svg = std::fs::read_to_string(&plot).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn three_row_single_predictor_csv() {
    let dir = work_dir("tiny");
    let p = dir.join("tiny.csv");
    std::fs::write(&p, "x1,y\n1,1.5\n2,2.5\n3,4.5\n").unwrap();
    let out = dir.join("knots.json");
    let output = run(&[
        "path",
        "--input",
        p.to_str().unwrap(),
        "--response",
        "y",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["n"], 3);
    assert_eq!(doc["column_names"].as_array().unwrap().len(), 1);
}

#[test]
fn knots_file_roundtrip_reproduces_interpolation() {
    let dir = work_dir("roundtrip");
    let input = write_small_csv(&dir);
    let out = dir.join("knots.json");
    let output = run(&[
        "path",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "lasso",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let reread = path_from_json(&doc);

    // Refit directly and compare interpolations on a dense grid.
    let (x, y, _names) = read_csv_manually(&input);
    let design =
        lars::StandardizedDesign::standardize(&x, &y, lars::StandardizeMode::Standard).unwrap();
    let direct = lars::lasso_path(&design).unwrap();
    let total = direct.total_arc_length();
    for i in 0..=100 {
        let t = total * i as f64 / 100.0;
        let a = direct.interpolate(t);
        let b = reread.interpolate(t);
        for j in 0..a.len() {
            assert!(
                (a[j] - b[j]).abs() <= 1e-12,
                "round-trip drift {} at t={t}",
                (a[j] - b[j]).abs()
            );
        }
    }
}

fn read_csv_manually(path: &Path) -> (ndarray::Array2<f64>, Array1<f64>, Vec<String>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let m = header.len() - 1;
    let rows: Vec<Vec<f64>> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let mut x = ndarray::Array2::zeros((rows.len(), m));
    let mut y = Array1::zeros(rows.len());
    for (i, r) in rows.iter().enumerate() {
        for j in 0..m {
            x[[i, j]] = r[j];
        }
        y[i] = r[m];
    }
    (x, y, header[..m].to_vec())
}

#[test]
fn select_cp_rows_satisfy_identity() {
    let dir = work_dir("select-cp");
    let input = write_small_csv(&dir);
    let out = dir.join("knots.json");
    let output = run(&[
        "select",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--stop",
        "cp",
        "--mult",
        "bic",
        "--sigma2",
        "0.04",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let sel_path = dir.join("knots.select.json");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sel_path).unwrap()).unwrap();
    let n = 12.0;
    let rows = doc["cp"]["per_knot"].as_array().unwrap();
    assert!(!rows.is_empty());
    for row in rows {
        let rss = row["rss"].as_f64().unwrap();
        let df = row["df"].as_f64().unwrap();
        let mult = row["mult"].as_f64().unwrap();
        let cp = row["cp"].as_f64().unwrap();
        let expect = rss / 0.04 - n + mult * df;
        assert!((cp - expect).abs() <= 1e-9 * expect.abs().max(1.0));
        assert!((mult - 12.0_f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn select_cv_writes_report() {
    let dir = work_dir("select-cv");
    let input = write_small_csv(&dir);
    let out = dir.join("knots.json");
    let output = run(&[
        "select",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "lasso",
        "--stop",
        "cv",
        "--folds",
        "4",
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("knots.select.json")).unwrap())
            .unwrap();
    assert_eq!(doc["rule"], "cv");
    let grid = doc["cv"]["grid"].as_array().unwrap();
    let means = doc["cv"]["mean_error"].as_array().unwrap();
    assert_eq!(grid.len(), means.len());
    assert!(doc["selected_arc_length"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bad_csv_reports_single_line_diagnostic() {
    let dir = work_dir("bad-csv");
    let p = dir.join("bad.csv");
    std::fs::write(&p, "a,b,y\n1,2,3\n4,,6\n").unwrap();
    let out = dir.join("knots.json");
    let output = run(&[
        "path",
        "--input",
        p.to_str().unwrap(),
        "--response",
        "y",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(!out.exists(), "no artifact may be written on failure");
    let stderr = String::from_utf8(output.stderr).unwrap();
    let lines: Vec<&str> = stderr.trim().lines().collect();
    assert_eq!(lines.len(), 1, "diagnostic must be a single line: {stderr}");
    let diag: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(diag["error"], "csv");
    assert!(diag["message"].as_str().unwrap().contains("line 3"));
}

#[test]
fn unknown_response_column_rejected() {
    let dir = work_dir("bad-response");
    let input = write_small_csv(&dir);
    let output = run(&[
        "path",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "nope",
        "--out",
        dir.join("k.json").to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let diag: serde_json::Value =
        serde_json::from_str(String::from_utf8(output.stderr).unwrap().trim()).unwrap();
    assert!(diag["message"].as_str().unwrap().contains("nope"));
}

#[test]
fn identical_seeds_give_byte_identical_outputs() {
    let dir = work_dir("determinism");
    let input = write_small_csv(&dir);
    let mut contents = Vec::new();
    for run_idx in 0..2 {
        let out = dir.join(format!("knots{run_idx}.json"));
        let output = run(&[
            "select",
            "--input",
            input.to_str().unwrap(),
            "--response",
            "y",
            "--stop",
            "cv",
            "--folds",
            "3",
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        let knots = std::fs::read(&out).unwrap();
        let select = std::fs::read(dir.join(format!("knots{run_idx}.select.json"))).unwrap();
        contents.push((knots, select));
    }
    assert_eq!(contents[0], contents[1]);
}

#[test]
fn experiment_config_runs_and_writes_artifacts() {
    let dir = work_dir("experiment");
    let cfg = dir.join("sweep.cfg");
    std::fs::write(
        &cfg,
        "kind = mult-sweep\nn = 30\nm = 6\ntrue_beta = 1,-1,0.5,0,0,0\nsigma = 1.0\nmult_list = 2,4\nreps = 50\nseed = 5\n",
    )
    .unwrap();
    let base = dir.join("sweep_out");
    let output = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        base.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep_out.csv")).unwrap();
    assert!(csv.starts_with("mult,avg_selected_size,avg_sq_error"));
    assert_eq!(csv.trim().lines().count(), 3);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep_out.json")).unwrap())
            .unwrap();
    assert_eq!(doc["mult_values"].as_array().unwrap().len(), 2);
}

#[test]
fn bootstrap_mean_statistic_runs() {
    let dir = work_dir("bootstrap");
    let input = write_small_csv(&dir);
    let out = dir.join("boot.json");
    let output = run(&[
        "bootstrap",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--statistic",
        "mean",
        "--b-reps",
        "60",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["statistic"], "mean");
    assert!(doc["report"]["se"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["report"]["statistic_values"].as_array().unwrap().len(), 60);
}

#[test]
fn audit_marginality_reports() {
    let dir = work_dir("audit");
    let input = write_small_csv(&dir);
    let out = dir.join("audit.json");
    let output = run(&[
        "audit-marginality",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--method",
        "lasso",
        "--sigma2",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(doc["satisfied"].is_boolean());
    assert!(doc["column_names"].as_array().unwrap().len() > 3);
}

#[test]
fn diabetes_ingestion_shapes() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/diabetes.csv");
    let dir = work_dir("diabetes");
    let out = dir.join("knots.json");
    let output = run(&[
        "path",
        "--input",
        data,
        "--response",
        "y",
        "--method",
        "lar",
        "--max-steps",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["n"], 442);
    let names = doc["column_names"].as_array().unwrap();
    assert_eq!(names.len(), 10);
    // First entered variable is BMI.
    let knots = doc["knots"].as_array().unwrap();
    assert_eq!(knots.len(), 11);
    let first_active = knots[1]["active"].as_array().unwrap();
    assert_eq!(names[first_active[0].as_u64().unwrap() as usize], "bmi");
}
