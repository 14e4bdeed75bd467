use std::fs;
use std::process::{Command, Output};

fn jacobi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jacobi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key}= in {text}"))
        .to_string()
}

#[test]
fn coeffs_outer_leading_row() {
    let o = jacobi(&[
        "coeffs", "--region", "outer", "--gamma", "1", "--alpha", "0", "--beta", "0", "--max-j",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "{text}");
    let a0: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(a0, 1.0);
}

#[test]
fn coeffs_chebyshev_rows() {
    let o = jacobi(&[
        "coeffs", "--region", "osc", "--gamma", "0.8", "--alpha", "-0.5", "--beta", "-0.5",
        "--max-j", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let re: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((re[1] + 0.125).abs() < 1e-10);
    assert!((re[2] - 0.0078125).abs() < 1e-10);
}

#[test]
fn coeffs_audit_json() {
    let o = jacobi(&[
        "coeffs", "--region", "outer", "--gamma", "0.5", "--alpha", "-0.25", "--beta", "-0.5",
        "--max-j", "2", "--format", "json", "--audit",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["A"].as_array().unwrap().len(), 3);
    assert_eq!(doc["a"].as_array().unwrap().len(), 5);
    assert_eq!(doc["Q"].as_array().unwrap().len(), 5);
}

#[test]
fn coeffs_audit_csv_lists_every_quantity() {
    let o = jacobi(&[
        "coeffs", "--region", "osc", "--gamma", "1", "--alpha", "0", "--beta", "0", "--max-j", "1",
        "--audit",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for q in ["A,", "a,", "b,", "Q,"] {
        assert!(text.lines().any(|l| l.starts_with(q)), "missing {q}");
    }
}

#[test]
fn coeffs_missing_gamma_is_usage_error() {
    let o = jacobi(&[
        "coeffs", "--region", "outer", "--alpha", "0", "--beta", "0", "--max-j", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn coeffs_outside_hypotheses_is_invalid() {
    let o = jacobi(&[
        "coeffs", "--region", "outer", "--gamma", "1", "--alpha", "0.5", "--beta", "0", "--max-j",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn eval_outer_prints_bound() {
    let o = jacobi(&[
        "eval", "--n", "100", "--gamma", "1", "--region", "outer", "--alpha", "0", "--beta", "0",
        "--p", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let bound: f64 = field(&text, "bound").parse().unwrap();
    let normalized: f64 = field(&text, "normalized_bound").parse().unwrap();
    let value: f64 = field(&text, "value").parse().unwrap();
    assert!(bound > 0.0 && normalized > 0.0);
    assert!(bound < value.abs() * normalized * 1.01);
}

#[test]
fn eval_chebyshev_leading_term() {
    let o = jacobi(&[
        "eval", "--n", "100", "--region", "osc", "--gamma", "0.5", "--alpha", "-0.5", "--beta",
        "-0.5", "--p", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let value: f64 = field(&stdout(&o), "value").parse().unwrap();
    let expected = 50f64.cos() / (100.0 * std::f64::consts::PI).sqrt();
    assert!((value - expected).abs() < 1e-14, "{value} vs {expected}");
}

#[test]
fn eval_general_x_flags_reduction() {
    let o = jacobi(&[
        "eval", "--n", "20", "--x", "2", "--alpha", "0.5", "--beta", "0", "--p", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "flags"), "outside-hypothesis");
}

#[test]
fn eval_huge_value_uses_marker() {
    let o = jacobi(&[
        "eval", "--n", "5000", "--gamma", "3", "--region", "outer", "--alpha", "0", "--beta", "0",
        "--p", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(field(&stdout(&o), "value").starts_with('~'));
}

#[test]
fn eval_endpoint_exits_3() {
    for x in ["1", "-1"] {
        let o = jacobi(&[
            "eval", "--n", "1", "--x", x, "--alpha", "0", "--beta", "0", "--p", "1",
        ]);
        assert_eq!(o.status.code(), Some(3), "x = {x}");
    }
}

#[test]
fn eval_invalid_inputs_exit_2() {
    let bad: [&[&str]; 4] = [
        &[
            "eval", "--n", "10", "--x", "2", "--alpha", "-1", "--beta", "0", "--p", "1",
        ],
        &[
            "eval", "--n", "10", "--alpha", "0", "--beta", "0", "--p", "1",
        ],
        &[
            "eval", "--n", "10", "--gamma", "2", "--region", "osc", "--alpha", "0", "--beta", "0",
            "--p", "1",
        ],
        &[
            "eval",
            "--n",
            "10",
            "--x",
            "2",
            "--alpha",
            "0",
            "--beta",
            "0",
            "--p",
            "1",
            "--convention",
            "other",
        ],
    ];
    for args in bad {
        assert_eq!(jacobi(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bounds_outer_delta() {
    let o = jacobi(&[
        "bounds", "--region", "outer", "--gamma", "1", "--alpha", "0", "--beta", "0", "--p", "1",
        "--n", "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "delta=0.5"), "{text}");
    for key in ["c_p", "c_p_next", "c_hat_p", "n_threshold"] {
        field(&text, key);
    }
}

#[test]
fn bounds_zero_order_is_invalid() {
    let o = jacobi(&[
        "bounds", "--region", "osc", "--gamma", "1", "--alpha", "0", "--beta", "0", "--p", "0",
        "--n", "100",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certify_acceptance_grid_passes_and_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let o = jacobi(&["certify", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["pass_rate"], 1.0);
    assert_eq!(summary["n_points"], 288);
    for key in ["worst_ratio", "wall_ms"] {
        assert!(summary.get(key).is_some());
    }
    let csv = fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with(
        "n,gamma,alpha,beta,p,region,approx_mantissa,approx_exp2,exact_mantissa,exact_exp2,zeta_hat,bound,ratio,pass,flags\n"
    ));
    assert_eq!(csv.lines().count(), 289);
}

#[test]
fn certify_output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let o = jacobi(&[
            "certify",
            "--preset",
            "osc",
            "--format",
            "json",
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 288);
}

#[test]
fn certify_grid_file_with_rational_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"region":"osc","n":[20,40],"gamma":[0.7],"alpha":[0.0],"beta":[-0.25],"p":[1,2],"oracle":"rational"}"#,
    )
    .unwrap();
    let o = jacobi(&["certify", "--grid", grid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["n_points"], 4);
}

#[test]
fn certify_inline_grid() {
    let o = jacobi(&[
        "certify", "--region", "outer", "--gamma", "0.5,1", "--n", "50,100", "--p", "2", "--alpha",
        "-0.25", "--beta", "-0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["n_points"], 4);
}

#[test]
fn certify_failure_exits_1() {
    // the other sign convention mis-assigns Im A_j and breaks some certificates
    let o = jacobi(&["certify", "--preset", "osc", "--convention", "thm"]);
    assert_eq!(o.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["pass_rate"].as_f64().unwrap() < 1.0);
}

#[test]
fn certify_invalid_grids_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    fs::write(&bad_json, "{ not json").unwrap();
    let missing = dir.path().join("missing.json");
    let cases: Vec<Vec<String>> = vec![
        vec!["--grid".into(), bad_json.display().to_string()],
        vec!["--grid".into(), missing.display().to_string()],
        vec![
            "--region".into(),
            "outer".into(),
            "--alpha".into(),
            "0,0".into(),
            "--beta".into(),
            "0".into(),
        ],
        vec![
            "--region".into(),
            "outer".into(),
            "--n".into(),
            "100,50".into(),
        ],
        vec![
            "--region".into(),
            "osc".into(),
            "--gamma".into(),
            "2".into(),
        ],
        vec![
            "--oracle".into(),
            "rational".into(),
            "--region".into(),
            "outer".into(),
            "--n".into(),
            "400".into(),
        ],
        vec!["--threads".into(), "0".into()],
        vec!["--format".into(), "xml".into()],
    ];
    for extra in cases {
        let mut args = vec!["certify".to_string()];
        args.extend(extra.iter().cloned());
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(jacobi(&refs).status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn certify_unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no/such/dir/r.csv");
    let o = jacobi(&[
        "certify",
        "--region",
        "outer",
        "--n",
        "50",
        "--gamma",
        "1",
        "--p",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    assert_eq!(jacobi(&["--help"]).status.code(), Some(0));
    assert_eq!(jacobi(&["bogus"]).status.code(), Some(2));
}
