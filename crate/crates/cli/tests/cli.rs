use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qst").chain(args.iter().copied());
    let code = qst_cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

fn power_of(args: &[&str]) -> f64 {
    run_json(args)["power"].as_f64().unwrap()
}

fn strip_timing(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("timing_seconds"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_file(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// JSON matrix with entries `[re, 0]`.
fn real_matrix(rows: &[&[f64]]) -> String {
    let rows: Vec<String> = rows
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|x| format!("[{x}, 0]")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

#[test]
fn cnot_power_report() {
    let v = run_json(&["power", "--gate", "cnot"]);
    assert!((v["power"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    assert_eq!(v["method"], "analytic-optimizer");
    assert_eq!(v["input"]["gate"], "cnot");
    let d = &v["canonical"];
    assert!((d[0].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-9);
    let t: Vec<f64> = v["maximizer"]["t"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((t.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn closed_form_flag() {
    let v = run_json(&["power", "--gate", "cnot", "--closed-form"]);
    assert_eq!(v["method"], "closed-form");
    assert!((v["power"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(v.get("optimizer").is_none());
}

#[test]
fn registry_examples() {
    assert!((power_of(&["power", "--gate", "swap"]) - 1.0).abs() < 1e-6);
    assert!(
        (power_of(&["power", "--gate", "canonical", "1.5707963", "0", "0"]) - 2.0 / 3.0).abs()
            < 1e-6
    );
    assert!((power_of(&["power", "--gate", "depolarizing", "1.0"]) - 0.5).abs() < 1e-6);
    assert!((power_of(&["power", "--gate", "identity"]) - 0.5).abs() < 1e-6);
    // Negative parameters are values, not flags.
    let p = power_of(&[
        "power",
        "--gate",
        "canonical",
        "1.2",
        "0.7",
        "-0.3",
        "--closed-form",
    ]);
    assert!(
        (p - power_of(&[
            "power",
            "--gate",
            "canonical",
            "1.2",
            "0.7",
            "0.3",
            "--closed-form"
        ]))
        .abs()
            < 1e-12
    );
}

#[test]
fn canonical_of_swap() {
    let v = run_json(&["canonical", "--gate", "swap"]);
    for k in 0..3 {
        assert!((v["canonical"][k].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-9);
    }
    assert!((v["closed_form_power"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["reconstruction_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn haar_check_passes() {
    let (code, out, _) = run(&[
        "haar-check",
        "--samples",
        "100000",
        "--seed",
        "7",
        "--plain",
    ]);
    assert_eq!(code, 0);
    assert!(!out.contains("FAIL"), "{out}");
    assert_eq!(out.lines().filter(|l| l.ends_with("  PASS")).count(), 20);
    assert!(out.contains("ALL PASS"));
}

#[test]
fn oracle_block_and_subcommand() {
    let v = run_json(&["power", "--gate", "iswap", "--oracle", "--samples", "20000"]);
    let mc = &v["mc_check"];
    assert_eq!(mc["agrees"], true);
    assert_eq!(mc["n_samples"], 20000);

    let v = run_json(&["power", "--gate", "cz", "--oracle", "--samples", "20000"]);
    assert!(v["mc_check"]["sigmas"].as_f64().unwrap() <= 5.0);

    let v = run_json(&[
        "oracle", "--gate", "cz", "--frame", "0.3", "-1.0", "2.0", "--bloch", "0", "0.6", "-0.8",
    ]);
    assert_eq!(v["mc"]["agrees"], true);
    let analytic = v["analytic"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&analytic));

    let v = run_json(&["oracle", "--gate", "cnot", "--samples", "20000"]);
    assert!((v["analytic"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["power", "--gate", "cz", "--oracle", "--samples", "5000"][..],
        &["haar-check", "--samples", "5000", "--seed", "3"][..],
        &["sweep", "--kind", "range", "--points", "6"][..],
    ] {
        let (_, a, _) = run(args);
        let (_, b, _) = run(args);
        assert_eq!(strip_timing(&a), strip_timing(&b));
        let mut more = args.to_vec();
        more.extend(["--workers", "4"]);
        let (_, c, _) = run(&more);
        assert_eq!(
            strip_timing(&a),
            strip_timing(&c),
            "workers changed {args:?}"
        );
    }
}

#[test]
fn json_floats_round_trip() {
    let (_, out, _) = run(&[
        "power",
        "--gate",
        "canonical",
        "1.1",
        "0.4",
        "0.2",
        "--closed-form",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let u = qst_core::canonical_gate(&qst_core::CanonicalParams::new(1.1, 0.4, 0.2));
    let (expected, _, _) = qst_core::power_of_unitary(&u).unwrap();
    assert_eq!(v["power"].as_f64().unwrap(), expected.power);
    let power_line = out.lines().find(|l| l.contains("\"power\"")).unwrap();
    // 17 significant digits: one before the point, sixteen after.
    let digits = power_line.split('.').nth(1).unwrap();
    assert_eq!(
        digits.chars().take_while(|c| c.is_ascii_digit()).count(),
        16
    );
}

#[test]
fn field_order_is_stable() {
    let (_, out, _) = run(&["power", "--gate", "cnot", "--oracle", "--samples", "1000"]);
    let keys = [
        "\"input\"",
        "\"seed\"",
        "\"method\"",
        "\"power\"",
        "\"maximizer\"",
        "\"mc_check\"",
        "\"timing_seconds\"",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| out.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn kraus_files() {
    let dir = tempfile::tempdir().unwrap();
    let id = real_matrix(&[
        &[1., 0., 0., 0.],
        &[0., 1., 0., 0.],
        &[0., 0., 1., 0.],
        &[0., 0., 0., 1.],
    ]);
    let cnot = real_matrix(&[
        &[1., 0., 0., 0.],
        &[0., 1., 0., 0.],
        &[0., 0., 0., 1.],
        &[0., 0., 1., 0.],
    ]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let half = real_matrix(&[
        &[h, 0., 0., 0.],
        &[0., h, 0., 0.],
        &[0., 0., h, 0.],
        &[0., 0., 0., h],
    ]);

    let f = write_file(
        dir.path(),
        "id.json",
        &format!("{{\"dim\": 4, \"kraus\": [{id}]}}"),
    );
    assert!((power_of(&["power", "--kraus", &f]) - 0.5).abs() < 1e-9);

    let f = write_file(
        dir.path(),
        "cnot.json",
        &format!("{{\"dim\": 4, \"kraus\": [{cnot}]}}"),
    );
    assert!((power_of(&["power", "--kraus", &f]) - 2.0 / 3.0).abs() < 1e-9);
    // A single Kraus operator is a unitary, so the closed form applies.
    assert!((power_of(&["power", "--kraus", &f, "--closed-form"]) - 2.0 / 3.0).abs() < 1e-12);

    let f = write_file(
        dir.path(),
        "half.json",
        &format!("{{\"dim\": 4, \"kraus\": [{half}]}}"),
    );
    let (code, _, err) = run(&["power", "--kraus", &f]);
    assert_eq!(code, 1);
    assert!(
        err.contains("not trace preserving") && err.contains("e-1"),
        "{err}"
    );

    let f = write_file(
        dir.path(),
        "bad.json",
        "{\n  \"dim\": 4,\n  \"kraus\": [oops]\n}",
    );
    let (code, _, err) = run(&["power", "--kraus", &f]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");

    let (code, _, _) = run(&["power", "--kraus", "/nonexistent/channel.json"]);
    assert_eq!(code, 2);

    let small = real_matrix(&[&[1., 0.], &[0., 1.]]);
    let f = write_file(
        dir.path(),
        "small.json",
        &format!("{{\"dim\": 2, \"kraus\": [{small}]}}"),
    );
    let (code, _, err) = run(&["power", "--kraus", &f]);
    assert_eq!(code, 1);
    assert!(err.contains("wrong dimension"), "{err}");
}

#[test]
fn product_of_qubit_channels_is_local() {
    let dir = tempfile::tempdir().unwrap();
    let g: f64 = 0.3;
    let damp = format!(
        "{{\"dim\": 2, \"kraus\": [{}, {}]}}",
        real_matrix(&[&[1., 0.], &[0., (1.0 - g).sqrt()]]),
        real_matrix(&[&[0., g.sqrt()], &[0., 0.]])
    );
    let flip = format!(
        "{{\"dim\": 2, \"kraus\": [{}, {}]}}",
        real_matrix(&[&[0.8, 0.], &[0., 0.8]]),
        real_matrix(&[&[0., 0.6], &[0.6, 0.]])
    );
    let a = write_file(dir.path(), "damp.json", &damp);
    let b = write_file(dir.path(), "flip.json", &flip);
    let p = power_of(&["power", "--gate", "product", &a, &b]);
    assert!((p - 0.5).abs() < 1e-9, "{p}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["power"]).0, 2);
    assert_eq!(run(&["power", "--gate", "toffoli"]).0, 2);
    assert_eq!(run(&["power", "--gate", "canonical", "1", "2"]).0, 2);
    assert_eq!(run(&["power", "--gate", "depolarizing", "2"]).0, 2);
    assert_eq!(run(&["power", "--gate", "cnot", "--kraus", "x.json"]).0, 2);
    assert_eq!(
        run(&["power", "--gate", "depolarizing", "0.5", "--closed-form"]).0,
        2
    );
    assert_eq!(run(&["canonical", "--gate", "depolarizing", "0.5"]).0, 2);
    assert_eq!(run(&["power", "--gate", "cnot", "--workers", "0"]).0, 2);
    assert_eq!(run(&["power", "--gate", "cnot", "--starts", "x"]).0, 2);
    assert_eq!(run(&["sweep", "--kind", "nope"]).0, 2);
}

#[test]
fn validation_errors_exit_one() {
    // Too few samples for the oracle.
    assert_eq!(
        run(&["power", "--gate", "cnot", "--oracle", "--samples", "10"]).0,
        1
    );
    // Not a unit Bloch vector.
    assert_eq!(
        run(&["oracle", "--gate", "cnot", "--frame", "0", "0", "0", "--bloch", "1", "1", "0"]).0,
        1
    );
    // Canonical parameters out of order.
    assert_eq!(
        run(&["sweep", "--kind", "dz", "--dx", "0.5", "--dy", "0.9"]).0,
        1
    );
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("haar-check"));
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn sweep_tables() {
    let v = run_json(&[
        "sweep", "--kind", "dz", "--dx", "1.2", "--dy", "0.7", "--points", "5",
    ]);
    assert_eq!(v["columns"][0], "dz");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!((rows[0][0].as_f64().unwrap() + 0.7).abs() < 1e-15);
    assert!((rows[4][0].as_f64().unwrap() - 0.7).abs() < 1e-15);
    assert!(v["summary"][0]["value"].as_f64().unwrap() <= 1e-4);

    let (code, out, _) = run(&["sweep", "--kind", "closed-form", "--points", "3", "--plain"]);
    assert_eq!(code, 0);
    let table: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(table.len(), 4);
    assert_eq!(table[0].split('\t').count(), 6);
}
