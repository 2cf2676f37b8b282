use std::process::{Command, Output};

use serde_json::Value;

fn nncalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nncalc"))
        .args(args)
        .output()
        .expect("spawn nncalc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn chsh_defaults_to_canonical_angles() {
    let o = nncalc(&["chsh"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    let s = rows.iter().find(|r| r[0] == "S").unwrap();
    assert!((num(&s[3]) - 2.828427).abs() < 1e-6);
    for e in &rows[..4] {
        let digits = e[3].trim_start_matches('-').replace('.', "");
        assert!(digits.trim_start_matches('0').len() >= 10, "{e:?}");
    }
}

#[test]
fn chsh_aligned_settings_give_two() {
    let o = nncalc(&[
        "chsh",
        "--a",
        "0",
        "--a-prime",
        "1.5707963267948966",
        "--b",
        "0",
        "--b-prime",
        "1.5707963267948966",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert!((num(&rows[4][3]) - 2.0).abs() < 1e-9);
}

#[test]
fn probabilities_table() {
    let o = nncalc(&["probabilities", "--grid-points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(text.starts_with("delta,p_pp_integral,p_pp_closed,p_pm_integral,p_pm_closed,"));
    let rows = csv_rows(&text);
    assert_eq!(num(&rows[0][1]), 0.0);
    assert_eq!(num(&rows[0][3]), 0.5);
    assert_eq!(num(&rows[1][1]), 0.25);
    assert_eq!(num(&rows[1][2]), 0.25);
    for r in &rows {
        assert!(num(r.last().unwrap()) <= 1e-8);
    }
}

#[test]
fn probabilities_with_linear_generator_fails_verification() {
    let o = nncalc(&[
        "probabilities",
        "--generator",
        "identity",
        "--grid-points",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        nncalc(&["chsh", "--generator", "cubic"]).status.code(),
        Some(2)
    );
    assert_eq!(
        nncalc(&["linearity-demo", "--x1", "2", "--x2", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nncalc(&["probabilities", "--grid-points", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nncalc(&["generator-dump", "--lo", "1", "--hi", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nncalc(&["chsh", "--tolerance", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(nncalc(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        nncalc(&["mc-verify", "--samples", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn linearity_demo_gaps() {
    let gap = |args: &[&str]| {
        let o = nncalc(args);
        assert_eq!(o.status.code(), Some(0));
        let rows = csv_rows(&stdout(&o));
        let get = |k: &str| num(&rows.iter().find(|r| r[0] == k).unwrap()[1]);
        (get("gap_ordinary"), get("gap_deformed"))
    };
    let (ord, def) = gap(&["linearity-demo"]);
    assert!(ord > 0.01 && def < 1e-9);
    let (ord, def) = gap(&["linearity-demo", "--generator", "identity"]);
    assert!(ord < 1e-9 && def < 1e-9);
    let (_, def) = gap(&["linearity-demo", "--x1", "0", "--x2", "6.283185307179586"]);
    assert!(def < 1e-9);
}

#[test]
fn generator_dump_rows() {
    let o = nncalc(&["generator-dump", "--lo", "0", "--hi", "1", "--points", "5"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[1], ["0.25", "0.25", "0.25"]);
    let o = nncalc(&[
        "generator-dump",
        "--lo",
        "0.15915494309189535",
        "--hi",
        "1",
        "--points",
        "2",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert!((num(&rows[0][2]) - 0.114924).abs() < 1e-6);
    let o = nncalc(&[
        "generator-dump",
        "--lo",
        "-3",
        "--hi",
        "3",
        "--points",
        "200",
    ]);
    let f: Vec<f64> = csv_rows(&stdout(&o)).iter().map(|r| num(&r[1])).collect();
    assert!(f.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn mc_verify_is_deterministic() {
    let args = [
        "mc-verify",
        "--samples",
        "200000",
        "--seed",
        "42",
        "--angles",
        "0,1.5707963267948966",
    ];
    let a = nncalc(&args);
    let b = nncalc(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&stdout(&a));
    let pp0 = rows
        .iter()
        .find(|r| r[0] == "++" && num(&r[1]) == 0.0)
        .unwrap();
    assert_eq!(num(&pp0[2]), 0.0);
    let pp = rows
        .iter()
        .find(|r| r[0] == "++" && num(&r[1]) > 1.0)
        .unwrap();
    assert!(num(&pp[4]) <= 0.005);
}

#[test]
fn mc_verify_against_linear_model_fails() {
    let o = nncalc(&[
        "mc-verify",
        "--generator",
        "identity",
        "--samples",
        "100000",
        "--angles",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn out_file_gets_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chsh.csv");
    let o = nncalc(&["chsh", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let csv_text = std::fs::read_to_string(&out).unwrap();
    assert!(csv_text.starts_with("quantity,alpha,beta,value\n"));
    let manifest: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("chsh.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "chsh");
    assert_eq!(manifest["generator_name"], "paper-sin2");
    assert_eq!(manifest["quadrature"]["tolerance"], 1e-10);
    assert!(manifest["timestamp"].as_str().unwrap().ends_with('Z'));
}

#[test]
fn json_embeds_manifest_and_numeric_rows_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Value {
        let out = dir.path().join(name);
        let o = nncalc(&[
            "mc-verify",
            "--format",
            "json",
            "--samples",
            "50000",
            "--seed",
            "3",
            "--angles",
            "0.7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a["rows"], b["rows"]);
    assert_eq!(a["manifest"]["seed"], 3);
    assert!(a["manifest"]["mc_algorithm"]
        .as_str()
        .unwrap()
        .contains("ChaCha8"));
    assert_eq!(a["rows"][0]["outcome"], "++");
    assert!(a["rows"][0]["mc_value"].is_f64());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "generator = identity\nformat = json\n").unwrap();
    let o = nncalc(&["chsh", "--config", cfg.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["manifest"]["generator_name"], "identity");
    // linear model: S = 2 at the canonical angles
    assert!((v["rows"][4]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let o = nncalc(&[
        "chsh",
        "--config",
        cfg.to_str().unwrap(),
        "--generator",
        "paper-sin2",
        "--format",
        "csv",
    ]);
    assert!(stdout(&o).starts_with("quantity,"));

    std::fs::write(&cfg, "generator = quartic\n").unwrap();
    assert_eq!(
        nncalc(&["chsh", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
