use std::path::Path;
use std::process::{Command, Output};

fn trapdoor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trapdoor"))
        .args(args)
        .env_remove("TRAPDOOR_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn failed_checks(v: &serde_json::Value) -> Vec<String> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| !c["passed"].as_bool().unwrap())
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn constants_full_precision() {
    let o = trapdoor(&["constants", "--json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["rho"].as_f64().unwrap() - 0.6942419136306174).abs() < 1e-15);
    assert!((v["b4"].as_f64().unwrap() - (3.0 - 5f64.sqrt())).abs() < 1e-15);
    let text = stdout(&trapdoor(&["constants"]));
    assert!(text.contains("phi  1.618033988749894"));
}

#[test]
fn codec_replays_decoding_table() {
    let o = trapdoor(&["codec", "--outputs", "1011010001", "--trace"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("*110111001"));
    assert!(text.contains("decoded   0101010010"));
    let reasons: Vec<&str> = text
        .lines()
        .filter_map(|l| l.rsplit(" | ").next())
        .filter(|r| r.starts_with("Case") || *r == "Given")
        .collect();
    assert_eq!(
        reasons,
        [
            "Given",
            "Case 3",
            "Case 1 or 2",
            "Case 1",
            "Case 3",
            "Case 2",
            "Case 3",
            "Case 1 or 2",
            "Case 3",
            "Case 2"
        ]
    );
}

#[test]
fn codec_round_trips_any_message() {
    for (message, seed) in [("0", "1"), ("37", "2"), ("88", "3"), ("55", "4")] {
        let o = trapdoor(&[
            "codec",
            "--N",
            "10",
            "--message",
            message,
            "--seed",
            seed,
            "--json",
        ]);
        assert!(o.status.success());
        let v = json(&o);
        assert_eq!(v["decoded_message"].to_string(), message);
        assert_eq!(v["correct"], true);
    }
}

#[test]
fn codec_rejects_out_of_range_message() {
    let o = trapdoor(&["codec", "--N", "10", "--message", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("89"));
}

#[test]
fn unknown_mode_and_subcommand_are_usage_errors() {
    assert_eq!(
        trapdoor(&["simulate", "--mode", "bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(trapdoor(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(trapdoor(&["solve", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(
        trapdoor(&["simulate", "--mode", "flush", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_flush_mean() {
    let o = trapdoor(&[
        "simulate", "--mode", "flush", "--trials", "100000", "--json",
    ]);
    assert!(o.status.success());
    let mean = json(&o)["quantities"]["mean_uses"].as_f64().unwrap();
    assert!((3.4..=3.6).contains(&mean));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let args = [
        "simulate",
        "--mode",
        "codec-roundtrip",
        "--N",
        "32",
        "--trials",
        "500",
        "--seed",
        "9",
        "--json",
    ];
    let a = trapdoor(&args);
    let b = trapdoor(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["error_count"], 0);
}

#[test]
fn simulate_conjectured_policy_reward() {
    let o = trapdoor(&[
        "simulate",
        "--mode",
        "dp-sim",
        "--policy",
        "conjectured",
        "--json",
    ]);
    assert!(o.status.success());
    let r = json(&o)["quantities"]["avg_reward"].as_f64().unwrap();
    assert!((r - 0.69424).abs() <= 0.002);
}

#[test]
fn simulate_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = r#"{"mode":"rate-table","seed":0,"block_length":64,"trials":1,"grid_size":2,
        "action_grid":2,"iterations":0,"steps":0,"policy":"learned","exhaustive":false,"flush_cap":100}"#;
    std::fs::write(&path, cfg).unwrap();
    let o = trapdoor(&["simulate", "--config", path.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rate = json(&o)["quantities"]["rate_064"].as_f64().unwrap();
    assert!((rate - 0.6942).abs() < 0.02);
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# trapdoor-csv v1"));
    lines.next().expect("column header");
    lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = trapdoor(&[
        "solve",
        "--grid",
        "101",
        "--actions",
        "201",
        "--iters",
        "5",
        "--steps",
        "1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("simulated reward"));
    let value = csv_rows(&dir.path().join("value.csv"));
    assert_eq!(value.len(), 101);
    assert_eq!(value[0].len(), 4);
    let diff = csv_rows(&dir.path().join("differential.csv"));
    assert_eq!(diff[0][1], 0.0);
    let freq: f64 = diff.iter().map(|r| r[2]).sum();
    assert!((freq - 1.0).abs() < 1e-9);
    assert!(dir.path().join("solve.json").exists());
}

#[test]
fn solve_zero_iterations_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_trapdoor"))
        .args([
            "solve",
            "--grid",
            "11",
            "--actions",
            "11",
            "--iters",
            "0",
            "--steps",
            "0",
        ])
        .env("TRAPDOOR_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let value = csv_rows(&dir.path().join("value.csv"));
    assert!(value.iter().all(|r| r[1] == 0.0));
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let target = blocker.join("sub");
    let o = trapdoor(&[
        "solve",
        "--grid",
        "11",
        "--actions",
        "11",
        "--iters",
        "1",
        "--steps",
        "10",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot create"));
}

#[test]
fn verify_wrong_rho_fails_and_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = trapdoor(&[
        "verify",
        "--grid",
        "1001",
        "--actions",
        "2001",
        "--iters",
        "3",
        "--rho",
        "0.70",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
            .unwrap();
    let failed = failed_checks(&report["fixed_point"]);
    assert!(
        failed.contains(&"bellman_residual".to_string()),
        "{failed:?}"
    );
    assert!(dir.path().join("verify_iterates.csv").exists());
}

#[test]
fn verify_single_iteration_is_partial() {
    let o = trapdoor(&[
        "verify",
        "--grid",
        "201",
        "--actions",
        "401",
        "--iters",
        "1",
        "--json",
    ]);
    let v = json(&o);
    assert_eq!(v["fixed_point"]["iterations"].as_array().unwrap().len(), 1);
    assert!(failed_checks(&v["fixed_point"])
        .iter()
        .all(|c| c != "monotone_nonincreasing"));
}

#[test]
fn verify_default_flags_pass() {
    let o = trapdoor(&["verify", "--json"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v = json(&o);
    assert!(v["fixed_point"]["bellman_residual"].as_f64().unwrap() <= 1e-4);
    assert_eq!(v["passed"], true);
}
