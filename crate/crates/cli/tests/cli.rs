use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn knoop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knoop")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = knoop(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, p_real: &str, seed: &str) -> String {
    ok(&["simulate", "--n", "100", "--p", "80", "--p-real", p_real, "--rho", "0.25", "--sigma2", "1", "--seed", seed, "--out", s(dir)]);
    dir.join("data.csv").to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_two_files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["simulate", "--n", "100", "--p", "80", "--p-real", "10", "--seed", "1", "--out", s(dir.path())]);
    assert!(out.contains("n=100 p=80 p_real=10 seed=1"));
    let truth = json(&dir.path().join("data.truth.json"));
    assert_eq!(truth["support"].as_array().unwrap().len(), 10);
    let csv = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(csv.lines().next().unwrap().ends_with(",y"));
}

#[test]
fn invalid_simulation_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let out = knoop(&["simulate", "--n", "10", "--p", "5", "--p-real", "6", "--out", s(&target)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(!target.exists());
}

#[test]
fn select_top_k_returns_k_indices_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(&dir.path().join("d"), "10", "1");
    let before = fs::read(&csv).unwrap();
    let out_dir = dir.path().join("s");
    let table = ok(&["select", "--in", &csv, "--target", "y", "--ell-max", "3", "--top-k", "4", "--seed", "7", "--out", s(&out_dir)]);
    assert_eq!(table.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).count(), 10);
    let sel = json(&out_dir.join("selection.json"));
    assert_eq!(sel["method"], "top_k");
    assert_eq!(sel["selected"].as_array().unwrap().len(), 4);
    let report = json(&out_dir.join("report.json"));
    let p: Vec<f64> = report.as_array().unwrap().iter().map(|e| e["p_value"].as_f64().unwrap()).collect();
    assert_eq!(p.len(), 80);
    assert!(p.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(fs::read(&csv).unwrap(), before, "input must not change");
}

#[test]
fn selection_flags_are_exclusive_and_required() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(&dir.path().join("d"), "10", "1");
    let o = s(dir.path());
    assert_eq!(knoop(&["select", "--in", &csv, "--top-k", "3", "--bh-alpha", "0.1", "--out", o]).status.code(), Some(2));
    assert_eq!(knoop(&["select", "--in", &csv, "--top-k", "3", "--cv", "--out", o]).status.code(), Some(2));
    assert_eq!(knoop(&["select", "--in", &csv, "--out", o]).status.code(), Some(2));
}

#[test]
fn cv_selection_reports_per_size_mse() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(&dir.path().join("d"), "10", "2");
    let out_dir = dir.path().join("cv");
    ok(&["select", "--in", &csv, "--cv", "--folds", "5", "--cv-sizes", "1,5,10,20", "--out", s(&out_dir)]);
    let sel = json(&out_dir.join("selection.json"));
    let params = &sel["params"];
    assert_eq!(params["candidate_sizes"].as_array().unwrap().len(), 4);
    assert_eq!(params["validation_mse"].as_array().unwrap().len(), 4);
    let chosen = params["chosen_size"].as_u64().unwrap() as usize;
    assert_eq!(sel["selected"].as_array().unwrap().len(), chosen);
}

#[test]
fn bh_on_global_null_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(&dir.path().join("d"), "0", "3");
    let out_dir = dir.path().join("bh");
    ok(&["select", "--in", &csv, "--bh-alpha", "0.05", "--out", s(&out_dir)]);
    let sel = json(&out_dir.join("selection.json"));
    assert_eq!(sel["params"]["alpha"], 0.05);
    assert!(sel["selected"].is_array());
}

#[test]
fn parse_errors_name_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "a,b,y\n1,2,3\n4,oops,6\n").unwrap();
    let out = knoop(&["select", "--in", s(&csv), "--top-k", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("oops") || err.contains("column"), "{err}");
    let missing = knoop(&["select", "--in", s(&csv), "--target", "z", "--top-k", "1", "--out", s(dir.path())]);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("z"));
}

#[test]
fn single_repetition_benchmark_has_null_sd() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(&["benchmark", "--preset", "paper-settings", "--only", "1", "--reps", "1", "--out", s(dir.path())]);
    assert!(table.contains("setting-1"));
    let report = json(&dir.path().join("benchmark.json"));
    let setting = &report["settings"][0];
    assert!(setting["knoop"]["sd"].is_null());
    assert!(setting.get("seconds").is_none());
    let csv = fs::read_to_string(dir.path().join("benchmark.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "setting,repetition,method,auc,seconds");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn benchmark_timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["benchmark", "--preset", "paper-settings", "--only", "1", "--reps", "2", "--timings", "--out", s(dir.path())]);
    let report = json(&dir.path().join("benchmark.json"));
    assert_eq!(report["settings"][0]["seconds"].as_array().unwrap().len(), 2);
}

#[test]
fn benchmark_reads_settings_file_and_env_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("settings.json");
    fs::write(
        &file,
        r#"[{"label": "tiny", "sim": {"n": 40, "p": 20, "p_real": 4, "rho": 0.25, "sigma2": 1.0},
            "pipeline": {"ell_max": 2}, "repetitions": 2, "baseline": false}]"#,
    )
    .unwrap();
    let run = |dir: &Path, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_knoop"))
            .args(["benchmark", "--settings", s(&file), "--seed", "3", "--out", s(dir)])
            .env("KNOOP_PARALLELISM", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(dir.join("benchmark.json")).unwrap()
    };
    let a = run(&dir.path().join("a"), "1");
    let b = run(&dir.path().join("b"), "3");
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["settings"][0]["ell_max"], 2);
    assert!(report["settings"][0]["ridge"].is_null());
}

#[test]
fn benchmark_rejects_bad_sources() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!knoop(&["benchmark", "--preset", "table-9", "--out", s(dir.path())]).status.success());
    let file = dir.path().join("broken.json");
    fs::write(&file, "{not json").unwrap();
    assert!(!knoop(&["benchmark", "--settings", s(&file), "--out", s(dir.path())]).status.success());
    assert_eq!(knoop(&["benchmark", "--out", s(dir.path())]).status.code(), Some(2));
    assert!(!dir.path().join("benchmark.json").exists());
}

#[test]
fn diagnose_layer_count_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("ens.csv");
    ok(&["diagnose", "--n", "500", "--p", "4", "--ell-max", "1", "--export-ensemble", s(&export), "--out", s(dir.path())]);
    let diag = json(&dir.path().join("diagnostics.json"));
    assert_eq!(diag["per_set_results"].as_array().unwrap().len(), 1);
    let header = fs::read_to_string(&export).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "x1,x2,x3,x4,ko1_1,ko1_2,ko1_3,ko1_4");
}

#[test]
fn diagnose_reads_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(&dir.path().join("d"), "10", "4");
    let out_dir = dir.path().join("diag");
    let table = ok(&["diagnose", "--in", &csv, "--ell-max", "2", "--out", s(&out_dir)]);
    assert!(table.contains("max deviations"));
    let diag = json(&out_dir.join("diagnostics.json"));
    assert_eq!(diag["p"], 80);
    assert_eq!(diag["per_set_results"].as_array().unwrap().len(), 3);
}

#[test]
fn diagnose_requires_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = knoop(&["diagnose", "--ell-max", "2", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}
