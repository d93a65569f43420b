use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fa(args: &[&str]) -> Output {
    fa_env(args, &[])
}

fn fa_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fa"));
    cmd.args(args).env_remove("FA_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run fa")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn small_run(dir: &Path, extra: &[&str]) -> (Output, String) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["simulate", "--preset", "fig1a-desk", "--steps", "60", "--particles", "3000", "--out", out];
    args.extend_from_slice(extra);
    let o = fa(&args);
    let series = std::fs::read_to_string(dir.join("fig1a-desk_series.csv")).unwrap_or_default();
    (o, series)
}

#[test]
fn list_presets_names_every_family() {
    let o = fa(&["list-presets"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    for name in ["fig1a-desk", "fig3c-full", "fig9b-desk", "fig1a-oracle", "ex52-race"] {
        assert!(s.lines().any(|l| l.starts_with(&format!("{name}\t"))), "{name} missing");
    }
}

#[test]
fn misspelled_step_size_suggests_h() {
    for flag in ["--stepsize", "--dt=0.1"] {
        let o = fa(&["simulate", "--preset", "fig1a-desk", flag, "0.1"]);
        assert_eq!(code(&o), 2);
        assert!(stderr(&o).contains("did you mean `--h`"), "{}", stderr(&o));
    }
    assert_eq!(code(&fa(&["simulate", "--bogus"])), 2);
}

#[test]
fn simulate_writes_artifacts_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (o, a) = small_run(dir.path(), &["--seed", "5", "--plot"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(a.starts_with("t,kl,l1,fisher,mean_dist\n"));
    assert_eq!(a.lines().count(), 1 + 4);
    let verdict: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1a-desk_verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["seed"], 5);
    assert!(dir.path().join("fig1a-desk.svg").exists());

    let (_, b) = small_run(dir.path(), &["--seed", "5", "--threads", "3"]);
    assert_eq!(a, b);
    let (_, c) = small_run(dir.path(), &["--seed", "6"]);
    assert_ne!(a, c);

    let o = fa_env(
        &[
            "simulate",
            "--preset",
            "fig1a-desk",
            "--steps",
            "60",
            "--particles",
            "3000",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[("FA_SEED", "5")],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("fig1a-desk_series.csv")).unwrap(), a);
    let o = fa_env(&["simulate", "--preset", "fig1a-desk"], &[("FA_SEED", "five")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_round_trip_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(r#"{{"preset": "fig3b-desk", "name": "trial", "steps": 40, "particles": 2000, "out": {:?}}}"#, out),
    )
    .unwrap();
    let o = fa(&["simulate", "--config", cfg.to_str().unwrap(), "--steps", "20"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let series = std::fs::read_to_string(out.join("trial_series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 2);

    std::fs::write(&cfg, r#"{"preset": "fig3b-desk", "stepsize": 0.1}"#).unwrap();
    let o = fa(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stepsize"));
    assert_eq!(code(&fa(&["simulate", "--preset", "nope"])), 2);
    assert_eq!(code(&fa(&["simulate", "--preset", "fig1a-desk", "--h", "-0.1"])), 2);
}

#[test]
fn divergence_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = fa(&[
        "simulate",
        "--preset",
        "fig2a-desk",
        "--h",
        "1",
        "--steps",
        "200",
        "--particles",
        "500",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("non-finite"));
}

#[test]
fn certify_overdamped_and_infeasible() {
    let o = fa(&["certify", "--family", "overdamped", "--preset", "fig1a", "--c", "4"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!(r["lambda"].as_f64().unwrap() >= 0.25 - 1e-9);
    assert_eq!(r["feasible"], true);

    let o = fa(&["certify", "--family", "overdamped", "--preset", "fig2a"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["feasible"], false);

    let o = fa(&["certify", "--family", "j-drift", "--preset", "ex52", "--x-range", "-0.01:0.01"]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["lambda"].as_f64().unwrap() - 1.05).abs() < 0.05);
    assert_eq!(code(&fa(&["certify", "--family", "overdamped", "--t-range", "5"])), 2);
}

#[test]
fn certify_underdamped_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let o =
        fa(&["certify", "--family", "underdamped", "--lmin", "0.5", "--lmax", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    let exact = 1.0 - 0.25 * 12.5f64.sqrt();
    assert!((r["corollary"]["exact"].as_f64().unwrap() - exact).abs() < 1e-12);
    assert!((r["lambda"].as_f64().unwrap() - exact).abs() < 1e-9);
    assert!(r["regime_flags"][0].as_str().unwrap().starts_with("approximation_regime_violated"));
    assert!(r["conditions"].get("determinant").is_some());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&o));

    let o = fa(&["certify", "--family", "underdamped", "--lmin", "1", "--lmax", "2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("λ̄ ≥ λ̲ + 2"), "{}", stderr(&o));

    let o =
        fa(&["certify", "--family", "underdamped", "--lmin", "1", "--lmax", "1", "--r", "3", "--z1", "1", "--z2", "1"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["conditions"]["determinant"], true);
    assert_eq!(r["conditions"]["lower_right"], true);
    assert_eq!(r["conditions"]["z2_admissible"], true);
}

#[test]
fn oracle_writes_both_tables_and_rejects_non_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = fa(&["oracle", "--preset", "fig1a-oracle", "--steps", "100", "--particles", "20000", "--out", d]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(json(&o)["max_abs_kl_diff"].as_f64().unwrap() < 0.05);
    let table = std::fs::read_to_string(dir.path().join("fig1a-oracle_oracle.csv")).unwrap();
    assert!(table.starts_with("t,mean_0,mean_1,cov_00,cov_01,cov_11,kl_exact,kl_binned,fisher_exact\n"));

    let o = fa(&["oracle", "--preset", "fig2a-desk", "--steps", "10", "--out", d]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("oracle requires quadratic potential"));
}

#[test]
fn fit_recovers_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let mut text = String::from("t,kl,l1,fisher,mean_dist\n");
    for k in 0..40 {
        let t = 1.0 + k as f64;
        text.push_str(&format!("{t},{},,,\n", 3.0 / (t * t)));
    }
    std::fs::write(&path, text).unwrap();
    let o = fa(&["fit", "--csv", path.to_str().unwrap(), "--window", "5:40"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!((json(&o)["slope"].as_f64().unwrap() + 2.0).abs() < 1e-9);
    let o = fa(&["fit", "--csv", path.to_str().unwrap(), "--column", "fisher"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_eq!(code(&fa(&["fit", "--csv", path.to_str().unwrap(), "--column", "nope"])), 2);
}

#[test]
fn compare_identical_runs_tie() {
    let o = fa(&[
        "compare",
        "--a",
        "fig1a-desk",
        "--b",
        "fig1a-desk",
        "--particles",
        "2000",
        "--steps",
        "40",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["winner"], "tie");
    let o = fa(&["compare", "--a", "fig1a-desk", "--b", "fig3b-desk", "--particles", "1000", "--steps", "20"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&fa(&["compare", "--a", "fig1a-desk"])), 2);
}

#[test]
fn zero_steps_writes_initial_row_only() {
    let dir = tempfile::tempdir().unwrap();
    let (o, series) = small_run(dir.path(), &["--steps", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(series.lines().count(), 2);
    assert!(series.lines().nth(1).unwrap().starts_with(&std::f64::consts::E.to_string()));
}
