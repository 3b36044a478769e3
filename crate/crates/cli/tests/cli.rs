use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn meanlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn meanlab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn scalar(dir: &TempDir, name: &str, x: f64) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, format!("{{\"dim\":1,\"rows\":[[{x}]]}}")).unwrap();
    p
}

fn read_scalar(path: &Path) -> f64 {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["rows"][0][0].as_f64().unwrap()
}

#[test]
fn mean_nabla_scalar() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 0.2);
    scalar(&d, "b.json", 0.4);
    let out = meanlab(d.path(), &["mean", "--op", "nabla", "--lambda", "0.5", "--a", "a.json", "--b", "b.json", "--out", "n.json"]);
    assert_eq!(code(&out), 0);
    assert!((read_scalar(&d.path().join("n.json")) - 0.3).abs() < 1e-15);

    let out = meanlab(d.path(), &["mean", "--op", "sharp", "--a", "a.json", "--b", "b.json", "--out", "g.json"]);
    assert_eq!(code(&out), 0);
    assert!((read_scalar(&d.path().join("g.json")) - 0.08f64.sqrt()).abs() < 1e-14);
}

#[test]
fn mean_rejects_bad_lambda_without_output() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 0.2);
    scalar(&d, "b.json", 0.4);
    let out = meanlab(d.path(), &["mean", "--op", "sharp", "--lambda", "1.0", "--a", "a.json", "--b", "b.json", "--out", "g.json"]);
    assert_eq!(code(&out), 2);
    assert!(!d.path().join("g.json").exists());
    assert_eq!(code(&meanlab(d.path(), &["mean", "--op", "cube", "--a", "a.json", "--b", "b.json", "--out", "g.json"])), 2);
    assert_eq!(code(&meanlab(d.path(), &["mean", "--op", "sharp", "--a", "nope.json", "--b", "b.json", "--out", "g.json"])), 2);
}

#[test]
fn mean_domain_error() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 0.2);
    scalar(&d, "z.json", 0.0);
    let out = meanlab(d.path(), &["mean", "--op", "sharp", "--a", "a.json", "--b", "z.json", "--out", "g.json"]);
    assert_eq!(code(&out), 3);
    assert!(!d.path().join("g.json").exists());
}

#[test]
fn series_trace() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 0.2);
    scalar(&d, "b.json", 0.4);
    let out = meanlab(d.path(), &["series", "--a", "a.json", "--b", "b.json", "--lambda", "0.5", "--terms", "32", "--out", "s.csv"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,coefficient,term_fro_norm,term_min_eig,partial_sum_fro_norm");
    assert!(lines.last().unwrap().starts_with("# converged=true,identity_residual="));
    let last_row = lines[lines.len() - 2];
    let sum: f64 = last_row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((sum - 0.017_157_29).abs() < 1e-8);
}

#[test]
fn series_equal_inputs_single_zero_row() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 0.3);
    let out = meanlab(d.path(), &["series", "--a", "a.json", "--b", "a.json", "--out", "s.csv"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1);
    let vals: Vec<f64> = rows[0].split(',').skip(2).map(|x| x.parse().unwrap()).collect();
    assert!(vals.iter().all(|&v| v == 0.0));
}

#[test]
fn series_exit_codes() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 3.0);
    scalar(&d, "b.json", 1.0);
    let out = meanlab(d.path(), &["series", "--a", "a.json", "--b", "b.json", "--out", "s.csv"]);
    assert_eq!(code(&out), 3);
    assert!(!d.path().join("s.csv").exists());

    scalar(&d, "c.json", 0.02);
    scalar(&d, "e.json", 0.5);
    let out = meanlab(d.path(), &["series", "--a", "c.json", "--b", "e.json", "--terms", "4", "--out", "s.csv"]);
    assert_eq!(code(&out), 4);
    let text = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    assert!(text.lines().last().unwrap().starts_with("# converged=false"));

    assert_eq!(code(&meanlab(d.path(), &["series", "--a", "c.json", "--b", "e.json", "--terms", "1", "--out", "s.csv"])), 2);
}

#[test]
fn iterate_trace() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 8.0);
    scalar(&d, "b.json", 1.0);
    let out = meanlab(d.path(), &["iterate", "--a", "a.json", "--b", "b.json", "--m", "3", "--out", "t.csv"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    assert!(text.starts_with("n,residual_fro,bound_fro,min_eig_Tn_minus_limit,asymmetry_norm\n"));
    let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-11);

    let out = meanlab(d.path(), &["iterate", "--a", "a.json", "--b", "b.json", "--m", "3", "--max-iter", "1", "--out", "u.csv"]);
    assert_eq!(code(&out), 4);
    let out = meanlab(d.path(), &["iterate", "--kind", "ah", "--a", "a.json", "--b", "b.json", "--out", "h.csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&meanlab(d.path(), &["iterate", "--a", "a.json", "--b", "b.json", "--m", "1", "--out", "v.csv"])), 2);
}

#[test]
fn gmean_scalar() {
    let d = TempDir::new().unwrap();
    scalar(&d, "a.json", 0.2);
    scalar(&d, "b.json", 0.3);
    scalar(&d, "c.json", 0.4);
    let out = meanlab(d.path(), &["gmean", "--inputs", "a.json", "b.json", "c.json", "--out", "g.json"]);
    assert_eq!(code(&out), 0);
    assert!((read_scalar(&d.path().join("g.json")) - 0.024f64.cbrt()).abs() < 1e-12);
}

#[test]
fn verify_theorem_suite_exits_zero() {
    let d = TempDir::new().unwrap();
    let out = meanlab(
        d.path(),
        &["verify", "--mode", "thm32", "--trials", "100", "--seed", "42", "--commuting", "--ordered", "--report", "r.jsonl"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(d.path().join("r.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 102);
    assert!(text.lines().next().unwrap().contains("\"kind\":\"config\""));
    assert!(text.lines().last().unwrap().contains("\"kind\":\"summary\""));
}

#[test]
fn verify_config_errors() {
    let d = TempDir::new().unwrap();
    let out = meanlab(d.path(), &["verify", "--mode", "thm32", "--lambda-grid", "1.5", "--report", "r.jsonl"]);
    assert_eq!(code(&out), 2);
    assert!(!d.path().join("r.jsonl").exists());
    let out = meanlab(d.path(), &["verify", "--mode", "open-problem", "--report", "r.jsonl"]);
    assert_eq!(code(&out), 2);
    let out = meanlab(d.path(), &["search-open", "--dim", "0", "--report", "r.jsonl"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_violation_exits_five() {
    // Spectra above 1/2 and lambda above 1/2 break the hypotheses; some
    // seeds then violate the inequality and theorem mode must fail loudly.
    let d = TempDir::new().unwrap();
    let out = meanlab(
        d.path(),
        &[
            "verify", "--mode", "thm32", "--trials", "200", "--dim", "1", "--lambda-grid", "0.9", "--spectrum-lo", "0.5",
            "--spectrum-hi", "0.99", "--seed", "1", "--report", "r.jsonl",
        ],
    );
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(d.path().join("r.jsonl")).unwrap();
    let stored = text.lines().filter(|l| l.contains("\"violated\":true")).collect::<Vec<_>>();
    assert!(!stored.is_empty());
    assert!(stored.iter().all(|l| l.contains("\"inputs\"")));
    let out = meanlab(d.path(), &["replay", "--report", "r.jsonl"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn config_file_is_accepted() {
    let d = TempDir::new().unwrap();
    std::fs::write(
        d.path().join("c.json"),
        r#"{"mode":"corollary","trials":10,"dim":2,"n_ops":2,"lambda_grid":[],"commuting":true,"ordered":true,"seed":3,"store_inputs":"never"}"#,
    )
    .unwrap();
    let out = meanlab(d.path(), &["verify", "--config", "c.json", "--report", "r.jsonl"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(d.path().join("bad.json"), r#"{"mode":"thm32"}"#).unwrap();
    assert_eq!(code(&meanlab(d.path(), &["verify", "--config", "bad.json", "--report", "r.jsonl"])), 2);
}

#[test]
fn open_problem_empty_and_replay() {
    let d = TempDir::new().unwrap();
    let out = meanlab(d.path(), &["search-open", "--trials", "0", "--report", "e.jsonl"]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(d.path().join("e.jsonl")).unwrap().lines().count(), 2);

    let out = meanlab(
        d.path(),
        &["search-open", "--trials", "25", "--n-ops", "4", "--dim", "3", "--seed", "9", "--store-inputs", "always", "--report", "o.jsonl"],
    );
    assert_eq!(code(&out), 0);
    let out = meanlab(d.path(), &["replay", "--report", "o.jsonl", "--out", "rep.csv"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(d.path().join("rep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
    for row in csv.lines().skip(1) {
        let diff: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(diff <= 1e-12);
    }
    let out = meanlab(d.path(), &["replay", "--report", "o.jsonl", "--trial", "7"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    assert_eq!(code(&meanlab(d.path(), &["replay", "--report", "o.jsonl", "--trial", "99"])), 2);
}

#[test]
fn replay_detects_tampering() {
    let d = TempDir::new().unwrap();
    let out = meanlab(d.path(), &["verify", "--trials", "5", "--commuting", "--ordered", "--seed", "4", "--report", "r.jsonl"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(d.path().join("r.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut v: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    let g = v["gap_min_eig"].as_f64().unwrap();
    v["gap_min_eig"] = serde_json::json!(g + 1e-6);
    lines[1] = v.to_string();
    std::fs::write(d.path().join("t.jsonl"), lines.join("\n")).unwrap();
    assert_eq!(code(&meanlab(d.path(), &["replay", "--report", "t.jsonl"])), 6);
    assert_eq!(code(&meanlab(d.path(), &["replay", "--report", "r.jsonl"])), 0);
}

#[test]
fn thread_count_does_not_change_report() {
    let d = TempDir::new().unwrap();
    let run = |threads: &str, name: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_meanlab"))
            .current_dir(d.path())
            .env("MEANLAB_THREADS", threads)
            .args(["search-open", "--trials", "40", "--n-ops", "3", "--dim", "2", "--seed", "5", "--report", name])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        let text = std::fs::read_to_string(d.path().join(name)).unwrap();
        text.lines().filter(|l| !l.contains("\"kind\":\"summary\"")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run("1", "a.jsonl"), run("4", "b.jsonl"));
    let out = Command::new(env!("CARGO_BIN_EXE_meanlab"))
        .current_dir(d.path())
        .env("MEANLAB_THREADS", "0")
        .args(["search-open", "--trials", "1", "--report", "c.jsonl"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
