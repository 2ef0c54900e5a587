use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mec-offload"))
}

const CONFIG: &str = r#"{"num_users": 4, "num_edge_servers": 2, "horizon": 500,
    "policies": [{"kind": "mu_ucb1"}, {"kind": "bmse"}], "seeds": [0, 1]}"#;

#[test]
fn pool_size_table() {
    let out = bin().args(["pool-size", "--servers", "2", "--users", "4..6"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows[0], ["4", "81", "256", "6", "6"]);
    assert_eq!(rows[2], ["6", "729", "4096", "20", "20"]);
}

#[test]
fn run_validate_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    fs::write(&config, CONFIG).unwrap();
    let out_dir = dir.path().join("out");

    let out = bin().arg("validate").arg(&config).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("policies [mu_ucb1, bmse]"));

    let out = bin()
        .arg("run")
        .arg(&config)
        .args(["--seed-count", "3", "--parallel", "2", "--mode", "paper-verbatim", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 500);

    let out = bin().arg("oracle").arg(&config).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("seed 0: best (L,L,L,L)"), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("gap")).count(), 2 * 256);
}

#[test]
fn bad_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"num_users": 4, "horizon": 10, "policies": []}"#).unwrap();
    let out = bin().arg("validate").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_edge_servers"));
}

#[test]
fn run_errors_set_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("capped.json");
    fs::write(
        &config,
        r#"{"num_users": 4, "num_edge_servers": 2, "horizon": 100,
            "policies": [{"kind": "mu_ucb1", "max_pool": 10}], "out_dir": "unused"}"#,
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
