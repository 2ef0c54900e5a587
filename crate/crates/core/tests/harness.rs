use std::fs;

use mec_offload::harness::{load_config, resolve_out_dir, run_experiment, ConfigError, CSV_HEADER, OUT_DIR_ENV};

const REFERENCE: &str = r#"{
  "num_users": 4,
  "num_edge_servers": 2,
  "horizon": 2000,
  "system": {
    "cpu_freq_hz": 3.0e9,
    "cycles_per_bit": 3000,
    "bandwidth_hz": 3.0e4,
    "tx_power_w": 3200,
    "noise_w": 50,
    "gain_range": [0.125, 1.0],
    "edge_cloud_gain": 0.125,
    "edge_capacity_bytes_per_s": [50e6, 51e6],
    "cloud_capacity_bytes_per_s": "100GB",
    "task_fwd": "200MB",
    "task_bwd": "20MB",
    "exploration": 1.0,
    "include_cloud": true
  },
  "policies": [
    {"kind": "mu_ucb1"},
    {"kind": "epsilon_greedy", "epsilon": 0.05},
    {"kind": "bmse"}
  ],
  "seed_count": 2,
  "sweep": {"axis": "task_size", "values": ["100MB", "200MB"]}
}"#;

#[test]
fn reference_file_runs_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reference.json");
    fs::write(&path, REFERENCE).unwrap();
    let mut spec = load_config(&path).unwrap();
    assert_eq!(spec.system.edge_capacity_bps, (4.0e8, 4.08e8));
    assert_eq!(spec.system.cloud_capacity_bps, 8.0e11);
    assert_eq!(spec.seeds, vec![0, 1]);

    let mut outputs = Vec::new();
    for threads in [Some(1), None] {
        let out = tempfile::tempdir().unwrap();
        spec.out_dir = out.path().to_path_buf();
        let report = run_experiment(&spec, threads).unwrap();
        assert_eq!(report.summaries.len(), 2 * 3 * 2);
        assert_eq!(report.errors(), 0);
        assert!(report.summaries.iter().all(|s| s.slots == 2000));
        let csv = fs::read_to_string(out.path().join("runs.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(csv.lines().count(), 1 + 12 * 2000);
        let summary = fs::read_to_string(out.path().join("summary.json")).unwrap();
        assert!(out.path().join("timing.json").exists());
        outputs.push((csv, summary));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn missing_file_and_bad_values() {
    assert!(matches!(load_config("/nonexistent/spec.json"), Err(ConfigError::Io { .. })));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, REFERENCE.replace("\"noise_w\": 50", "\"noise_w\": -50")).unwrap();
    let err = load_config(&path).unwrap_err();
    assert!(err.to_string().contains("noise_w"), "{err}");
}

#[test]
fn out_dir_override() {
    let configured = std::path::Path::new("from-config");
    std::env::set_var(OUT_DIR_ENV, "/tmp/from-env");
    assert_eq!(resolve_out_dir(configured), std::path::PathBuf::from("/tmp/from-env"));
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(resolve_out_dir(configured), configured.to_path_buf());
}
