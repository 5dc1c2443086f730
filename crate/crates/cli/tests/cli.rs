use std::path::Path;
use std::process::Command;

use thermiq_cli::RunManifest;

fn thermiq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thermiq"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn list_kinds_names_all_ten() {
    let out = thermiq().arg("list-kinds").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("spectrum-sweep"));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", "kind = \"gibbs\"\n");
    let status = thermiq().args(["validate", "--config"]).arg(&good).status().unwrap();
    assert_eq!(status.code(), Some(0));

    let bad = write(dir.path(), "bad.toml", "kind = \"warp\"\n");
    let out = thermiq().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("kind"));

    let range = write(dir.path(), "range.toml", "kind = \"tomography\"\n[parameters]\nsamples = -1\n");
    let out = thermiq().args(["validate", "--config"]).arg(&range).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("parameters.samples"));

    let missing = dir.path().join("absent.toml");
    assert_eq!(thermiq().args(["validate", "--config"]).arg(&missing).status().unwrap().code(), Some(2));
}

#[test]
fn runtime_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // A 64-point grid leaves the narrow density under-resolved; ripples reach the edge.
    let cfg = write(dir.path(), "k.toml", "kind = \"koopman\"\n[parameters]\ngrid = [64]\nhalf_width = 4.0\n");
    let out = thermiq().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("k")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("koopman"));
}

#[test]
fn malus_run_writes_rows_schema_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", "kind = \"malus\"\n[parameters]\nangles = 36\npolarization = 0.2\n");
    let prefix = dir.path().join("run/malus");
    let status = thermiq().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&prefix).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("run/malus.sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "angle,intensity,test_probability,cos2,residual");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 36);
    for r in &rows {
        assert!((r[1] - r[3]).abs() <= 1e-12);
    }
    assert!(dir.path().join("run/malus.sweep.schema.json").exists());
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/malus.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.kind, "malus");
    assert_eq!(manifest.outputs.len(), 2);
    assert!(thermiq_cli::verify_manifest(&manifest).is_empty());
    std::fs::write(&manifest.outputs[0].path, "tampered").unwrap();
    assert_eq!(thermiq_cli::verify_manifest(&manifest).len(), 1);
}

#[test]
fn tomography_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", "kind = \"tomography\"\nseed = 9\n[parameters]\ndim = 2\nsamples = 100000\n");
    let prefix = dir.path().join("tomo");
    assert!(thermiq().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&prefix).status().unwrap().success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tomo.state.json")).unwrap()).unwrap();
    assert!(report["trace_distance"].as_f64().unwrap() <= 0.05);
    assert_eq!(report["dim"], 2);
    assert_eq!(report["entries"].as_array().unwrap().len(), 4);
    let table = thermiq::io::frequencies_from_csv(&std::fs::read_to_string(dir.path().join("tomo.frequencies.csv")).unwrap())
        .unwrap();
    assert_eq!(table.len(), 3);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.toml", "kind = \"bistable\"\nseed = 1\n[parameters]\nruns = 200\nt_end = 10.0\n");
    let digest = |seed: &str, name: &str| {
        let prefix = dir.path().join(name);
        let out = thermiq()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--seed", seed, "--threads", "2", "--out"])
            .arg(&prefix)
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read(dir.path().join(format!("{name}.final.csv"))).unwrap()
    };
    assert_eq!(digest("5", "a"), digest("5", "b"));
    assert_ne!(digest("5", "c"), digest("6", "d"));
}
