use std::fs;
use std::path::Path;
use std::process::Command;

fn vll(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_vll")).args(args).env("VLL_THREADS", "1").output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

const SMALL: &str = r#"
[grid]
cells = 256

[physics]
epsilon = 0.05

[time]
horizon = 0.05
cadence = 0.01
"#;

#[test]
fn too_few_cells_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[grid]\ncells = 2\n");
    let out = d.path().join("o").display().to_string();
    let (code, _, err) = vll(&["run", "--config", &cfg, "--out", &out]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("grid.cells"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[grid]\ncels = 64\n");
    let (code, _, _) = vll(&["run", "--config", &cfg, "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, _) = vll(&["check", "--config", "/nonexistent/vll.toml", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn equilibrium_run_reports_zeros() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}\n[datum]\nbackground = 1.0\nrho_amplitude = 0.0\nrho_mode = 1\nu_amplitude = 0.0\nu_mode = 1\n");
    let cfg = write_config(d.path(), &body);
    let out = d.path().join("eq");
    let (code, _, err) = vll(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for e in rep["E_series"]["energy"].as_array().unwrap() {
        assert_eq!(e.as_f64().unwrap(), 0.0);
    }
    assert_eq!(rep["E0"].as_f64().unwrap(), 0.0);
    for r in rep["R"].as_array().unwrap() {
        assert_eq!(r.as_f64().unwrap(), 0.0);
    }
    assert_eq!(rep["metric"]["sup"].as_f64().unwrap(), 0.0);

    let snap = fs::read_to_string(out.join("snap_0.csv")).unwrap();
    assert!(snap.starts_with("t,x,rho,m,u\n"));
    assert!(!snap.contains('\r'));
    assert!(out.join("snap_5_ref.csv").exists());
    assert!(!out.join("snap_6.csv").exists());
}

#[test]
fn runs_are_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert_eq!(vll(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(vll(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]).0, 0);
    for f in ["report.json", "report.csv", "budgets.csv", "snap_5.csv", "snap_5_ref.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn single_epsilon_sweep_writes_one_row() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[time]\nhorizon = 0.05\ncadence = 0.01\n\n[sweep]\nbase_cells = 128\n");
    let out = d.path().join("s");
    let (code, _, err) = vll(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--epsilon", "0.125", "--jobs", "1"]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epsilon,r1,metric,E0,ET,kato_monitor,lgamma_monitor,gronwall_C");
    assert_eq!(lines.len(), 2);
    assert!(out.join("run_0").join("report.json").exists());
}

#[test]
fn increasing_epsilon_list_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, _) = vll(&["sweep", "--out", d.path().to_str().unwrap(), "--epsilon", "0.01,0.1"]);
    assert_eq!(code, 2);
}

#[test]
fn layer_scaling_table() {
    let d = tempfile::tempdir().unwrap();
    let (code, stdout, _) = vll(&["layer-scaling", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let csv = fs::read_to_string(d.path().join("scaling.csv")).unwrap();
    assert!(csv.starts_with("norm_name,epsilon,value,fitted_exponent,paper_exponent\n"));
}

#[test]
fn tampered_cutoff_fails_check() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[check]\ncutoff_scale = 0.5\nsamples = 50\n");
    let (code, stdout, _) = vll(&["check", "--config", &cfg, "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL cutoff_invariants"), "{stdout}");
}
