use std::path::Path;
use std::process::{Command, Output};

use qclsim_cli::runner::Meta;

fn qclsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclsim"))
        .args(args)
        .env_remove("QCLSIM_THREADS")
        .output()
        .expect("spawn qclsim")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const PLAIN: &str = r#"
seed = 5
output = "unused"
observables = ["identity", "sigma_z", "Q"]

[model]
name = "two_level_quartic"
omega = 1.0
a = 1.0
b = 1.0
gamma0 = 0.8

[dynamics]
dt = 0.002
n_steps = 1000
n_traj = 200
transitions = "off"
stride = 100

[initial]
subsystem = [[1.0, 0.0], [0.0, 0.0]]
bath = "canonical"
temperature = 0.5
pairs = "enumerate"
"#;

fn read_series(dir: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(dir.join("series.csv")).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn run_writes_series_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "plain.toml", PLAIN);
    let out = dir.path().join("out");
    let o = qclsim(&["run", &cfg, "--output", out.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_series(&out);
    assert_eq!(header[0], "t");
    assert_eq!(&header[1..4], ["identity:mean_re", "identity:mean_im", "identity:stderr"]);
    assert_eq!(header.last().unwrap(), "casimir_drift");
    assert_eq!(rows.len(), 11);
    let drift_col = header.iter().position(|h| h == "energy_drift").unwrap();
    for row in &rows {
        assert!((row[1] - 1.0).abs() < 1e-12, "identity {}", row[1]);
        assert!(row[drift_col] < 1e-6, "energy drift {}", row[drift_col]);
    }

    let meta: Meta = serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta.seed, 5);
    assert_eq!(meta.threads, 2);
    assert_eq!(meta.columns, header);
    assert_eq!(meta.n_samples, 200);
    assert_eq!(meta.config, qclsim_cli::config::RunConfig::from_toml(PLAIN).unwrap());
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &PLAIN.replace("dt = 0.002", "dt = -0.01"));
    assert_eq!(qclsim(&["run", &cfg]).status.code(), Some(2));
    let cfg = write(dir.path(), "typo.toml", &PLAIN.replace("stride = 100", "strid = 100"));
    assert_eq!(qclsim(&["run", &cfg]).status.code(), Some(2));
    assert_eq!(qclsim(&["run", "/nonexistent/config.toml"]).status.code(), Some(2));
}

#[test]
fn non_finite_trajectory_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = PLAIN
        .replace("dt = 0.002", "dt = 5.0")
        .replace("bath = \"canonical\"", "bath = \"point\"\npoint = [40.0, 0.0]")
        .replace("temperature = 0.5\n", "");
    let cfg = write(dir.path(), "blowup.toml", &text);
    let o = qclsim(&["run", &cfg, "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trajectory 0"));
}

#[test]
fn thread_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "plain.toml", PLAIN);
    let out = dir.path().join("capped");
    let o = Command::new(env!("CARGO_BIN_EXE_qclsim"))
        .args(["run", &cfg, "--output", out.to_str().unwrap(), "--threads", "8"])
        .env("QCLSIM_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    let meta: Meta = serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta.threads, 3);
}

#[test]
fn check_reports_json() {
    let o = qclsim(&["check", "jump", "--json"]);
    assert!(o.status.success());
    let items: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let items = items.as_array().unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|i| i["suite"] == "jump" && i["passed"] == true));

    let o = qclsim(&["check", "bracket"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    assert_eq!(qclsim(&["check", "nonsense"]).status.code(), Some(2));
}

#[test]
fn bracket_tool() {
    let o = qclsim(&["bracket", "Q*sigma_z", "P^2*sigma_x", "Q*sigma_x", "--at", "1,-1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["antisymmetry"].as_f64().unwrap() < 1e-10);
    assert!(report["jacobi"].as_f64().unwrap() > 1.0);

    let o = qclsim(&["bracket", "Sx", "Sy", "Sz", "--at", "0.6,0,0.8", "--structure", "spin"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["jacobi"].as_f64().unwrap() < 1e-6);

    assert_eq!(qclsim(&["bracket", "Q", "P", "Q", "--at", "1,2,3"]).status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let cfg = qclsim_cli::config::RunConfig::load(&path).unwrap();
        cfg.validate().unwrap();
        cfg.build_model().unwrap();
        n += 1;
    }
    assert!(n >= 4);
}
