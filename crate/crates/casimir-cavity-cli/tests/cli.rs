use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir-cavity"))
        .args(args)
        .env_remove("CASIMIR_CAVITY_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV table, header row first, `#` lines dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = table[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn energy_vanishes_at_the_dirichlet_wall() {
    let o = run(&["energy", "--x-grid", "[0]"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    assert_eq!(column(&t, "energy"), vec![0.0]);
}

#[test]
fn atom_force_vanishes_at_the_centre() {
    let o = run(&["force", "--constraint", "atom", "--x-grid", "[0.5]"]);
    assert!(o.status.success());
    assert_eq!(column(&rows(&stdout(&o)), "force"), vec![0.0]);
}

#[test]
fn empty_medium_is_an_empty_table() {
    let o = run(&["medium", "--N-max", "0"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    assert_eq!(t.len(), 1, "header only");
}

#[test]
fn fig8_pair_forces_are_positive() {
    let o = run(&["medium", "--pair", "--symmetric-sweep", "--sweep-points", "5", "--constraint", "fixed-ratio,fixed-position"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&stdout(&o));
    let f = column(&t, "force");
    assert_eq!(f.len(), 10);
    assert!(f.iter().all(|&v| v > 0.0), "{f:?}");
}

#[test]
fn tables_and_reports_repeat() {
    let args = ["force", "--x-grid", "7", "--constraint", "fixed-ratio,fixed-position"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let v = ["validate", "--samples", "2", "--seed", "11"];
    let (a, b) = (run(&v), run(&v));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["energy", "--x-grid", "9", "--Omega", "2pi,4pi"];
    let one = Command::new(env!("CARGO_BIN_EXE_casimir-cavity"))
        .args(args)
        .env("CASIMIR_CAVITY_THREADS", "1")
        .output()
        .unwrap();
    let two = Command::new(env!("CARGO_BIN_EXE_casimir-cavity"))
        .args(args)
        .env("CASIMIR_CAVITY_THREADS", "3")
        .output()
        .unwrap();
    assert!(one.status.success() && two.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn injected_sign_flip_fails_validation() {
    let o = run(&["validate", "--samples", "2", "--strict", "--inject-fault", "fixed-position-sign"]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|n| n.ends_with("/fixed_position")), "{failed:?}");

    let clean = run(&["validate", "--samples", "2", "--strict"]);
    assert_eq!(clean.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["energy", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["energy", "--x-grid", "1"]).status.code(), Some(2));
    assert_eq!(run(&["medium", "--N-max", "3", "--placement", "[0.2,1.5]"]).status.code(), Some(2));
}

#[test]
fn missing_crossing_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smeared.csv");
    let o = run(&["medium", "--N-max", "50", "--coupling", "smeared", "--find-critical", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no sign change"));
    let manifest = std::fs::read_to_string(format!("{}.manifest.json", out.display())).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["results"]["critical/fixed-ratio"]["error"], "NoCrossing");
}

#[test]
fn out_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = run(&["energy", "--x-grid", "5", "--Omega", "4pi", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# casimir-cavity energy "));
    assert_eq!(rows(&csv).len(), 6);

    let manifest = Path::new(&format!("{}.manifest.json", out.display())).to_path_buf();
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "energy");
    assert_eq!(m["parameters"]["Omega"], 4.0 * std::f64::consts::PI);
    assert_eq!(m["outputs"][0], out.to_str().unwrap());
    for key in ["argv", "tool_version", "timestamp"] {
        assert!(!m[key].is_null(), "{key}");
    }
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "Omega = \"4pi\"\nlambda = 1e-3\nboundary = \"neumann\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_cfg = run(&["--config", c, "energy", "--x-grid", "[0.5]"]);
    let from_flags = run(&["energy", "--x-grid", "[0.5]", "--Omega", "4pi", "--lambda", "1e-3", "--boundary", "neumann"]);
    assert!(from_cfg.status.success(), "{}", String::from_utf8_lossy(&from_cfg.stderr));
    assert_eq!(column(&rows(&stdout(&from_cfg)), "energy"), column(&rows(&stdout(&from_flags)), "energy"));

    let overridden = run(&["--config", c, "energy", "--x-grid", "[0.5]", "--lambda", "2e-3"]);
    let e = column(&rows(&stdout(&overridden)), "energy")[0];
    let base = column(&rows(&stdout(&from_cfg)), "energy")[0];
    assert!((e / base - 4.0).abs() < 1e-12);

    std::fs::write(&cfg, "omega = 3\n").unwrap();
    assert_eq!(run(&["--config", c, "energy"]).status.code(), Some(2));
}

#[test]
fn convert_to_newtons() {
    let o = run(&["convert", "--value", "-pi/24", "--unit", "force", "--L-meters", "0.5"]);
    assert!(o.status.success());
    let v = column(&rows(&stdout(&o)), "si_value")[0];
    assert!((v + 1.655_371_5e-26).abs() < 1e-33, "{v}");
}

#[test]
fn replaying_a_manifest_repeats_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("fig10.csv");
    let second = dir.path().join("again.csv");
    let o = run(&["force", "--sweep", "alpha", "--x-d", "0.1", "--constraint", "atom", "--alpha-grid", "11", "--out", first.to_str().unwrap()]);
    assert!(o.status.success());
    let manifest = format!("{}.manifest.json", first.display());
    let again = run(&["--replay", &manifest, "--out", second.to_str().unwrap()]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["force", "--sweep", "alpha", "--x-d", "0.1", "--x-grid", "3"]).status.code(), Some(2));
}
