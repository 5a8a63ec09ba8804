use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SHO: &str = "tau = \"2pi\"\nn = [0, 1]\n[freq_sq]\nconstant = 1.0\n";
const UNSTABLE: &str = "tau = \"pi\"\n[freq_sq]\nconstant = 1.0\ncos = [0.4]\n";
const RESONANT: &str = "tau = \"2pi\"\n[freq_sq]\nconstant = 1.0\n[force]\ncos = [1.0]\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_floquet-phase"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sho_is_defined_with_zero_berry_phase() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sho.toml", SHO);
    let o = run(&["analyze", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"]["defined"], true);
    for row in v["phases"].as_array().unwrap() {
        assert!(row["gamma"].as_f64().unwrap().abs() < 1e-8);
    }
}

#[test]
fn json_floats_carry_seventeen_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sho.toml", SHO);
    let out = dir.path().join("out");
    let o = run(&["analyze", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let tau = text.lines().find(|l| l.trim_start().starts_with("\"tau\"")).unwrap();
    let digits: String =
        tau.split(':').nth(1).unwrap().trim().trim_end_matches(',').split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(digits.len(), 17, "{tau}");
}

#[test]
fn unstable_mathieu_exits_two_with_evidence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", UNSTABLE);
    let o = run(&["analyze", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("Berry phase undefined: unstable homogeneous solution"), "{text}");
    assert!(text.contains("||Phi^k||"));
    assert!(text.contains("evidence: monodromy trace"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unstable homogeneous solution"));
}

#[test]
fn resonant_drive_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "r.toml", RESONANT);
    let o = run(&["analyze", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"]["reason"], "divergent particular solution");
    assert_eq!(v["particular"]["status"], "resonant");
}

#[test]
fn errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad_mass = write(dir.path(), "bad.toml", "tau = 1.0\n[mass]\nconstant = -1.0\n[freq_sq]\nconstant = 1.0\n");
    let unknown = write(dir.path(), "unk.toml", "tau = 1.0\nfrobnicate = 2\n[freq_sq]\nconstant = 1.0\n");
    for cfg in [&bad_mass, &unknown, &dir.path().join("missing.toml")] {
        let o = run(&["analyze", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{}", cfg.display());
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let sho = write(dir.path(), "sho.toml", SHO);
    assert_eq!(run(&["analyze", sho.to_str().unwrap(), "--tol-ode-rel", "0.5"]).status.code(), Some(1));
    assert_eq!(run(&["analyze"]).status.code(), Some(1));
}

#[test]
fn tolerance_overrides_and_seedless_are_accepted() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sho.toml", SHO);
    let o = run(&["--seedless", "analyze", cfg.to_str().unwrap(), "--tol-ode-rel", "1e-11", "--tol-quad", "1e-11"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn version_flag() {
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn psi_tables_are_written() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "tau = \"pi\"\nn = [0, 2]\n[freq_sq]\nconstant = 0.5\ncos = [0.2]\n[output]\npsi_tables = true\npsi_times = 3\npsi_points = 65\n",
    );
    let out = dir.path().join("out");
    let o = run(&["analyze", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("Berry phase defined"));
    let table = fs::read_to_string(out.join("psi_n2.csv")).unwrap();
    assert!(!table.contains('\r'));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("t,x,re,im"));
    assert_eq!(lines.count(), 3 * 65);
}

#[test]
fn scan_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "scan.toml",
        "tau = \"pi\"\n[freq_sq]\nconstant = 0.0\n\
         [scan.param1]\nname = \"a\"\nterm = \"constant\"\nstart = 0.0\nstop = 4.0\nsteps = 9\n\
         [scan.param2]\nname = \"q\"\nterm = \"cos\"\nscale = 2.0\nstart = 0.0\nstop = 0.5\nsteps = 5\n",
    );
    let (first, second) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&first, &second] {
        assert_eq!(run(&["scan", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(0));
    }
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,q,trace,class,alpha_or_rate"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 45);
    // a = 1, q = 0: Φ = −I
    assert!(rows
        .iter()
        .any(|r| r.starts_with("1.0000000000000000e0,0.0000000000000000e0,") && r.contains("boundary-stable")));
}

#[test]
fn scan_without_block_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sho.toml", SHO);
    let o = run(&["scan", cfg.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
