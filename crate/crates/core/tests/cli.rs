use std::f64::consts::LN_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use thermoform::config::RunConfig;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn defaults_round_trip() {
    let out = Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .arg("--print-defaults")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), RunConfig::default());
}

#[test]
fn config_errors_exit_1() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), "[map]\nfamily = \"logistic\"\n", &["pressure"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(d.path(), "[map]\nfamily = \"doubling\"\nslope = 3\n", &["pressure"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(d.path(), "", &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(d.path(), "", &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn doubling_pressure_csv() {
    let d = TempDir::new().unwrap();
    let cfg = "[map]\nfamily = \"doubling\"\n[potential]\nkind = \"zero\"\n\
               [task.pressure]\ngrid = [-2.0, -1.0, 0.0, 1.0, 2.0]\n";
    let out = run(d.path(), cfg, &["pressure", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&d.path().join("out/pressure.csv"));
    assert_eq!(r.len(), 5);
    for row in &r {
        let t = f(&row[0]);
        assert!((f(&row[1]) - (1.0 - t) * LN_2).abs() < 1e-10);
    }
    assert!(d.path().join("out/pressure.json").exists());
    assert!(d.path().join("out/pressure_report.json").exists());
    let kinks = fs::read_to_string(d.path().join("out/pressure_kinks.txt")).unwrap();
    assert!(!kinks.contains("#kink"));
}

#[test]
fn chebyshev_kink_is_printed() {
    let d = TempDir::new().unwrap();
    let cfg = "[map]\nfamily = \"chebyshev\"\n[potential]\nkind = \"zero\"\n\
               [task.pressure.method]\nmethod = \"periodic_orbit\"\nperiod = 14\n";
    let out = run(d.path(), cfg, &["pressure", "--plot"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let kinks: Vec<&str> = stdout.lines().filter(|l| l.starts_with("#kink")).collect();
    assert_eq!(kinks.len(), 1, "{stdout}");
    let loc: f64 = kinks[0]
        .split_whitespace()
        .find_map(|w| w.strip_prefix("location="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((loc + 1.0).abs() < 0.1, "{loc}");
    assert!(d.path().join("out/pressure.svg").exists());
}

#[test]
fn bernoulli_dimension_spectrum() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), "", &["dimension"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&d.path().join("out/dimension.csv"));
    assert_eq!(r.len(), 41);
    let peak = r.iter().map(|x| f(&x[1])).fold(f64::NEG_INFINITY, f64::max);
    assert!(peak <= 1.0 + 1e-9 && peak > 0.99);
    let par = rows(&d.path().join("out/dimension_parametric.csv"));
    // α = −T'(1) is where the spectrum touches the diagonal
    let a1 = -(0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln()) / LN_2;
    let closest = par
        .iter()
        .map(|x| (f(&x[0]), f(&x[1])))
        .min_by(|a, b| (a.0 - a1).abs().total_cmp(&(b.0 - a1).abs()))
        .unwrap();
    assert!((closest.0 - a1).abs() < 1e-6 && (closest.1 - a1).abs() < 1e-6, "{closest:?}");
}

#[test]
fn doubling_induce_tables() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), "[potential]\nkind = \"zero\"\n", &["induce"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = rows(&d.path().join("out/scheme.csv"));
    assert_eq!(s.len(), 20);
    for row in &s {
        let tau = f(&row[0]);
        assert!((f(&row[4]) - tau * LN_2).abs() < 1e-12);
    }
    let t = rows(&d.path().join("out/truncation.csv"));
    assert_eq!(t.len(), 16);
    for row in &t {
        assert!(f(&row[2]) <= f(&row[3]) + 1e-9);
    }
}

#[test]
fn too_few_starts_is_a_compute_error() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), "[task.empirical]\nstarts = 10\nn = 1000\n", &["empirical"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empirical_is_worker_count_independent() {
    let d1 = TempDir::new().unwrap();
    let d4 = TempDir::new().unwrap();
    let cfg = "[map]\nfamily = \"piecewise_linear\"\nbreakpoints = [0.3333333333333333]\n\
               [task.empirical]\nstarts = 200\nn = 4000\n";
    assert_eq!(run(d1.path(), cfg, &["empirical", "--workers", "1"]).status.code(), Some(0));
    assert_eq!(run(d4.path(), cfg, &["empirical", "--workers", "4"]).status.code(), Some(0));
    let a = fs::read(d1.path().join("out/empirical.csv")).unwrap();
    let b = fs::read(d4.path().join("out/empirical.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cache_does_not_change_results() {
    let d = TempDir::new().unwrap();
    let base = "[map]\nfamily = \"tent\"\nslope = 3.0\n[potential]\nkind = \"zero\"\n\
                [task.pressure.method]\nmethod = \"periodic_orbit\"\nperiod = 8\n";
    let cache = d.path().join("cache");
    let cached = format!("{base}[cache]\nenabled = true\ndir = \"{}\"\n", cache.display());
    let read = |dir: &Path| fs::read(dir.join("out/pressure.csv")).unwrap();

    let plain = TempDir::new().unwrap();
    assert_eq!(run(plain.path(), base, &["pressure"]).status.code(), Some(0));
    let first = TempDir::new().unwrap();
    assert_eq!(run(first.path(), &cached, &["pressure"]).status.code(), Some(0));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    let second = TempDir::new().unwrap();
    assert_eq!(run(second.path(), &cached, &["pressure"]).status.code(), Some(0));
    assert_eq!(read(plain.path()), read(first.path()));
    assert_eq!(read(first.path()), read(second.path()));
}

#[test]
fn sabotaged_verify_exits_3() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), "[task.verify]\nslope_gap_tol = 10.0\n", &["verify"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("C4"), "{stderr}");
    let table = rows(&d.path().join("out/verify.csv"));
    assert_eq!(table.len(), 10);
    let failed: Vec<&str> = table.iter().filter(|r| r[2] == "FAIL").map(|r| r[0].as_str()).collect();
    assert_eq!(failed, ["C4"]);
}
