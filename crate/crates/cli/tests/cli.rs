use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEISENBERG: &str = r#"
name = "h"
preset = "heisenberg_example"
eps_list = [0.4]
n_min = 1
n_max = 6
seed = 3

[pair]
k_lo = [-0.1, -0.1, -0.1]
k_hi = [0.1, 0.1, 0.1]
q_lo = [-1.0, -1.0, -1.0]
q_hi = [1.0, 1.0, 1.0]
rho = 0.1
"#;

const EUCLID: &str = r#"
name = "e"
preset = "euclid_ab"
eps_list = [0.1, 0.05]
n_min = 4
n_max = 9
tol_lower = 0.15
exact_check = [1, 4]

[pair]
k_lo = [-0.5]
k_hi = [0.5]
q_lo = [-1.0]
q_hi = [1.0]
rho = 0.01
"#;

fn lininv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lininv"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn passing_run_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "h.toml", HEISENBERG);
    let out = tmp.path().join("out");
    let o = lininv(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS sandwich"), "{stdout}");
    let names: Vec<String> = files(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["entropy.csv", "fits.csv", "plot_eps0.4.dat", "plot_lower_bound.dat", "summary.json"]);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "e.toml", EUCLID);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = lininv(&["run", &cfg, "--out", dir.to_str().unwrap(), "--seed", "11"]);
        assert!(o.status.code().is_some_and(|c| c <= 1));
    }
    assert_eq!(files(&a), files(&b));
    let c = tmp.path().join("c");
    lininv(&["run", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]);
    let summary = |d: &Path| fs::read_to_string(d.join("summary.json")).unwrap();
    assert_ne!(summary(&a), summary(&c));
    assert_eq!(fs::read(a.join("entropy.csv")).unwrap(), fs::read(c.join("entropy.csv")).unwrap());
}

#[test]
fn failing_verdict_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "e.toml", EUCLID);
    let out = tmp.path().join("out");
    let o = lininv(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL sandwich"));
    assert!(out.join("summary.json").exists());
}

#[test]
fn validation_and_budget_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", &HEISENBERG.replace("rho = 0.1", "rho = 0.2"));
    let o = lininv(&["run", &bad, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pair.rho") && err.contains("line 14"), "{err}");

    let cfg = write(tmp.path(), "h.toml", HEISENBERG);
    let o = lininv(&["run", &cfg, "--budget", "10", "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget of 10 exceeded"));

    let o = lininv(&["run", &cfg, "--log-base", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lininv(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overrides_change_mode_and_base() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "h.toml", HEISENBERG);
    let out = tmp.path().join("out");
    let o = lininv(&["run", &cfg, "--out", out.to_str().unwrap(), "--mode", "exact", "--log-base", "e"]);
    assert_eq!(o.status.code(), Some(0));
    let fits = fs::read_to_string(out.join("fits.csv")).unwrap();
    assert!(fits.lines().nth(1).unwrap().starts_with("spanning,exact,0.4,e,"), "{fits}");
}

#[test]
fn presets_list_and_show() {
    let o = lininv(&["presets", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8_lossy(&o.stdout);
    for name in ["euclid_ab", "aff_example", "heisenberg_example", "torus_cat"] {
        assert!(s.contains(name));
    }
    let o = lininv(&["presets", "show", "torus_cat"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("stable subgroup closed: false"), "{s}");
    assert!(s.contains("1.388"), "{s}");
    let o = lininv(&["presets", "show", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
