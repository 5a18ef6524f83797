use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hmtlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmtlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(rep: &'a Value, name: &str) -> &'a Value {
    rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn green_default_and_window() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["green", "--window", "1e-5,1e-3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(dir.path());
    assert_eq!(rep["suite"], "green");
    let cg = rep["metrics"]["c_g"].as_f64().unwrap();
    assert!((cg - 2f64.ln() / std::f64::consts::PI).abs() < 1e-8);
    let poh: Vec<&Value> =
        rep["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with("pohozaev")).collect();
    assert_eq!(poh.len(), 5);
    assert!(poh.iter().all(|c| c["passed"] == true && c["threshold"] == 1e-4));
    assert!(check(&rep, "c_g_window_shift")["value"].as_f64().unwrap() <= 1e-5);
    for f in ["green.csv", "pohozaev.csv", "energy_split.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn tiny_grid_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["green", "--n", "8"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n = 8"));
}

#[test]
fn empty_ladder_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["maximize", "--epsilons", ""], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_epsilon_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["maximize", "--epsilons", "4pi"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = hmtlab(&["maximize", "--epsilons", "0"], dir.path());
    assert_eq!(out.status.code(), Some(3), "epsilon = 0 needs dirichlet mode");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 2048\nnodes = 10\n").unwrap();
    let out = hmtlab(&["green", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn dirichlet_mode_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["maximize", "--mode", "dirichlet", "--epsilon", "0"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(dir.path());
    let c = check(&rep, "t0_mt");
    assert!(c["value"].as_f64().unwrap() > 11.68);
    assert_eq!(rep["provenance"]["mode"], "dirichlet");
    assert_eq!(rep["provenance"]["grids"][0]["grading"], "geometric_t");
}

#[test]
fn maximize_ladder_in_any_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["maximize", "--epsilons", "pi,3pi,2pi", "--n", "2048"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let ladder = std::fs::read_to_string(dir.path().join("ladder.csv")).unwrap();
    let t: Vec<f64> = ladder.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(t.len(), 3);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(check(&report(dir.path()), "t_monotone_violations")["value"], 0.0);
}

#[test]
fn certify_default_and_rejected_witness_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = hmtlab(&["certify"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(dir.path());
    assert!(rep["metrics"]["max_v"].as_f64().unwrap() > rep["metrics"]["theta"].as_f64().unwrap());
    assert_eq!(check(&rep, "margin_beta2_ratio_gap")["gating"], false);

    let cfg = dir.path().join("w.cfg");
    std::fs::write(&cfg, "moser_alpha = 2pi\nhardy_lambda = 1\n").unwrap();
    let sub = dir.path().join("w");
    let out = hmtlab(&["certify", "--config", cfg.to_str().unwrap()], &sub);
    assert_eq!(out.status.code(), Some(1));
    let rep = report(&sub);
    assert_eq!(check(&rep, "moser_alpha_supercritical")["passed"], false);
    assert_eq!(check(&rep, "hardy_bounded_below")["passed"], true);
}

#[test]
fn rearrange_check_is_deterministic_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["rearrange-check", "--n", "1024", "--seed", "11"];
    let cfg_args = |d: &Path| {
        let cfg = d.join("p.cfg");
        std::fs::write(&cfg, "profiles = 12\n").unwrap();
        cfg
    };
    let (ca, cb) = (cfg_args(a.path()), cfg_args(b.path()));
    let run = |d: &Path, cfg: &Path| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(["--config", cfg.to_str().unwrap()]);
        hmtlab(&v, d)
    };
    assert_eq!(run(a.path(), &ca).status.code(), Some(0));
    assert_eq!(run(b.path(), &cb).status.code(), Some(0));
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert_eq!(ra["checks"], rb["checks"]);
    assert_eq!(ra["provenance"]["seed"], 11);
    let rows = std::fs::read_to_string(a.path().join("rearrangement.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 12);
}

#[test]
fn all_writes_one_directory_per_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("all.cfg");
    std::fs::write(&cfg, "profiles = 6\nepsilons = 3pi\n").unwrap();
    let out = hmtlab(&["all", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(dir.path());
    assert_eq!(rep["passed"], true);
    let names: Vec<&str> = rep["suites"].as_array().unwrap().iter().map(|s| s["suite"].as_str().unwrap()).collect();
    assert_eq!(names, ["green", "maximize", "certify", "rearrange-check"]);
    for n in names {
        assert!(dir.path().join(n).join("report.json").exists());
    }
}
