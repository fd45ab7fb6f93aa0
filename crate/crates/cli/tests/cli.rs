//! End-to-end runs of the `hsnum` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hsnum::asymptotics::{RayDirection, RaySamples};
use hsnum::closed_forms::{sharp_constant, Extremal, ExtremalParams};
use hsnum::cylinder_grid::{read_csv, to_csv_string};
use serde_json::Value;
use tempfile::TempDir;

fn hsnum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsnum")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn entry(summary: &Value, key: &str) -> Value {
    summary["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["key"] == key)
        .unwrap_or_else(|| panic!("no entry {key}"))["value"]
        .clone()
}

fn num(summary: &Value, key: &str) -> f64 {
    entry(summary, key).as_f64().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_reports_oracle_and_printed_route() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["constant", "--n", "3", "--k", "2", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sm = summary(tmp.path());
    assert_eq!(sm["status"], "ok");
    assert!((num(&sm, "K") - 0.670938266965).abs() < 1e-10);
    assert!((num(&sm, "E_min") - 2.221441469079).abs() < 1e-10);
    let disc = num(&sm, "rel_discrepancy_printed_first_line");
    assert!(disc > 1.0, "printed route discrepancy {disc}");
    let manifest = fs::read_to_string(tmp.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("subcommand = constant"));
    assert!(manifest.contains("n = 3") && manifest.contains("k = 2"));
}

#[test]
fn verify_prop4_prints_residual_line() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["verify-prop4", "--a", "1", "--b", "1", "--alpha", "1", "--beta", "1", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("residual max-norm"));
    let sm = summary(tmp.path());
    assert!(num(&sm, "phi_residual") <= 1e-6);
    assert!(num(&sm, "v_residual") <= 1e-6);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&hsnum(&["constant", "--n", "two", "--k", "2"])), 1);
    assert_eq!(code(&hsnum(&["constant", "--n", "3"])), 1);
    assert_eq!(code(&hsnum(&["constant", "--n", "3", "--k", "2", "--bogus", "1"])), 1);
    assert_eq!(code(&hsnum(&["frobnicate"])), 1);
    assert_eq!(code(&hsnum(&[])), 1);
    assert_eq!(code(&hsnum(&["minimize", "--init", "random"])), 1);
    assert_eq!(code(&hsnum(&["--help"])), 0);
}

#[test]
fn domain_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["exponents", "--n", "3", "--k", "2", "--s", "2.5", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exponents:"));
    let out = hsnum(&["minimize", "--s", "2", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 2);
    let out = hsnum(&["quadrature", "--identity", "beta-radial", "--k", "3", "--a", "1", "--s", "0.5", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn minimize_with_one_iteration_exits_3_and_keeps_partial_output() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["minimize", "--nodes", "24", "--extent", "8", "--max-iters", "1", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("minimizer:"));
    let sm = summary(tmp.path());
    assert_eq!(sm["status"], "not-converged");
    assert_eq!(entry(&sm, "converged"), Value::Bool(false));
    assert!(tmp.path().join("history.csv").exists());
    assert!(tmp.path().join("minimizer.csv").exists());
}

#[test]
fn minimize_outputs_round_trip_and_manifest_reproduces() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let out = hsnum(&["minimize", "--nodes", "32", "--extent", "10", "--out", s(&first)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sm = summary(&first);
    assert!(num(&sm, "max_constraint_defect") <= 1e-10);
    assert!(num(&sm, "rel_err_K") < 0.1);

    let dump = fs::read_to_string(first.join("minimizer.csv")).unwrap();
    let grid = read_csv(&first.join("minimizer.csv")).unwrap();
    assert_eq!(to_csv_string(&grid), dump);

    let history = fs::read_to_string(first.join("history.csv")).unwrap();
    let energies: Vec<f64> = history.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert_eq!(*energies.last().unwrap(), num(&sm, "E_min"));

    let second = tmp.path().join("second");
    let out = hsnum(&["minimize", "--config", s(&first.join("manifest.txt")), "--out", s(&second)]);
    assert_eq!(code(&out), 0);
    assert_eq!(sm, summary(&second));
    assert_eq!(dump, fs::read_to_string(second.join("minimizer.csv")).unwrap());
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# test run\nnodes = 24\nextent = 8\nstep = 0.5\nmax-iters = 1\n").unwrap();
    let out = hsnum(&["minimize", "--config", s(&cfg), "--step", "0.01", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 3);
    let manifest = fs::read_to_string(tmp.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("step = 0.01"));
    assert!(manifest.contains("nodes = 24"));

    fs::write(&cfg, "nodes = 24\nwidth = 3\n").unwrap();
    assert_eq!(code(&hsnum(&["minimize", "--config", s(&cfg)])), 1);
}

#[test]
fn quadrature_matches_closed_forms() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["quadrature", "--n", "3", "--k", "2", "--m", "2", "--s", "1", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0);
    let sm = summary(tmp.path());
    assert!((num(&sm, "closed_form") - std::f64::consts::PI.powi(2)).abs() < 1e-12);
    assert!(num(&sm, "relative_error") <= 1e-8);
    let table = fs::read_to_string(tmp.path().join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);

    let out = hsnum(&["quadrature", "--identity", "newtonian-ball", "--n", "4", "--k", "2", "--z", "0.3,0.4,1,0", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0);
    assert!(num(&summary(tmp.path()), "relative_error") <= 1e-8);
}

#[test]
fn exponents_report_identities() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["exponents", "--n", "3", "--k", "2", "--s", "1", "--t", "0.5", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0);
    let sm = summary(tmp.path());
    assert_eq!(num(&sm, "p_star_s"), 4.0);
    assert!(num(&sm, "identity_residual") <= 1e-12);
    assert!((num(&sm, "kappa_t") - 2.5).abs() < 1e-12);
}

#[test]
fn verify_extremal_refinement_table() {
    let tmp = TempDir::new().unwrap();
    let out = hsnum(&["verify-extremal", "--levels", "128,256,512", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0);
    let table = fs::read_to_string(tmp.path().join("refinement.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let sm = summary(tmp.path());
    assert!((num(&sm, "ratio_512") - 4.0).abs() < 0.5);
}

#[test]
fn decay_fit_on_extremal_rays() {
    let tmp = TempDir::new().unwrap();
    let sc = sharp_constant(3, 2).unwrap();
    let ext = Extremal::new(ExtremalParams::centered(3, 2, 1.0).unwrap(), &sc).unwrap();
    let radii = hsnum::asymptotics::log_radii(1e2, 1e4, 21);
    let rays = RaySamples::from_fn(RayDirection::RAxis, &radii, |x, y| ext.profile(x, y)).unwrap();
    let input = tmp.path().join("rays.in.csv");
    fs::write(&input, rays.to_csv_string()).unwrap();
    let out = hsnum(&["decay-fit", "--input", s(&input), "--n", "3", "--tol", "0.05", "--out", s(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("verdict: PASS"));
    let sm = summary(tmp.path());
    assert_eq!(entry(&sm, "pass"), Value::Bool(true));
    assert!((num(&sm, "exponent") - 1.0).abs() <= 0.05);
    // rays without n are a usage error
    assert_eq!(code(&hsnum(&["decay-fit", "--input", s(&input), "--out", s(tmp.path())])), 1);
}

#[test]
fn plot_renders_svg_from_every_input_kind() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path().join("run");
    assert_eq!(code(&hsnum(&["minimize", "--nodes", "24", "--extent", "8", "--out", s(&run)])), 0);
    for (input, axes) in [("minimizer.csv", "auto"), ("history.csv", "log-y"), ("minimizer.csv", "linear")] {
        let target = format!("{input}.{axes}.svg");
        let out = hsnum(&["plot", "--input", s(&run.join(input)), "--axes", axes, "--output", &target, "--out", s(tmp.path())]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let svg = fs::read_to_string(tmp.path().join(&target)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
    let missing = hsnum(&["plot", "--input", s(&tmp.path().join("nope.csv")), "--out", s(tmp.path())]);
    assert_eq!(code(&missing), 4);
}
