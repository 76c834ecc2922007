//! End-to-end tests of the command-line driver: exit codes, emitted files,
//! and the serial determinism contract.

use std::path::Path;
use std::process::{Command, Output};

use varfrac::grid::{Grid1D, GridFunction};

fn varfrac_bin() -> &'static str {
    env!("CARGO_BIN_EXE_varfrac")
}

fn run(args: &[&str]) -> Output {
    Command::new(varfrac_bin())
        .args(args)
        .output()
        .expect("binary should launch")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (signal?)")
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap();
    serde_json::from_str(&text).unwrap()
}

const SMALL_INSTANCE: &str = "grid.m = 81\n";

#[test]
fn validate_default_instance_passes() {
    let out = run(&["validate"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout should be the validation JSON");
    assert_eq!(report["all_ok"], serde_json::Value::Bool(true));
}

#[test]
fn validate_rejects_supercritical_r() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "r.kind = constant\nr.value = 10.0\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "validate"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "grid.m = 81\nbogus = 1\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "validate"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn norm_of_constant_one_on_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "domain.a = 0\ndomain.b = 1\ngrid.m = 101\n\
         p.kind = constant\np.value = 2.0\n\
         s.kind = constant\ns.value = 0.3\n\
         alpha.kind = constant\nalpha.value = 0.5\n\
         r.kind = constant\nr.value = 2.2\n",
    )
    .unwrap();
    let grid = Grid1D::new(0.0, 1.0, 101).unwrap();
    let input = dir.path().join("one.csv");
    GridFunction::from_fn(grid, |_| 1.0, false)
        .write_csv_file(&input)
        .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "norm",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("norm.json"));
    // |Omega| = 1 and p = 2, so the Luxemburg norm of 1 is exactly 1
    let norm = report["lebesgue_norm"].as_f64().unwrap();
    assert!((norm - 1.0).abs() <= 1e-8, "norm = {norm}");
    // a constant has no Gagliardo energy
    assert_eq!(report["gagliardo_modular"].as_f64().unwrap(), 0.0);
}

#[test]
fn norm_of_zero_function_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_INSTANCE).unwrap();
    let grid = Grid1D::new(-1.0, 1.0, 81).unwrap();
    let input = dir.path().join("zero.csv");
    GridFunction::zeros(grid).write_csv_file(&input).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "norm",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("norm.json"));
    for key in [
        "lebesgue_norm",
        "lebesgue_modular",
        "sobolev_norm",
        "gagliardo_modular",
        "diagonal_lp_modular",
    ] {
        assert_eq!(report[key].as_f64().unwrap(), 0.0, "{key} nonzero");
    }
}

#[test]
fn norm_rejects_mismatched_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_INSTANCE).unwrap();
    // CSV sampled on a different grid than the configured one
    let other = Grid1D::new(-1.0, 1.0, 101).unwrap();
    let input = dir.path().join("bad.csv");
    GridFunction::from_fn(other, |x| x, false)
        .write_csv_file(&input)
        .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "norm", "--input", input.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn solve_small_instance_and_serial_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_INSTANCE).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            "1",
            "--out",
            out_dir.to_str().unwrap(),
            "solve",
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["solve_report.json", "u_star.csv", "history.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical serial runs");
    }
    let report = read_json(&out_a.join("solve_report.json"));
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    assert!(report["residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn solve_misconfigured_r_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    // r below the admissible band: no valley, no mountain-pass geometry
    std::fs::write(
        &cfg,
        "grid.m = 81\n\
         p.kind = constant\np.value = 2.5\n\
         s.kind = constant\ns.value = 0.3\n\
         r.kind = constant\nr.value = 1.1\n",
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(exit_code(&out), 2);
    assert!(!out.stderr.is_empty(), "expected a diagnostic on stderr");
}

#[test]
fn solve_non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "grid.m = 81\nsolver.max_outer_iters = 1\nsolver.max_newton_iters = 0\n\
         solver.max_descent_steps = 1\n",
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn embed_emits_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "grid.m = 401\nembed.max_scale = 16\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "embed",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["tail.csv", "annulus.csv", "verdict.csv"] {
        let text = std::fs::read_to_string(out_dir.join(file)).unwrap();
        assert!(
            text.starts_with("n,eps,modular,bound,verdict"),
            "{file} missing the shared table header"
        );
        assert!(text.lines().count() > 1, "{file} has no data rows");
    }
    let summary = read_json(&out_dir.join("embed_summary.json"));
    assert!(summary["verdict"].is_string());
    assert!(summary["persist_threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn history_snapshot_subsampling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_INSTANCE).unwrap();
    let out_full = dir.path().join("full");
    let out_sub = dir.path().join("sub");
    let base = ["--config", cfg.to_str().unwrap(), "--threads", "1"];
    let out = run(&[&base[..], &["--out", out_full.to_str().unwrap(), "solve"]].concat());
    assert_eq!(exit_code(&out), 0);
    let out = run(&[
        &base[..],
        &[
            "--snapshot-every",
            "5",
            "--out",
            out_sub.to_str().unwrap(),
            "solve",
        ],
    ]
    .concat());
    assert_eq!(exit_code(&out), 0);
    let full = std::fs::read_to_string(out_full.join("history.csv")).unwrap();
    let sub = std::fs::read_to_string(out_sub.join("history.csv")).unwrap();
    let full_rows = full.lines().count() - 1;
    let sub_rows = sub.lines().count() - 1;
    assert_eq!(sub_rows, full_rows.div_ceil(5), "subsampled row count");
}
