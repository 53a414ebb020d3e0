// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use kerr_wigner::numeric::binomial;
use kerr_wigner::DensityMatrix;
use num_complex::Complex64;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerr-wigner"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn density(out: &Output) -> DensityMatrix {
    DensityMatrix::from_text(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn pn_column(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect()
}

/// (re, im, w) rows of a grid CSV.
fn grid_rows(path: &Path) -> Vec<(f64, f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

fn grid_min(path: &Path) -> f64 {
    grid_rows(path).iter().map(|r| r.2).fold(f64::INFINITY, f64::min)
}

#[test]
fn evolve_coherent_revives() {
    let out = run_ok(&[
        "evolve",
        "--coherent",
        "2+0i",
        "--chi",
        "1",
        "--gamma",
        "0",
        "--t",
        "6.283185307179586",
    ]);
    let rho = density(&out);
    let initial = DensityMatrix::coherent(Complex64::new(2.0, 0.0), rho.n_cut());
    assert!(rho.max_abs_diff(&initial) < 1e-10);
    let diag = String::from_utf8(out.stderr).unwrap();
    assert!(diag.contains("trace = ") && diag.contains("min eigenvalue = ") && diag.contains("truncation tail = "));
}

#[test]
fn evolve_fock_gives_binomial_diagonal() {
    let rho = density(&run_ok(&[
        "evolve", "--fock", "3", "--gamma", "0.5", "--t", "0.5", "--chi", "7",
    ]));
    let eta = (-0.5f64).exp();
    for m in 0..rho.n_cut() {
        for n in 0..rho.n_cut() {
            let want = if m == n && m <= 3 {
                binomial(3, m) * eta.powi(m as i32) * (1.0 - eta).powi(3 - m as i32)
            } else {
                0.0
            };
            assert!((rho.get(m, n) - want).norm() < 1e-14, "({m}, {n})");
        }
    }
}

#[test]
fn evolve_vacuum_is_unchanged() {
    let rho = density(&run_ok(&[
        "evolve", "--fock", "0", "--chi", "2", "--gamma", "0.7", "--t", "3", "--n-cut", "6",
    ]));
    assert!(rho.max_abs_diff(&DensityMatrix::vacuum(6)) < 1e-15);
}

#[test]
fn evolve_round_trips_through_density_file() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("half.txt");
    run_ok(&[
        "evolve",
        "--coherent",
        "1-0.5i",
        "--chi",
        "0.7",
        "--gamma",
        "0.2",
        "--t",
        "0.4",
        "-o",
        first.to_str().unwrap(),
    ]);
    let stepped = run_ok(&[
        "evolve",
        "--density",
        first.to_str().unwrap(),
        "--chi",
        "0.7",
        "--gamma",
        "0.2",
        "--t",
        "0.6",
    ]);
    let stepped = density(&stepped);
    let direct = density(&run_ok(&[
        "evolve",
        "--coherent",
        "1-0.5i",
        "--chi",
        "0.7",
        "--gamma",
        "0.2",
        "--t",
        "1",
        "--n-cut",
        &stepped.n_cut().to_string(),
    ]));
    assert!(stepped.max_abs_diff(&direct) < 1e-12);
}

#[test]
fn wigner_grid_has_negative_fringes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    run_ok(&[
        "wigner",
        "--coherent",
        "2",
        "--chi-t",
        "0.2",
        "--gamma",
        "0",
        "--window",
        "4",
        "--res",
        "201",
        "-o",
        path.to_str().unwrap(),
    ]);
    let rows = grid_rows(&path);
    assert_eq!(rows.len(), 201 * 201);
    assert_eq!(rows[0].0, -4.0);
    assert_eq!(rows[1].1, -3.96);
    assert!(grid_min(&path) < -0.1);
    let meta = std::fs::read_to_string(dir.path().join("f.meta")).unwrap();
    assert!(meta.contains("source=coherent:2+0i") && meta.contains("integral_convention=half"));
}

#[test]
fn wigner_fock_ignores_kerr() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run_ok(&[
        "wigner",
        "--fock",
        "1",
        "--gamma",
        "0",
        "--chi",
        "5",
        "--t",
        "1",
        "--res",
        "41",
        "-o",
        a.to_str().unwrap(),
    ]);
    run_ok(&[
        "wigner",
        "--fock",
        "1",
        "--t",
        "0",
        "--res",
        "41",
        "-o",
        b.to_str().unwrap(),
    ]);
    for (x, y) in grid_rows(&a).iter().zip(grid_rows(&b)) {
        assert_eq!((x.0, x.1), (y.0, y.1));
        assert!((x.2 - y.2).abs() < 1e-13);
    }
}

#[test]
fn wigner_vacuum_is_gaussian() {
    let out = run_ok(&["wigner", "--coherent", "0", "--t", "0", "--window", "2", "--res", "21"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let want = (-2.0 * (v[0] * v[0] + v[1] * v[1])).exp() / std::f64::consts::PI;
        assert!((v[2] - want).abs() < 1e-15);
    }
}

#[test]
fn wigner_is_deterministic() {
    let args = [
        "wigner",
        "--coherent",
        "1.5+0.5i",
        "--chi",
        "0.3",
        "--gamma",
        "0.1",
        "--t",
        "0.5",
        "--res",
        "31",
    ];
    assert_eq!(run_ok(&args).stdout, run_ok(&args).stdout);
}

#[test]
fn pn_columns_identical_across_chi() {
    let a = run_ok(&["pn", "--coherent", "1.5", "--gamma", "0.3", "--t", "0.2", "--chi", "0"]);
    let b = run_ok(&["pn", "--coherent", "1.5", "--gamma", "0.3", "--t", "0.2", "--chi", "2"]);
    assert_eq!(pn_column(&a), pn_column(&b));
    let c = run_ok(&[
        "pn",
        "--coherent",
        "1.5",
        "--gamma",
        "0.3",
        "--t",
        "0.2",
        "--chi",
        "2",
        "--method",
        "overlap",
        "--n-max",
        "10",
    ]);
    for (x, y) in pn_column(&a).iter().zip(pn_column(&c)) {
        assert!((x.parse::<f64>().unwrap() - y.parse::<f64>().unwrap()).abs() < 1e-10);
    }
}

#[test]
fn pn_fock_binomial_and_vacuum() {
    let p: Vec<f64> = pn_column(&run_ok(&["pn", "--fock", "4", "--gamma", "0.25", "--t", "1"]))
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let eta = (-0.5f64).exp();
    for (m, got) in p.iter().enumerate() {
        let want = if m <= 4 {
            binomial(4, m) * eta.powi(m as i32) * (1.0 - eta).powi(4 - m as i32)
        } else {
            0.0
        };
        assert!((got - want).abs() < 1e-14, "p({m})");
    }
    let p = pn_column(&run_ok(&[
        "pn", "--fock", "0", "--chi", "1", "--gamma", "2", "--t", "1",
    ]));
    assert_eq!(p[0].parse::<f64>().unwrap(), 1.0);
    assert!(p[1..].iter().all(|s| s.parse::<f64>().unwrap() == 0.0));
}

#[test]
fn fig1_writes_six_panels() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["fig1", "--res", "41", "-o", dir.path().to_str().unwrap()]);
    for label in ["a", "b", "c", "d", "e", "f"] {
        assert!(dir.path().join(format!("fig1{label}.csv")).exists());
        assert!(dir.path().join(format!("fig1{label}.meta")).exists());
    }
    assert!(grid_min(&dir.path().join("fig1a.csv")) >= 0.0);
    assert!(grid_min(&dir.path().join("fig1e.csv")) < 0.0);
}

#[test]
fn verify_subset_passes() {
    let out = run_ok(&["verify", "--criteria", "2,7"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert!(text.contains("2 passed, 0 failed"));
    assert_eq!(run(&["verify", "--criteria", "11"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    // mixed parameter forms, unknown flag, bad amplitude: validation
    assert_eq!(
        run(&["wigner", "--fock", "1", "--chi-t", "0.1", "--t", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["wigner", "--fock", "1", "--chi", "1", "--chi-t", "0.1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["evolve", "--fock", "1", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["evolve", "--coherent", "2 + i"]).status.code(), Some(1));
    assert_eq!(run(&["evolve"]).status.code(), Some(1));
    assert_eq!(run(&["fig1", "--fock", "2"]).status.code(), Some(1));
    // truncated loss sum: convergence
    assert_eq!(
        run(&["evolve", "--coherent", "2", "--gamma", "1", "--t", "1", "--l-max", "1"])
            .status
            .code(),
        Some(2)
    );
    // missing input file: I/O
    let out = run(&["evolve", "--density", "/nonexistent/rho.txt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("/nonexistent/rho.txt"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# binomial run\ncommand = pn\nfock = 4\ngamma-t = 0.25  # unit time\nchi = 3\n",
    )
    .unwrap();
    let from_file = pn_column(&run_ok(&["pn", "--config", cfg.to_str().unwrap()]));
    let direct = pn_column(&run_ok(&["pn", "--fock", "4", "--gamma", "0.25", "--t", "1"]));
    assert_eq!(from_file, direct);
    let overridden = pn_column(&run_ok(&["pn", "--config", cfg.to_str().unwrap(), "--fock", "2"]));
    assert_eq!(
        overridden,
        pn_column(&run_ok(&["pn", "--fock", "2", "--gamma", "0.25"]))
    );
    assert_eq!(
        run(&["wigner", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );
    std::fs::write(&cfg, "fock 4\n").unwrap();
    assert_eq!(run(&["pn", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}
