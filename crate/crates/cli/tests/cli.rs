//! End-to-end checks of the command line front-end: exit codes, artifact
//! sets and output determinism.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_faultflow")
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn run_command_emits_artifacts_and_reports_patch_error() {
    let dir = tempdir("run");
    let (code, stdout, stderr) = run(&[
        "run",
        config("patch_test.toml").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {}", stderr);
    for f in [
        "solution.vtk",
        "solution_fault.vtk",
        "solution_fault.csv",
        "solution_fault_jump.csv",
        "summary.csv",
        "manifest.json",
    ] {
        assert!(dir.join(f).exists(), "missing artifact {}", f);
    }
    let err: f64 = stdout
        .lines()
        .find(|l| l.contains("manufactured"))
        .and_then(|l| l.split_whitespace().last())
        .and_then(|v| v.parse().ok())
        .expect("reported error");
    assert!(err < 1e-10, "patch config reported error {}", err);
    let vtk = std::fs::read_to_string(dir.join("solution.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    assert!(vtk.contains("DATASET UNSTRUCTURED_GRID"));
    assert!(vtk.contains("SCALARS pressure double 1"));
    assert!(vtk.contains("VECTORS velocity double"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempdir("bad");
    let bad = dir.join("bad.toml");
    let text = std::fs::read_to_string(config("patch_test.toml")).unwrap();
    std::fs::write(&bad, text.replace("thickness = 1e-2", "thickness = -1e-2")).unwrap();
    let (code, _, stderr) = run(&["run", bad.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 2, "stderr: {}", stderr);
    assert!(stderr.contains("thickness"));
}

#[test]
fn reduced_mode_on_non_matching_grid_exits_2() {
    let dir = tempdir("redu");
    let (code, _, stderr) = run(&[
        "check",
        config("ex41_nonmatching.toml").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--mode",
        "reduced",
    ]);
    assert_eq!(code, 2, "stderr: {}", stderr);
    assert!(stderr.contains("matching"));
}

#[test]
fn check_command_passes_and_detects_killed_stabilization() {
    let dir = tempdir("check");
    let (code, stdout, stderr) = run(&[
        "check",
        config("check_default.toml").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stdout: {} stderr: {}", stdout, stderr);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 6);

    let broken = dir.join("broken.toml");
    let text = std::fs::read_to_string(config("check_default.toml")).unwrap();
    std::fs::write(&broken, format!("{}\n[solver]\nalpha_hat = 0.0\n", text)).unwrap();
    let (code, stdout, _) = run(&[
        "check",
        broken.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
    assert!(stdout.contains("FAIL norm-equivalence"));
}

#[test]
fn identical_runs_produce_identical_csv_bytes() {
    let (a, b) = (tempdir("det_a"), tempdir("det_b"));
    for dir in [&a, &b] {
        let (code, _, stderr) = run(&[
            "run",
            config("ex41_partially_impermeable.toml").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {}", stderr);
    }
    for f in [
        "summary.csv",
        "solution_fault.csv",
        "solution_fault_jump.csv",
        "solution.vtk",
    ] {
        let lhs = std::fs::read(a.join(f)).unwrap();
        let rhs = std::fs::read(b.join(f)).unwrap();
        assert_eq!(lhs, rhs, "{} differs between identical runs", f);
    }
}

#[test]
fn transient_command_emits_per_step_vtk_series() {
    let dir = tempdir("trans");
    let cfg = dir.join("short.toml");
    // Truncate the schedule to three steps to keep the test quick.
    let text = std::fs::read_to_string(config("ex44_neutral.toml")).unwrap();
    let text = truncate_schedule(&text, 3);
    std::fs::write(&cfg, text).unwrap();
    let (code, _, stderr) = run(&[
        "transient",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {}", stderr);
    for step in 0..=3 {
        assert!(dir.join(format!("solution_{:04}.vtk", step)).exists());
    }
    assert!(!dir.join("solution_0004.vtk").exists());
    let series = std::fs::read_to_string(dir.join("series.csv")).unwrap();
    assert_eq!(
        series.lines().count(),
        1 + 4,
        "header plus one row per state"
    );
}

#[test]
fn zero_step_schedule_emits_only_the_initial_state() {
    let dir = tempdir("zero");
    let cfg = dir.join("zero.toml");
    let text = std::fs::read_to_string(config("ex44_neutral.toml")).unwrap();
    std::fs::write(&cfg, truncate_schedule(&text, 0)).unwrap();
    let (code, _, stderr) = run(&[
        "transient",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {}", stderr);
    assert!(dir.join("solution_0000.vtk").exists());
    assert!(!dir.join("solution_0001.vtk").exists());
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempdir("fail");
    let cfg = dir.join("tight.toml");
    let text = std::fs::read_to_string(config("ex42_conductive.toml")).unwrap();
    std::fs::write(
        &cfg,
        format!("{}\n[solver]\nmethod = \"gmres\"\nmax_iter = 2\n", text),
    )
    .unwrap();
    let (code, _, stderr) = run(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 3, "stderr: {}", stderr);
    assert!(stderr.contains("GMRES"));
}

#[test]
fn convergence_on_manufactured_solution_reports_zero_errors() {
    let dir = tempdir("convz");
    let cfg = dir.join("patch_conv.toml");
    let text = std::fs::read_to_string(config("patch_test.toml")).unwrap();
    std::fs::write(
        &cfg,
        format!(
            "{}\n[convergence]\nscales = [1, 2]\nreference_scale = 8\n",
            text
        ),
    )
    .unwrap();
    let (code, _, stderr) = run(&[
        "convergence",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {}", stderr);
    let errors = std::fs::read_to_string(dir.join("errors.csv")).unwrap();
    for line in errors.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(
            cols[2].parse::<f64>().unwrap(),
            0.0,
            "err_matrix row: {}",
            line
        );
        assert_eq!(
            cols[3].parse::<f64>().unwrap(),
            0.0,
            "err_fault row: {}",
            line
        );
    }
}

#[test]
fn solver_flag_selects_gmres() {
    let dir = tempdir("gmres");
    let (code, _, stderr) = run(&[
        "run",
        config("ex42_conductive.toml").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--solver",
        "gmres",
    ]);
    assert_eq!(code, 0, "stderr: {}", stderr);
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(summary.contains("gmres30-ilu0"), "summary: {}", summary);
}

fn truncate_schedule(text: &str, n: usize) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("dt = [") {
            let items: Vec<&str> = rest.trim_end_matches(']').split(',').take(n).collect();
            out.push_str(&format!("dt = [{}]\n", items.join(",")));
        } else if let Some(rest) = line.strip_prefix("offsets = [") {
            let items: Vec<&str> = rest.trim_end_matches(']').split(',').take(n).collect();
            out.push_str(&format!("offsets = [{}]\n", items.join(",")));
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("faultflow-cli-{}-{}", tag, std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).ok();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
