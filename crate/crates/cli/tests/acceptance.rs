//! CLI-level acceptance: end-to-end pipeline composition and byte-level
//! determinism of the compare command (criterion 8), plus exit-code checks.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_raysep")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn acceptance_08_pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let config = scenario("simulation_2db.toml");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "--seed",
            "0",
            "--deterministic",
            "compare",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "compare failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let mut compared = 0;
    for name in ["double4.csv", "double2.csv", "smusical.csv", "report.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    println!(
        "ACCEPTANCE 8 (pipeline determinism): PASS — two compare runs produced byte-identical grid and report files ({compared} files)"
    );
}

#[test]
fn full_pipeline_composes_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("demo.spc");
    let grid = dir.path().join("demo.csv");
    let config = scenario("demo_small.toml");
    let cfg_str = config.to_str().unwrap();

    let output = run(&["synth", "--config", cfg_str, "--out", cube.to_str().unwrap()]);
    assert!(output.status.success());

    let output = run(&[
        "estimate",
        "--config",
        cfg_str,
        "--cube",
        cube.to_str().unwrap(),
        "--method",
        "double4",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let output = run(&[
        "peaks",
        "--grid",
        grid.to_str().unwrap(),
        "--count",
        "2",
        "--truth",
        cfg_str,
        "--tolerance",
        "1",
    ]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("double4 hits 2/2"), "peaks output:\n{stdout}");
}

#[test]
fn method_override_and_config_default() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("demo.spc");
    let config = scenario("demo_small.toml");
    let cfg_str = config.to_str().unwrap();
    assert!(run(&["synth", "--config", cfg_str, "--out", cube.to_str().unwrap()])
        .status
        .success());
    // No --method: falls back to the scenario's estimator.
    let grid = dir.path().join("default.csv");
    let output = run(&[
        "estimate",
        "--config",
        cfg_str,
        "--cube",
        cube.to_str().unwrap(),
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&grid).unwrap();
    assert!(text.contains("# estimator = double4"));

    let grid2 = dir.path().join("smusical.csv");
    let output = run(&[
        "estimate",
        "--config",
        cfg_str,
        "--cube",
        cube.to_str().unwrap(),
        "--method",
        "smusical",
        "--out",
        grid2.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&grid2).unwrap();
    assert!(text.contains("# estimator = smusical"));
}

#[test]
fn error_exit_codes_are_categorized() {
    let dir = tempfile::tempdir().unwrap();

    // Missing config file: io error.
    let output = run(&["synth", "--config", "/nonexistent/cfg.toml", "--out", "/tmp/x.spc"]);
    assert_eq!(output.status.code(), Some(5));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.starts_with("error[io]"), "{err}");

    // Malformed config: config error.
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "seed = \"zero\"\n").unwrap();
    let output = run(&["synth", "--config", bad_cfg.to_str().unwrap(), "--out", "/tmp/x.spc"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error[config]"));

    // Corrupt cube: format error.
    let bad_cube = dir.path().join("bad.spc");
    std::fs::write(&bad_cube, b"NOPE............").unwrap();
    let grid = dir.path().join("out.csv");
    let config = scenario("demo_small.toml");
    let output = run(&[
        "estimate",
        "--config",
        config.to_str().unwrap(),
        "--cube",
        bad_cube.to_str().unwrap(),
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error[format]"));

    // Unknown method: validation error.
    let output = run(&[
        "estimate",
        "--config",
        config.to_str().unwrap(),
        "--cube",
        bad_cube.to_str().unwrap(),
        "--method",
        "capon",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error[validation]"));
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = scenario("demo_small.toml");
    let cfg_str = config.to_str().unwrap();
    let out_1 = dir.path().join("t1");
    let out_2 = dir.path().join("t2");
    for (out, threads) in [(&out_1, "1"), (&out_2, "2")] {
        let output = run(&[
            "--threads",
            threads,
            "compare",
            "--config",
            cfg_str,
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    for name in ["double4.csv", "report.csv"] {
        assert_eq!(
            std::fs::read(out_1.join(name)).unwrap(),
            std::fs::read(out_2.join(name)).unwrap(),
            "{name} differs across thread counts"
        );
    }
}
