use std::path::Path;
use std::process::{Command, Output};

use retirement_core::csv_io::{policy_from_table, CsvTable};
use tempfile::TempDir;

fn retirement(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retirement")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(table: &CsvTable, name: &str) -> Vec<f64> {
    table.f64_column(name).unwrap()
}

#[test]
fn validate_baseline_passes() {
    let o = retirement(&["validate"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("theta        0.2"));
    assert!(text.contains("kappa        0.04"));
    assert_eq!(text.matches("PASS").count(), 3);
    assert!(!text.contains("FAIL"));
}

#[test]
fn validate_flags_violations() {
    let dir = TempDir::new().unwrap();
    let params = retirement_core::ModelParams {
        sigma_y: 0.1,
        ..retirement_core::ModelParams::baseline()
    };
    let cfg = write_config(dir.path(), &format!("[params]\n{}", params.to_toml_string()));
    let o = retirement(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    let o = retirement(&["validate", "--config", &cfg, "--allow-assumption-override"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ASSUMPTION-OVERRIDE"));
}

#[test]
fn assumption_failures_block_solves_unless_overridden() {
    let dir = TempDir::new().unwrap();
    // too impatient for gamma = 0.5; the boundary still exists
    let params = retirement_core::ModelParams {
        gamma: 0.5,
        beta: 0.01,
        ..retirement_core::ModelParams::baseline()
    };
    let cfg = write_config(
        dir.path(),
        &format!("solver.n_steps = 20\n[params]\n{}", params.to_toml_string()),
    );
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let o = retirement(&["boundary", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model-core"));
    let o = retirement(&["boundary", "--config", &cfg, "--out", out, "--allow-assumption-override"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/boundary.csv")).unwrap();
    assert!(text.contains("# watermark=ASSUMPTION-OVERRIDE\n"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "solver.n_step = 50\n");
    let o = retirement(&["boundary", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
}

#[test]
fn larger_k_retires_earlier() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "solver.n_steps = 50\nprimal.w_over_b_hat = [0.5, 1.2]\n[sweep]\naxis = \"K\"\nvalues = [1.5, 2.0, 3.0]\n",
    );
    let out = dir.path().join("out");
    let o = retirement(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CsvTable::read_from(&out.join("sweep_K.csv")).unwrap();
    let b_hat = column(&table, "b_hat");
    assert_eq!(b_hat.len(), 3);
    assert!(b_hat[0] > b_hat[1] && b_hat[1] > b_hat[2], "{b_hat:?}");
    // each run carries its own fingerprint
    let fps: Vec<&String> = table.rows.iter().map(|r| &r[1]).collect();
    assert!(fps[0] != fps[1] && fps[1] != fps[2]);
    for i in 0..3 {
        assert!(out.join(format!("boundary_K_{i:02}.csv")).exists());
        assert!(out.join(format!("policy_K_{i:02}.csv")).exists());
    }
}

#[test]
fn constant_mortality_raises_the_wealth_boundary_everywhere() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "solver.n_steps = 50\nprimal.t = [0.0, 2.5, 5.0, 7.5, 9.5]\nprimal.w_over_b_hat = [1.0]\n\
         [sweep]\naxis = \"a\"\nvalues = [0.0, 0.09523809523809523]\n",
    );
    let out = dir.path().join("out");
    let o = retirement(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let load = |i: usize| {
        let t = CsvTable::read_from(&out.join(format!("policy_a_{i:02}.csv"))).unwrap();
        policy_from_table(&t).unwrap()
    };
    let (flat, aging) = (load(0), load(1));
    assert_eq!(flat.len(), 5);
    for (f, g) in flat.iter().zip(&aging) {
        assert_eq!(f.state.t, g.state.t);
        assert!(f.policy.b_hat > g.policy.b_hat, "t = {}", f.state.t);
    }
}

#[test]
fn reruns_are_byte_identical_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 9\nsolver.n_steps = 40\nprimal.t = [0.0, 5.0]\n\
         [sweep]\naxis = \"y\"\nvalues = [0.5, 1.0]\n\
         [oracle]\nn_time = 100\nn_space = 200\nmax_rel_gap = 0.05\nmc_paths = 2000\n",
    );
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        for cmd in ["boundary", "primal", "oracle", "sweep"] {
            let o = retirement(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()]);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        runs.push(out);
    }
    let mut names: Vec<_> = std::fs::read_dir(&runs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7, "{names:?}");
    for name in names {
        let first = std::fs::read_to_string(runs[0].join(&name)).unwrap();
        let second = std::fs::read_to_string(runs[1].join(&name)).unwrap();
        assert_eq!(first, second, "{name:?}");
        assert!(first.starts_with("# fingerprint="), "{name:?}");
        assert_eq!(CsvTable::parse(&first).unwrap().to_csv_string().unwrap(), first);
    }
    let oracle = CsvTable::read_from(&runs[0].join("oracle.csv")).unwrap();
    assert!(oracle.meta("mc_stderr").is_some());
}

#[test]
fn seed_flag_changes_only_simulation_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "solver.n_steps = 40\n[oracle]\nn_time = 100\nn_space = 200\nmax_rel_gap = 0.05\nmc_paths = 2000\n");
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        let o = retirement(&["oracle", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        CsvTable::read_from(&out.join("oracle.csv")).unwrap()
    };
    let (a, b) = (read("1"), read("2"));
    assert_eq!(a.rows, b.rows);
    assert_ne!(a.meta("mc_mean"), b.meta("mc_mean"));
}
