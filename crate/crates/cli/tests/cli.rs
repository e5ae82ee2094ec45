use std::path::Path;
use std::process::{Command, Output};

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn tool(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-rom"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

const ONE_D: &str = r#"
dimension = 1
[spectral]
range = [1.0, 100.0]
count = 6
[mesh]
data = 800
reference = 200
[medium]
kind = "cubic"
amplitude = 0.2
left = 0.0
peak = 0.5
right = 1.0
[reference]
kind = "zero"
"#;

#[test]
fn duplicate_spectral_points_exit_one_and_name_the_divided_differences() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dimension = 1\n[spectral]\nb = [1.0, 2.0, 2.0]\n[mesh]\ndata = 800\nreference = 200\n",
    );
    let out = tool(&["verify"], &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("spectral.b"), "{stderr}");
    assert!(stderr.contains("b_i - b_j"), "{stderr}");
}

#[test]
fn unknown_subcommand_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_spectral-rom")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{ONE_D}[tolerances]\nhermite_value = 1e-30\n"));
    let out = tool(&["verify"], &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let report = std::fs::read_to_string(dir.path().join("out/verify_report.txt")).unwrap();
    assert!(report.contains("FAIL hermite_value"), "{report}");
    assert!(report.contains("summary = 17 passed, 1 failed"), "{report}");
}

#[test]
fn simulated_data_round_trips_through_the_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONE_D);
    let sim = dir.path().join("sim");
    assert!(tool(&["simulate"], &cfg, &sim).status.success());
    assert!(sim.join("reference_data.csv").exists());

    let from_file = write_config(dir.path(), &format!("{ONE_D}[data]\npath = \"sim/data.csv\"\n"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(tool(&["invert"], &from_file, &a).status.success());
    assert!(tool(&["invert"], &cfg, &b).status.success());
    let read = std::fs::read_to_string(a.join("reconstruction.csv")).unwrap();
    let simulated = std::fs::read_to_string(b.join("reconstruction.csv")).unwrap();
    assert_eq!(read, simulated);
}

#[test]
fn stage_commands_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONE_D);
    let out = dir.path().join("out");
    for cmd in ["rom", "grid", "internal"] {
        let res = tool(&[cmd], &cfg, &out);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
    }
    for file in
        ["rom.csv", "ortho.csv", "grid.csv", "grid_nodes.csv", "basis.csv", "internal_1.csv", "internal_lambdas.csv"]
    {
        assert!(out.join(file).exists(), "{file}");
    }
}

#[test]
fn lambda_flag_overrides_the_evaluation_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), ONE_D);
    let out = dir.path().join("out");
    let res = Command::new(env!("CARGO_BIN_EXE_spectral-rom"))
        .args(["internal", "--lambda", "2.5,7"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success());
    let index = std::fs::read_to_string(out.join("internal_lambdas.csv")).unwrap();
    assert_eq!(index.lines().count(), 3, "{index}");
    assert!(!out.join("internal_3.csv").exists());
}

#[test]
fn repro_2d_reports_both_errors_and_their_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
dimension = 2
[spectral]
range = [3.0, 150.0]
count = 6
[mesh]
data = 24
reference = 12
[sources]
per_side = 1
[rom]
eig_floor = 1e-8
[medium]
kind = "bumps"
bumps = [{ amplitude = 5.0, center = [0.5, 0.5], width = 0.15 }]
[reference]
kind = "zero"
"#,
    );
    let out = dir.path().join("out");
    let res = tool(&["repro-2d"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = std::fs::read_to_string(out.join("repro2d_report.txt")).unwrap();
    for key in ["internal_error = ", "reference_error = ", "ratio = "] {
        assert!(report.contains(key), "{report}");
    }
    assert!(out.join("reconstruction_comparison.csv").exists());
}

#[test]
fn repro_1d_rejects_a_two_dimensional_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dimension = 2\n[spectral]\nrange = [3.0, 150.0]\ncount = 4\n[mesh]\ndata = 8\nreference = 4\n",
    );
    let res = tool(&["repro-1d"], &cfg, &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("dimension"));
}
