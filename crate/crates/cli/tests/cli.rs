use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn epdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epdiff"))
        .args(args)
        .env_remove("EPDIFF_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn config(amplitude: f64, scheme: &str, extra_solver: &str) -> String {
    format!(
        r#"scheme = "{scheme}"
dt = 0.01
t_final = 0.1

[grid]
n_modes = 16
alpha = 1.0

[scenario]
kind = "sine"
amplitude = {amplitude:?}

[solver]
{extra_solver}

[output]
stride = 2
"#
    )
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, text: &str, out: &str) -> Output {
    let cfg = write_config(dir, text);
    let out_dir = dir.join(out);
    epdiff(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()])
}

#[test]
fn run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &config(0.2, "average", ""), "out");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for f in ["trajectory.csv", "energy.csv", "metadata.json", "plot.py"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let traj = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let header: Vec<&str> = traj.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 33);
    assert_eq!(header[0], "t");
    assert_eq!(header[1], "u_0");
    // t = 0 plus every second of 10 steps.
    assert_eq!(traj.lines().count(), 1 + 6);

    let energy = fs::read_to_string(dir.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().next().unwrap(), "t,energy,iterations,residual");
    assert_eq!(energy.lines().count(), 1 + 11);

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["config"]["scheme"], "average");
    assert!(meta["metadata"]["code_version"].is_string());
}

#[test]
fn zero_initial_data_has_zero_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &config(0.0, "implicit", ""), "out");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let energy = fs::read_to_string(tmp.path().join("out/energy.csv")).unwrap();
    for line in energy.lines().skip(1) {
        let e: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(e, 0.0);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let text = config(0.3, "explicit", "");
    assert_eq!(code(&run_in(tmp.path(), &text, "a")), 0);
    assert_eq!(code(&run_in(tmp.path(), &text, "b")), 0);
    for f in ["trajectory.csv", "energy.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn invalid_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &config(0.1, "average", "").replace("dt = 0.01", "dt = -0.01"), "out");
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));

    let out = run_in(tmp.path(), &format!("{}\nbogus = 1\n", config(0.1, "average", "")), "out");
    assert_eq!(code(&out), 1);

    let out = epdiff(&["run"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn midpoint_scheme_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &config(0.1, "midpoint", ""), "out");
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("third-order terms in U"));

    let out = epdiff(&["run", "--preset", "smooth-convergence", "--scheme", "midpoint"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn solver_failure_exits_2_and_keeps_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &config(0.5, "average", "max_iterations = 1"), "out");
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("out/energy.csv").exists());
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let out = run_in(tmp.path(), &config(0.1, "average", ""), "blocker/out");
    assert_eq!(code(&out), 3);
}

#[test]
fn compare_reports_orders() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &(config(0.1, "average", "").replace("t_final = 0.1", "t_final = 0.2") + "\n[reference]\ndt = 0.001\n"),
    );
    let dir = tmp.path().join("cmp");
    let out = epdiff(&["compare", "--config", &cfg, "--out", dir.to_str().unwrap(), "--levels", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scheme") && stdout.contains("order"));
    assert!(!stdout.contains("nonsmooth"));

    let errors = fs::read_to_string(dir.join("errors.csv")).unwrap();
    assert_eq!(errors.lines().next().unwrap(), "scheme,dt,error_inf,error_l2,order");
    // Three schemes at two levels plus the reference self-check row.
    assert_eq!(errors.lines().count(), 1 + 6 + 1);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("compare.json")).unwrap()).unwrap();
    assert_eq!(report["smooth"], true);
    let explicit_order = report["rows"][1]["order"].as_f64().unwrap();
    assert!((explicit_order - 1.0).abs() < 0.2, "{explicit_order}");
    assert!(dir.join("energy_combined.csv").exists());
}

#[test]
fn compare_flags_nonsmooth_data() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"scheme = "average"
dt = 0.01
t_final = 0.05

[grid]
n_modes = 16
alpha = 1.0

[scenario]
kind = "peakon"
amplitude = 0.5
center = 0.0

[reference]
dt = 0.001
"#;
    let cfg = write_config(tmp.path(), text);
    let dir = tmp.path().join("cmp");
    let out = epdiff(&["compare", "--config", &cfg, "--out", dir.to_str().unwrap(), "--levels", "1", "--schemes", "average"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nonsmooth"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("compare.json")).unwrap()).unwrap();
    assert_eq!(report["smooth"], false);
}

#[test]
fn verify_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = epdiff(&["verify", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!(tmp.path().join("verify.json").exists());
}

#[test]
fn show_round_trips_presets() {
    let out = epdiff(&["show", "--preset", "desk-gaussian"]);
    assert_eq!(code(&out), 0);
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &String::from_utf8_lossy(&out.stdout));
    let again = epdiff(&["show", "--config", &cfg]);
    assert_eq!(out.stdout, again.stdout);

    assert_eq!(code(&epdiff(&["show", "--preset", "no-such-preset"])), 1);
}

#[test]
fn bad_worker_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_epdiff"))
        .args(["show", "--preset", "desk-gaussian"])
        .env("EPDIFF_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}
