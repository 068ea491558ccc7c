use std::fs;
use std::path::Path;
use std::process::Command;

use satvec::experiment::{parse_config, run_experiment, write_summary, ExecMode, SUMMARY_HEADER};

const HEADER: &str =
    "sweep_param,sweep_value,scheme,trial,seed,objective,delay_sum_s,energy_j,iterations,converged,wall_time_s";

fn satvec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_satvec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "num_vts = 2\nnum_saps = 3\ntrials = 2\nsweep_param = task_bits\nsweep_values = 0.8, 1.0, 1.2\nschemes = proposed, random\n";

#[test]
fn header_is_fixed() {
    assert_eq!(SUMMARY_HEADER.join(","), HEADER);
}

#[test]
fn run_writes_one_row_per_value_scheme_and_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("r.csv");
    let status = satvec(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    let keys: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[1].to_string(), f[2].to_string(), f[3].to_string())
        })
        .collect();
    assert_eq!(keys[0], ("0.8".into(), "proposed".into(), "0".into()));
    assert_eq!(keys[3], ("0.8".into(), "random".into(), "1".into()));
    assert_eq!(keys[11], ("1.2".into(), "random".into(), "1".into()));
    assert!(!dir.path().join("r_trace.csv").exists());
}

#[test]
fn output_is_byte_identical_across_runs_and_schedulers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    assert!(satvec(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])
        .status
        .success());
    assert!(satvec(&["run", "--config", &cfg, "--out", b.to_str().unwrap()])
        .status
        .success());
    assert!(satvec(&[
        "--sequential",
        "run",
        "--config",
        &cfg,
        "--out",
        c.to_str().unwrap()
    ])
    .status
    .success());
    let a = fs::read(a).unwrap();
    assert_eq!(a, fs::read(b).unwrap());
    assert_eq!(a, fs::read(c).unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(satvec(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])
        .status
        .success());
    assert!(satvec(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "99",
        "--out",
        b.to_str().unwrap()
    ])
    .status
    .success());
    assert_ne!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn trace_rows_go_to_a_side_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}emit_trace = true\n"));
    let out = dir.path().join("r.csv");
    assert!(satvec(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status
        .success());
    let trace = fs::read_to_string(dir.path().join("r_trace.csv")).unwrap();
    assert!(trace.starts_with("sweep_param,sweep_value,scheme,trial,iteration,objective\n"));
    assert!(trace.lines().count() > 12);
}

#[test]
fn convergence_mode_writes_traces_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("conv.csv");
    assert!(
        satvec(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("sweep_param,sweep_value,scheme,trial,iteration,objective\n"));
}

#[test]
fn sweep_overrides_the_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("s.csv");
    let o = satvec(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "num_vts",
        "--values",
        "1,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
    assert!(text.lines().skip(1).all(|l| l.starts_with("num_vts,")));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 1\nbeta = 1.5\n");
    let o = satvec(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let cfg = write_config(dir.path(), "colour = blue\n");
    assert_eq!(satvec(&["run", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(
        satvec(&["sweep", "--param", "nope", "--values", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(satvec(&["run"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(
        satvec(&["run", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let cfg = write_config(dir.path(), "trials = 1\nschemes = random\n");
    let bad = dir.path().join("no/such/dir/out.csv");
    assert_eq!(
        satvec(&["run", "--config", &cfg, "--out", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn infeasible_trials_are_recorded_not_fatal() {
    let spec = parse_config(
        "num_vts = 2\nnum_saps = 2\ntrials = 3\nmax_delay_s = 1e-6\nschemes = proposed, rsu_only\n",
    )
    .unwrap();
    let records = run_experiment(&spec, ExecMode::Sequential);
    assert_eq!(records.len(), 6);
    let mut buf = Vec::new();
    write_summary(&mut buf, &spec, &records).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.contains(",false,")));
}
