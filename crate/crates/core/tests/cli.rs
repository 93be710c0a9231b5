use std::path::Path;
use std::process::{Command, Output};

use rttsync::analysis_io::read_estimate_record;
use rttsync::estimators::Method;

fn rttsync(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rttsync"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn rttsync")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_then_estimate_recovers_frequency() {
    let dir = tempfile::tempdir().unwrap();
    ok(&rttsync(&["simulate", "--f-d", "-32", "--phi", "1.0", "--seed", "7", "-o", "rec.csv"], dir.path()));
    ok(&rttsync(&["estimate", "-i", "rec.csv", "-m", "wls", "-o", "est.csv"], dir.path()));
    let rec = read_estimate_record(std::fs::File::open(dir.path().join("est.csv")).unwrap()).unwrap();
    assert_eq!(rec.method, Method::Wls);
    // refined frequency step is 1/(10·N·Ts) = 1 Hz
    assert!((rec.f_d_hat_hz + 32.0).abs() <= 1.0, "{}", rec.f_d_hat_hz);
    assert!((rec.rho_hat_m - 2.0).abs() < 0.5, "{}", rec.rho_hat_m);
    assert_eq!(rec.n_used, 100);
}

#[test]
fn estimate_writes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    ok(&rttsync(&["simulate", "--generator", "edge", "-o", "rec.csv"], dir.path()));
    let out = rttsync(&["estimate", "-i", "rec.csv", "-m", "pcp"], dir.path());
    ok(&out);
    let rec = read_estimate_record(&out.stdout[..]).unwrap();
    assert_eq!(rec.method, Method::Pcp);
    assert!((rec.f_d_hat_hz + 32.0).abs() <= 1.0);
}

#[test]
fn empty_record_exits_with_status_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "t_seconds,y_seconds\n").unwrap();
    let out = rttsync(&["estimate", "-i", "empty.csv", "-o", "est.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(!dir.path().join("est.csv").exists());
}

#[test]
fn failed_run_leaves_existing_output_untouched() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("est.csv"), "previous").unwrap();
    std::fs::write(dir.path().join("bad.csv"), "t_seconds,y_seconds\n0.0,oops\n").unwrap();
    let out = rttsync(&["estimate", "-i", "bad.csv", "-o", "est.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(dir.path().join("est.csv")).unwrap(), "previous");
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2, "temporary files left behind");
}

#[test]
fn usage_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rttsync(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(rttsync(&["estimate"], dir.path()).status.code(), Some(2));
    assert_eq!(rttsync(&["estimate", "-i", "missing.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(rttsync(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.ini"), "iterations = 10\nbogus_key = 1\n").unwrap();
    let out = rttsync(&["sweep", "-c", "bad.ini", "-o", "s.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.ini"),
        "# small sweep\n[experiment]\niterations = 20\nseed = 11\nn = 64\n\
         estimators = uls, pcp, wls\nsweep_axis = snr_c\nsweep_values = 20, 40\n",
    )
    .unwrap();
    ok(&rttsync(&["sweep", "-c", "exp.ini", "-o", "a.csv"], dir.path()));
    ok(&rttsync(&["sweep", "-c", "exp.ini", "-o", "b.csv"], dir.path()));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("sweep_axis,sweep_value,estimator,rmse_fd_hz"));
    // header plus two values times three estimators
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn residuals_and_calibration_commands() {
    let dir = tempfile::tempdir().unwrap();
    ok(&rttsync(&["simulate", "-n", "400", "--seed", "3", "-o", "rec.csv"], dir.path()));
    ok(&rttsync(&["estimate", "-i", "rec.csv", "-o", "est.csv"], dir.path()));
    ok(&rttsync(&["residuals", "-i", "rec.csv", "-e", "est.csv", "--max-lag", "20", "-o", "acf.csv"], dir.path()));
    let acf = std::fs::read_to_string(dir.path().join("acf.csv")).unwrap();
    assert!(acf.starts_with("lag,acf,bound,inside"));
    // header plus lags 0..=20
    assert_eq!(acf.lines().count(), 22);

    let pairs: String = std::iter::once("range_m,rtt_mean_s\n".to_string())
        .chain((1..=9).map(|i| {
            let r = i as f64;
            format!("{r},{:e}\n", 5e-6 + 2.0 * r / 299_792_458.0 + 1e-12 * r * r)
        }))
        .collect();
    std::fs::write(dir.path().join("pairs.csv"), pairs).unwrap();
    ok(&rttsync(&["calibrate", "-p", "pairs.csv", "-o", "curve.txt"], dir.path()));
    let curve = std::fs::read_to_string(dir.path().join("curve.txt")).unwrap();
    assert!(curve.contains("degree = 5"), "{curve}");

    std::fs::write(dir.path().join("few.csv"), "range_m,rtt_mean_s\n1,5e-6\n2,5.1e-6\n").unwrap();
    let out = rttsync(&["calibrate", "-p", "few.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
