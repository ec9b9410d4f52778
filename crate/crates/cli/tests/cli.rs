use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levy-limits"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn wf_exponent_grid_is_increasing_and_matches_the_continued_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["exponent", "wf", "--beta", "2", "--gamma", "1", "--tau", "1e-2", "--mu-grid", "0.1:5:50"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("exponent.csv"));
    let phi = column(&csv, "phi_n");
    let mu = column(&csv, "mu");
    assert_eq!(phi.len(), 50);
    assert_eq!(mu[0], 0.1);
    assert_eq!(mu[49], 5.0);
    assert!(phi.windows(2).all(|w| w[1] > w[0]));
    assert!(column(&csv, "abs_err").iter().all(|e| *e < 1e-10));

    let manifest: Value = serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["command"], "exponent wf");
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|f| f == "exponent.csv"));
}

#[test]
fn tau_defaults_for_the_wf_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["exponent", "wf", "--beta", "2", "--gamma", "1", "--mu-grid", "0.1:5:50"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&read(&dir.path().join("exponent.csv")), "phi_limit").len(), 50);
}

#[test]
fn invalid_beta_exits_with_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["exponent", "wf", "--beta", "1", "--tau", "1e-2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).expect("json error on stderr");
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(err["error"]["exit_code"], 2);
    assert!(err["error"]["message"].as_str().unwrap().contains("beta"));
}

#[test]
fn malformed_grid_is_rejected_by_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["exponent", "wf", "--beta", "2", "--tau", "1e-2", "--mu-grid", "1:0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_bytes_and_replay_reproduces_them() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "feller", "--n", "100", "--alpha", "0.01", "--beta", "2", "--T", "2", "--paths", "64", "--hit", "1:0.5",
        "--write-paths", "--seed", "7", "--workers", "1",
    ];
    assert!(cli(&args, a.path()).status.success());
    let mut args_b = args.to_vec();
    *args_b.last_mut().unwrap() = "3";
    assert!(cli(&args_b, b.path()).status.success());
    for f in ["laplace.csv", "conditions.csv", "paths.csv.gz"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }

    let c = tempfile::tempdir().unwrap();
    let config = a.path().join("config.toml");
    let o = cli(&["run", "--config", config.to_str().unwrap()], c.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&a.path().join("laplace.csv")), read(&c.path().join("laplace.csv")));

    let d = tempfile::tempdir().unwrap();
    let mut args_d = args.to_vec();
    let seed_at = args_d.len() - 3;
    args_d[seed_at] = "8";
    assert!(cli(&args_d, d.path()).status.success());
    assert_ne!(read(&a.path().join("laplace.csv")), read(&d.path().join("laplace.csv")));
}

#[test]
fn replay_of_a_missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["run", "--config", dir.path().join("nope.toml").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zeros_of_half_order_bessel_are_multiples_of_pi() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cli(&["zeros", "--nu", "0.5", "--count", "20"], dir.path()).status.success());
    let z = column(&read(&dir.path().join("zeros.csv")), "zero");
    assert_eq!(z.len(), 20);
    for (k, zk) in z.iter().enumerate() {
        assert!((zk - std::f64::consts::PI * (k + 1) as f64).abs() < 1e-12);
    }
}

#[test]
fn subordinator_reports_the_selected_convention() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["subordinator", "--beta", "2", "--gamma", "1", "--cumulants", "3", "--moments", "3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let arb: Value = serde_json::from_str(&read(&dir.path().join("arbitration.json"))).unwrap();
    assert_eq!(arb["jump_mixture_convention"], "partial_fraction");
    let kappa = column(&read(&dir.path().join("cumulants.csv")), "kappa");
    assert!((kappa[0] - 0.5).abs() < 1e-12);
    assert!((kappa[1] - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn spiking_commands_write_counts_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["spiking", "ind", "--K", "10", "--bins", "2000", "--beta", "2", "--eps", "0.05"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let counts = column(&read(&dir.path().join("counts.csv")), "count");
    assert_eq!(counts.len(), 2000);
    assert!(counts.iter().all(|c| (0.0..=10.0).contains(c)));

    let cp = tempfile::tempdir().unwrap();
    let o = cli(&["spiking", "cp", "--K", "10", "--beta", "2", "--samples", "20000"], cp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&read(&cp.path().join("cp.csv")), "eps"), vec![0.01, 0.001]);
}

#[test]
fn verify_specfun_smoke_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["verify", "specfun", "--profile", "smoke"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains(" PASS ")).count(), 2);
    assert!(read(&dir.path().join("verify.csv")).starts_with("criterion,passed,summary\n1,true,"));
}
