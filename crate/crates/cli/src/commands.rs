//! Execution of each experiment into an output directory.

use levy_limits::analytic::{feller_phi_limit, feller_phi_n, rbm_phi_n};
use levy_limits::diffusion::{
    condition_report, feller_functional_moments, simulate_ensemble, wf_functional_moments, DiffusionModel, EnsembleSpec,
    HittingProbe, LaplaceProbe, Start,
};
use levy_limits::specfun::bessel_j_zeros;
use levy_limits::spiking::{
    compound_poisson_limit_stats, sample_doubly_stochastic, sample_ind_model_with, MixingMeasure, SpikeBatch,
};
use levy_limits::subordinator::{arbitrate, IncrementSampler, SubordinatorLaw, DEFAULT_JUMP_BUDGET};
use levy_limits::verify::run_group;
use levy_limits::wf_exponent::{wf_phi_cf, wf_phi_limit, wf_phi_n_with, WfExponentOptions, WfScaling};
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;
use crate::output::OutDir;
use crate::row;

/// What a finished experiment reports back for the manifest.
#[derive(Default)]
pub struct Report {
    /// Outcomes of checks whose result settles a modelling choice.
    pub ledger: Option<Value>,
    /// Set when the computation finished but missed a tolerance.
    pub tolerance_failure: Option<String>,
}

pub fn execute(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<Report, CliError> {
    match &cfg.experiment {
        Experiment::Zeros(a) => zeros(a, out),
        Experiment::Exponent(a) => match &a.family {
            ExponentFamily::Wf(a) => exponent_wf(a, cfg.tolerances, out),
            ExponentFamily::Feller(a) => exponent_feller(a, out),
            ExponentFamily::Rbm(a) => exponent_rbm(a, out),
        },
        Experiment::Subordinator(a) => subordinator(a, cfg.master_seed, out),
        Experiment::Simulate(a) => simulate(a, cfg.master_seed, out),
        Experiment::Spiking(a) => match &a.model {
            SpikingModel::Ind(a) => spiking_ind(a, cfg.master_seed, out),
            SpikingModel::Ds(a) => spiking_ds(a, cfg.master_seed, out),
            SpikingModel::Cp(a) => spiking_cp(a, cfg.master_seed, out),
        },
        Experiment::Verify(a) => verify(a, cfg, out),
    }
}

fn zeros(a: &ZerosArgs, out: &mut OutDir) -> Result<Report, CliError> {
    let table = bessel_j_zeros(a.nu, a.count)?;
    out.csv("zeros.csv", "index,zero", table.zeros.iter().enumerate().map(|(k, z)| row![k + 1, z]))?;
    Ok(Report::default())
}

fn exponent_wf(a: &WfExponentArgs, tol: Tolerances, out: &mut OutDir) -> Result<Report, CliError> {
    let p = WfScaling::along(a.tau, a.beta, a.gamma, a.lambda)?;
    let opts = WfExponentOptions {
        tail_tol: tol.tail_tol,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for mu in a.mu_grid.points() {
        let limit = wf_phi_limit(mu, a.beta, a.gamma)?;
        let cf = a.gamma * wf_phi_cf(mu, a.beta, 40)?;
        let phi = match a.method {
            Method::Series => wf_phi_n_with(&p, mu, &opts)?,
            Method::Cf => cf,
            Method::Limit => limit,
        };
        let err = (cf - limit).abs();
        worst = worst.max(err);
        rows.push(row![mu, phi, limit, cf, err]);
    }
    out.csv("exponent.csv", "mu,phi_n,phi_limit,cf_depth40,abs_err", rows)?;
    Ok(Report {
        ledger: None,
        tolerance_failure: (worst > tol.cf_abs_tol)
            .then(|| format!("continued fraction misses the Bessel ratio by {worst:e} > {:e}", tol.cf_abs_tol)),
    })
}

fn exponent_feller(a: &FellerExponentArgs, out: &mut OutDir) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    for mu in a.mu_grid.points() {
        let phi = feller_phi_n(a.n, a.gamma / a.n, a.beta, a.lambda, mu)?;
        let limit = feller_phi_limit(mu, a.beta, a.gamma)?;
        rows.push(row![mu, phi, limit, (phi - limit).abs()]);
    }
    out.csv("exponent.csv", "mu,phi_n,phi_limit,gap", rows)?;
    Ok(Report::default())
}

fn rbm_drift(n: f64, beta_n: Option<f64>) -> f64 {
    beta_n.unwrap_or_else(|| n.powf(-0.25))
}

fn exponent_rbm(a: &RbmExponentArgs, out: &mut OutDir) -> Result<Report, CliError> {
    let beta_n = rbm_drift(a.n, a.beta_n);
    if beta_n * beta_n * a.n < 1.0 {
        log::warn!("beta_n^2 n = {} is small; the limit mu needs it large", beta_n * beta_n * a.n);
    }
    let mut rows = Vec::new();
    for mu in a.mu_grid.points() {
        let phi = if mu == 0.0 { 0.0 } else { rbm_phi_n(a.n, beta_n, a.lambda, mu)? };
        rows.push(row![mu, phi, mu, (phi - mu).abs()]);
    }
    out.csv("exponent.csv", "mu,phi_n,phi_limit,gap", rows)?;
    Ok(Report::default())
}

fn subordinator(a: &SubordinatorArgs, seed: u64, out: &mut OutDir) -> Result<Report, CliError> {
    let report = arbitrate(a.beta, a.gamma, &[0.5, 1.0, 2.0], a.zeros)?;
    let convention = report.selected.ok_or_else(|| {
        CliError::Tolerance(format!(
            "no jump-mixture convention reproduces the exponent (relative gaps {:?})",
            report.max_gaps
        ))
    })?;
    let law = SubordinatorLaw::wright_fisher(a.beta, a.gamma, convention, a.zeros)?;
    if let Some(n) = a.cumulants {
        let k = law.cumulants(n)?;
        out.csv("cumulants.csv", "n,kappa", k.iter().enumerate().map(|(i, v)| row![i + 1, v]))?;
    }
    if let Some(n) = a.moments {
        let m = law.moments(a.t, n)?;
        out.csv("moments.csv", "n,moment", m.iter().enumerate().map(|(i, v)| row![i, v]))?;
    }
    if let Some(n) = a.sample {
        let xs = IncrementSampler::new(&law, a.eps, DEFAULT_JUMP_BUDGET)?.sample_many(a.t, n, seed)?;
        out.csv("samples.csv", "sample_index,value", xs.iter().enumerate().map(|(i, v)| row![i, v]))?;
    }
    let ledger = json!({
        "jump_mixture_convention": convention.name(),
        "relative_gaps": {
            "paper_pi_dens": report.max_gaps[0],
            "partial_fraction": report.max_gaps[1],
        },
        "tolerance": report.tolerance,
    });
    out.json("arbitration.json", &ledger)?;
    Ok(Report {
        ledger: Some(ledger),
        tolerance_failure: None,
    })
}

fn simulate(a: &SimulateArgs, seed: u64, out: &mut OutDir) -> Result<Report, CliError> {
    let (model, run) = match &a.family {
        SimulateFamily::Wf(w) => (
            DiffusionModel::WrightFisher {
                tau: w.tau,
                alpha: w.alpha,
                beta: w.beta,
            },
            &w.run,
        ),
        SimulateFamily::Feller(f) => (
            DiffusionModel::Feller {
                n: f.n,
                alpha: f.alpha,
                beta: f.beta,
            },
            &f.run,
        ),
        SimulateFamily::Rbm(r) => (
            DiffusionModel::ReflectedBm {
                n: r.n,
                beta_n: rbm_drift(r.n, r.beta_n),
            },
            &r.run,
        ),
    };
    model.validate()?;
    if !(run.horizon > 0.0) {
        return Err(CliError::Config(format!("T must be positive, got {}", run.horizon)));
    }
    let dt = match run.dt {
        Some(dt) => dt,
        // whole number of steps no longer than the model's limit
        None => {
            let cap = model.max_dt().unwrap_or(run.horizon / 1000.0).min(run.horizon);
            run.horizon / (run.horizon / cap).ceil()
        }
    };
    let start = match run.start {
        StartArg::Zero => Start::Zero,
        StartArg::Stationary => Start::Stationary,
    };
    let mut spec = EnsembleSpec::new(model, run.horizon, dt, run.paths, seed, start);
    spec.scheme = run.scheme.into();
    let record_dt = run.record_dt.unwrap_or(run.horizon / 100.0);
    spec.record_stride = ((record_dt / dt).round() as usize).max(1);
    spec.laplace_probes = run.mu.iter().map(|&mu| LaplaceProbe { lambda: run.lambda, mu }).collect();
    spec.hitting_probes = run.hit.iter().map(|w| HittingProbe { t: w.t, eps: w.eps }).collect();
    let ens = simulate_ensemble(&spec)?;

    let spacing = dt * spec.record_stride as f64;
    let deltas: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 20.0]
        .iter()
        .map(|k| k * spacing)
        .filter(|&d| d <= run.horizon * (1.0 + 1e-9))
        .collect();
    let report = condition_report(&ens, &deltas)?;
    out.csv(
        "laplace.csv",
        "lambda,mu,R_hat,se",
        report.resolvent.iter().map(|r| row![r.lambda, r.mu, r.r_hat.value, r.r_hat.se]),
    )?;
    let mut rows = Vec::new();
    for h in &report.hitting {
        rows.push(row!["hitting_tail", h.t, h.eps, "", h.tail.value, h.tail.se]);
    }
    for m in &report.modulus {
        rows.push(row!["modulus", "", "", m.delta, m.value, m.se]);
    }
    out.csv("conditions.csv", "kind,t,eps,delta,value,se", rows)?;

    let limit = |mu: f64| -> Option<f64> {
        match model {
            DiffusionModel::WrightFisher { tau, alpha, beta } => wf_phi_limit(mu, beta, alpha / tau).ok(),
            DiffusionModel::Feller { n, alpha, beta } => feller_phi_limit(mu, beta, alpha * n).ok(),
            DiffusionModel::ReflectedBm { .. } => Some(mu),
        }
    };
    let moments = match model {
        DiffusionModel::WrightFisher { tau, alpha, beta } => Some(wf_functional_moments(tau, alpha, beta, run.horizon)),
        DiffusionModel::Feller { n, alpha, beta } => Some(feller_functional_moments(n, alpha, beta, run.horizon)),
        DiffusionModel::ReflectedBm { .. } => None,
    };
    let end = ens.functional_at(run.horizon)?;
    let meta = json!({
        "spec": spec,
        "scheme": model.resolve_scheme(spec.scheme)?,
        "steps": ens.steps,
        "record_spacing": spacing,
        "failed_paths": ens.failures,
        "exponent": report.resolvent.iter().map(|r| json!({
            "lambda": r.lambda,
            "mu": r.mu,
            "phi_hat": r.phi_hat,
            "phi_limit": limit(r.mu),
        })).collect::<Vec<_>>(),
        "functional_at_horizon": {
            "mean": levy_limits::stats::mean_estimate(&end),
            "variance": levy_limits::stats::variance_estimate(&end),
            "stationary_moments": moments.map(|(m, v)| json!({"mean": m, "variance": v})),
        },
    });
    out.json("ensemble_meta.json", &meta)?;

    if run.write_paths {
        let rows = ens.paths.iter().flat_map(|p| {
            ens.record_times
                .iter()
                .enumerate()
                .map(move |(i, t)| row![p.index, t, p.x[i], p.a[i]])
        });
        out.csv_gz("paths.csv.gz", "path,t,x,a", rows)?;
    }
    Ok(Report::default())
}

fn batch_stats(batch: &SpikeBatch, extra: Value) -> Result<Value, CliError> {
    let rho = if batch.k >= 2 { Some(batch.pairwise_correlation()?) } else { None };
    Ok(json!({
        "k": batch.k,
        "bins": batch.counts.len(),
        "bin_width": batch.bin_width,
        "mean_count": batch.mean_count(),
        "pairwise_correlation": rho,
        "lag1_correlation": batch.lag_correlation(1),
        "model": extra,
    }))
}

fn write_counts(batch: &SpikeBatch, out: &mut OutDir) -> Result<(), CliError> {
    out.csv("counts.csv", "bin,count", batch.counts.iter().enumerate().map(|(j, c)| row![j, c]))
}

fn spiking_ind(a: &SpikeIndArgs, seed: u64, out: &mut OutDir) -> Result<Report, CliError> {
    let f = MixingMeasure::beta_scaled(a.beta, a.r, a.eps)?;
    let batch = sample_ind_model_with(&f, a.k, a.bins, seed, a.generator.into())?;
    write_counts(&batch, out)?;
    let (m, v) = f.moments();
    let stats = batch_stats(
        &batch,
        json!({"mixing": f, "mean_z": m, "var_z": v, "pairwise_correlation": f.pairwise_correlation()}),
    )?;
    out.json("stats.json", &stats)?;
    Ok(Report::default())
}

fn spiking_ds(a: &SpikeDsArgs, seed: u64, out: &mut OutDir) -> Result<Report, CliError> {
    let model = DiffusionModel::WrightFisher {
        tau: a.tau,
        alpha: a.alpha,
        beta: a.beta,
    };
    model.validate()?;
    let cap = model.max_dt().unwrap_or(a.bin);
    let steps_per_bin = (a.bin / cap).ceil();
    let dt = a.bin / steps_per_bin;
    let mut spec = EnsembleSpec::new(model, a.horizon, dt, a.paths, seed, Start::Stationary);
    spec.record_stride = steps_per_bin as usize;
    let ens = simulate_ensemble(&spec)?;
    let batch = sample_doubly_stochastic(&ens, a.k, a.bin, seed)?;
    write_counts(&batch, out)?;
    let stats = batch_stats(
        &batch,
        json!({"mean_z": a.bin * a.alpha / (a.alpha + a.beta), "dt": dt, "paths": a.paths}),
    )?;
    out.json("stats.json", &stats)?;
    Ok(Report::default())
}

fn spiking_cp(a: &SpikeCpArgs, seed: u64, out: &mut OutDir) -> Result<Report, CliError> {
    let report = compound_poisson_limit_stats(a.beta, a.r, &a.eps, a.k, a.samples, seed)?;
    out.csv(
        "cp.csv",
        "eps,rate,rate_se,rate_exact,rho,rho_se,rho_exact,identity,identity_se",
        report.rows.iter().map(|r| {
            row![
                r.eps,
                r.rate.value,
                r.rate.se,
                r.rate_exact,
                r.rho.value,
                r.rho.se,
                r.rho_exact,
                r.identity.value,
                r.identity.se
            ]
        }),
    )?;
    let jump_rows = report
        .rows
        .iter()
        .flat_map(|r| r.jump_law.iter().enumerate().map(move |(j, p)| row![r.eps, j + 1, p]));
    out.csv("jump_law.csv", "eps,k,probability", jump_rows)?;
    out.json("stats.json", &report)?;
    Ok(Report::default())
}

fn verify(a: &VerifyArgs, cfg: &ExperimentConfig, out: &mut OutDir) -> Result<Report, CliError> {
    let outcomes = run_group(a.group.into(), cfg.profile.into(), cfg.master_seed);
    for o in &outcomes {
        println!("{}", o.line());
    }
    out.csv(
        "verify.csv",
        "criterion,passed,summary",
        outcomes
            .iter()
            .map(|o| row![o.id, o.passed, format!("\"{}\"", o.summary.replace('"', "'"))]),
    )?;
    out.json("verify.json", &outcomes)?;
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    let ledger = outcomes
        .iter()
        .filter(|o| matches!(o.id, 5 | 7))
        .map(|o| (format!("criterion_{}", o.id), json!({"summary": o.summary, "metrics": o.metrics})))
        .collect::<serde_json::Map<_, _>>();
    Ok(Report {
        ledger: (!ledger.is_empty()).then_some(Value::Object(ledger)),
        tolerance_failure: (!failed.is_empty()).then(|| format!("criteria {} failed", failed.join(", "))),
    })
}
