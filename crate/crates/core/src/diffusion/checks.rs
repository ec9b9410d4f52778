use serde::{Deserialize, Serialize};

use super::ensemble::{check_hitting_window, linear_exp_weight, simulate_ensemble, EnsembleSpec, LaplaceProbe, PathEnsemble};
use super::model::{DiffusionModel, Start};
use crate::error::{Error, Result};
use crate::stats::{batch_estimate, mean, mean_estimate, Estimate};
use crate::wf_exponent::{u_mu, wf_coefficients_adaptive, wf_phi_n_with, WfExponentOptions, WfScaling};

/// Batches for path-level standard errors.
pub const SE_BATCHES: usize = 32;

/// Horizon truncation `e^{−λT}` above which Laplace estimates warn.
pub const LAPLACE_TAIL_WARN: f64 = 1e-6;

fn path_mean(values: &[f64]) -> Estimate {
    if values.len() >= 2 * SE_BATCHES {
        batch_estimate(values, SE_BATCHES, mean)
    } else {
        mean_estimate(values)
    }
}

/// `R̂ = mean over paths of ∫_0^T e^{−λt − μA(t)} dt`.
///
/// Uses the full-resolution probe when the ensemble carries one for
/// `(λ, μ)`, otherwise the record grid. Within each interval `A` is taken
/// linear, so `μ = 0` reproduces `(1 − e^{−λT})/λ` exactly.
pub fn empirical_laplace(ens: &PathEnsemble, lambda: f64, mu: f64) -> Result<Estimate> {
    if !(lambda > 0.0 && mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("need lambda > 0 and mu >= 0, got {lambda}, {mu}")));
    }
    let tail = (-lambda * ens.spec.horizon).exp();
    if tail >= LAPLACE_TAIL_WARN {
        log::warn!("Laplace estimate truncated at T = {}: e^(-lambda T) = {tail:.2e}", ens.spec.horizon);
    }
    let values: Vec<f64> = match ens.laplace_probe_index(lambda, mu) {
        Some(i) => ens.paths.iter().map(|p| p.laplace[i]).collect(),
        None => ens
            .paths
            .iter()
            .map(|p| {
                let mut f = 1.0;
                let mut total = 0.0;
                for k in 1..ens.record_times.len() {
                    let h = ens.record_times[k] - ens.record_times[k - 1];
                    let (w, e) = linear_exp_weight(lambda * h + mu * (p.a[k] - p.a[k - 1]));
                    total += h * f * w;
                    f *= e;
                }
                total
            })
            .collect(),
    };
    Ok(path_mean(&values))
}

/// `Φ̂ = 1/R̂ − λ` with a delta-method standard error.
pub fn exponent_from_resolvent(r: Estimate, lambda: f64) -> Estimate {
    Estimate {
        value: 1.0 / r.value - lambda,
        se: r.se / (r.value * r.value),
    }
}

/// `−log Ê[e^{−μA(t)}] / t` at a record time, with a delta-method error.
pub fn empirical_exponent(ens: &PathEnsemble, t: f64, mu: f64) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let e: Vec<f64> = ens.functional_at(t)?.iter().map(|a| (-mu * a).exp()).collect();
    let m = mean_estimate(&e);
    Ok(Estimate {
        value: -m.value.ln() / t,
        se: m.se / (m.value * t),
    })
}

/// Fraction of paths that stay above the hit threshold throughout
/// `[t, t + eps]`.
pub fn hitting_time_tail(ens: &PathEnsemble, t: f64, eps: f64) -> Result<Estimate> {
    let missed: Vec<f64> = match ens.hitting_probe_index(t, eps) {
        Some(i) => ens.paths.iter().map(|p| if p.hit[i] { 0.0 } else { 1.0 }).collect(),
        None => {
            let spacing = ens.spec.dt * ens.spec.record_stride as f64;
            check_hitting_window(t, eps, spacing, ens.spec.horizon)?;
            let threshold = ens.spec.hit_threshold();
            let tol = 1e-9 * ens.spec.horizon;
            let idx: Vec<usize> = ens
                .record_times
                .iter()
                .enumerate()
                .filter(|(_, &r)| r >= t - tol && r <= t + eps + tol)
                .map(|(i, _)| i)
                .collect();
            ens.paths
                .iter()
                .map(|p| if idx.iter().any(|&i| p.x[i] <= threshold) { 0.0 } else { 1.0 })
                .collect()
        }
    };
    let n = missed.len() as f64;
    let p = mean(&missed);
    Ok(Estimate {
        value: p,
        se: (p * (1.0 - p) / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusPoint {
    pub delta: f64,
    pub value: f64,
    pub se: f64,
}

/// `â(δ) = max_s mean[A(s + δ) − A(s)]` over record-grid window starts; each
/// `δ` must be a whole number of record spacings. The maximum over starts
/// biases the estimate upward by roughly its SE.
pub fn modulus_bound(ens: &PathEnsemble, deltas: &[f64]) -> Result<Vec<ModulusPoint>> {
    let spacing = ens.spec.dt * ens.spec.record_stride as f64;
    let times = &ens.record_times;
    deltas
        .iter()
        .map(|&delta| {
            if delta == 0.0 {
                return Ok(ModulusPoint {
                    delta,
                    value: 0.0,
                    se: 0.0,
                });
            }
            let lag = (delta / spacing).round();
            if !(delta > 0.0) || (lag * spacing - delta).abs() > 1e-9 * delta || lag < 1.0 {
                return Err(Error::Resolution {
                    dt: spacing,
                    required: delta,
                });
            }
            let lag = lag as usize;
            // the horizon point may sit off the regular grid
            let starts = (0..times.len()).filter(|&s| {
                s + lag < times.len() && (times[s + lag] - times[s] - delta).abs() <= 1e-9 * delta.max(spacing)
            });
            let mut best: Option<Estimate> = None;
            for s in starts {
                let inc: Vec<f64> = ens.paths.iter().map(|p| p.a[s + lag] - p.a[s]).collect();
                let est = mean_estimate(&inc);
                if best.is_none_or(|b| est.value > b.value) {
                    best = Some(est);
                }
            }
            let best = best.ok_or(Error::Horizon {
                horizon: ens.spec.horizon,
                required: delta,
            })?;
            Ok(ModulusPoint {
                delta,
                value: best.value,
                se: best.se,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingRow {
    pub t: f64,
    pub eps: f64,
    pub tail: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventRow {
    pub lambda: f64,
    pub mu: f64,
    pub r_hat: Estimate,
    pub phi_hat: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub hitting: Vec<HittingRow>,
    pub modulus: Vec<ModulusPoint>,
    pub resolvent: Vec<ResolventRow>,
}

/// Hitting tails and resolvents for every probe carried by the ensemble, and
/// the modulus bound on `deltas`.
pub fn condition_report(ens: &PathEnsemble, deltas: &[f64]) -> Result<ConditionReport> {
    let hitting = ens
        .spec
        .hitting_probes
        .iter()
        .map(|p| {
            Ok(HittingRow {
                t: p.t,
                eps: p.eps,
                tail: hitting_time_tail(ens, p.t, p.eps)?,
            })
        })
        .collect::<Result<_>>()?;
    let resolvent = ens
        .spec
        .laplace_probes
        .iter()
        .map(|p| {
            let r_hat = empirical_laplace(ens, p.lambda, p.mu)?;
            Ok(ResolventRow {
                lambda: p.lambda,
                mu: p.mu,
                r_hat,
                phi_hat: exponent_from_resolvent(r_hat, p.lambda),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConditionReport {
        hitting,
        modulus: modulus_bound(ens, deltas)?,
        resolvent,
    })
}

/// Monte Carlo setup for [`resolvent_sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRun {
    pub dt: f64,
    pub paths: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub x: f64,
    /// `E^x[∫e^{−λt−μA(t)}dt]`, truncated at the simulation horizon.
    pub monte_carlo: Estimate,
    /// `φ^μ(x)/φ^μ(0) · 1/(λ + Φ_n(μ))`.
    pub middle: f64,
    /// `(1/λ)(1 − φ⁰(x)/φ⁰(0))`.
    pub envelope: f64,
    /// Largest amount by which horizon truncation lowers the estimate.
    pub truncation: f64,
}

impl SandwichRow {
    pub fn gap(&self) -> f64 {
        self.monte_carlo.value - self.middle
    }

    /// `0 ≤ gap ≤ envelope`, each side relaxed by `k` standard errors.
    pub fn holds(&self, k: f64) -> bool {
        let slack = k * self.monte_carlo.se;
        self.gap() >= -slack - self.truncation && self.gap() <= self.envelope + slack
    }
}

/// Compares `x`-started Wright–Fisher resolvents against the fundamental
/// solution bounds, one ensemble per grid point.
pub fn resolvent_sandwich_check(
    model: &DiffusionModel,
    lambda: f64,
    mu: f64,
    x_grid: &[f64],
    run: SandwichRun,
) -> Result<Vec<SandwichRow>> {
    let DiffusionModel::WrightFisher { tau, alpha, beta } = *model else {
        return Err(Error::InvalidParameter(
            "the resolvent sandwich needs the Wright-Fisher fundamental solution".into(),
        ));
    };
    model.validate()?;
    let p = WfScaling::new(tau, alpha, beta, alpha / tau, lambda)?;
    let opts = WfExponentOptions::default();
    let phi_mu = wf_coefficients_adaptive(&p, mu, &opts)?;
    let phi_0 = wf_coefficients_adaptive(&p, 0.0, &opts)?;
    let tol = opts.tail_tol;
    let (u_mu0, u_00) = (u_mu(&phi_mu, 0.0, tol)?, u_mu(&phi_0, 0.0, tol)?);
    let r0 = 1.0 / (lambda + wf_phi_n_with(&p, mu, &opts)?);

    // whole steps with e^{−λT} below the warning level
    let horizon = ((-LAPLACE_TAIL_WARN.ln() / lambda) / run.dt).ceil() * run.dt;
    x_grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut spec = EnsembleSpec::new(
                *model,
                horizon,
                run.dt,
                run.paths,
                run.master_seed.wrapping_add(i as u64),
                Start::Fixed(x),
            );
            spec.record_stride = usize::MAX;
            spec.laplace_probes.push(LaplaceProbe { lambda, mu });
            let ens = simulate_ensemble(&spec)?;
            Ok(SandwichRow {
                x,
                monte_carlo: empirical_laplace(&ens, lambda, mu)?,
                middle: u_mu(&phi_mu, x, tol)? / u_mu0 * r0,
                envelope: (1.0 - u_mu(&phi_0, x, tol)? / u_00) / lambda,
                truncation: (-lambda * horizon).exp() / lambda,
            })
        })
        .collect()
}
