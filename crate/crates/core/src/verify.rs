//! The numbered acceptance checks, runnable at two scales.
//!
//! Analytic checks are identical in both profiles; Monte Carlo checks use
//! fewer samples under [`Profile::Smoke`] while keeping every tolerance.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytic::{airy_laplace_ratio, feller_phi_n, ig_parameter_fit, rbm_phi_n};
use crate::diffusion::{
    empirical_laplace, exponent_from_resolvent, simulate_ensemble, simulate_ensemble_with_workers, wf_functional_moments,
    DiffusionModel, EnsembleSpec, LaplaceProbe, Start,
};
use crate::error::Result;
use crate::specfun::{airy_ai, airy_tail_bounds, bessel_i, bessel_j, bessel_j_zeros};
use crate::spiking::{compound_poisson_limit_stats, sample_ind_model, MixingMeasure};
use crate::stats::{mean_estimate, variance_estimate, Estimate};
use crate::subordinator::{
    jump_moment, lk_consistency, IncrementSampler, JumpMoment, MixtureConvention, SubordinatorLaw, DEFAULT_CUTOFF,
    DEFAULT_JUMP_BUDGET, DEFAULT_ZEROS,
};
use crate::wf_exponent::{
    coefficient_decay_check, u_mu, u_mu_derivative_at_one, wf_coefficients, wf_coefficients_adaptive,
    wf_limit_coefficients, wf_phi_cf, wf_phi_limit, wf_phi_n, WfExponentOptions, WfScaling,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Reduced Monte Carlo sizes for a quick pass.
    Smoke,
    /// Full sizes; about ten minutes on one core.
    #[default]
    Desk,
}

impl Profile {
    fn pick<T>(self, smoke: T, desk: T) -> T {
        match self {
            Self::Smoke => smoke,
            Self::Desk => desk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Specfun,
    Wf,
    Subordinator,
    Feller,
    Rbm,
    Spiking,
    All,
}

impl Group {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Self::Specfun => &[1, 10],
            Self::Wf => &[2, 3, 4],
            Self::Subordinator => &[5, 6],
            Self::Feller => &[7],
            Self::Rbm => &[8],
            Self::Spiking => &[9],
            Self::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    pub seconds: f64,
    pub metrics: BTreeMap<String, f64>,
}

impl Outcome {
    /// One-line `PASS`/`FAIL` rendering.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({:.1} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.summary
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "continued fraction vs Bessel ratio",
        2 => "Wright-Fisher prelimit convergence",
        3 => "Monte Carlo Laplace exponent",
        4 => "stationary functional moments",
        5 => "jump-mixture convention arbitration",
        6 => "cumulant anchor and moment dichotomy",
        7 => "Feller limit and inverse-Gaussian fit",
        8 => "reflected BM and Airy ratio",
        9 => "spike-count correlation limit",
        10 => "property suites",
        _ => "unknown",
    }
}

/// Result of one check before timing and labelling.
struct Check {
    passed: bool,
    summary: String,
    metrics: BTreeMap<String, f64>,
}

impl Check {
    fn new() -> Self {
        Self {
            passed: true,
            summary: String::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            if !self.summary.is_empty() {
                self.summary.push_str("; ");
            }
            self.summary.push_str(&what.into());
        }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn done(mut self, ok_summary: impl Into<String>) -> Self {
        if self.passed {
            self.summary = ok_summary.into();
        }
        self
    }
}

/// Runs criterion `id`; library errors become failed outcomes.
pub fn run_criterion(id: u8, profile: Profile, seed: u64) -> Outcome {
    let start = Instant::now();
    let result = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 | 4 => wf_monte_carlo(id, profile, seed),
        5 => criterion_5(),
        6 => criterion_6(profile, seed),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(profile, seed),
        10 => criterion_10(seed),
        _ => Err(crate::Error::InvalidParameter(format!("no criterion {id}"))),
    };
    let check = result.unwrap_or_else(|e| Check {
        passed: false,
        summary: format!("error: {e}"),
        metrics: BTreeMap::new(),
    });
    Outcome {
        id,
        title: title(id).into(),
        passed: check.passed,
        summary: check.summary,
        seconds: start.elapsed().as_secs_f64(),
        metrics: check.metrics,
    }
}

/// Runs the criteria of `group`, sharing the Wright–Fisher ensemble between
/// 3 and 4.
pub fn run_group(group: Group, profile: Profile, seed: u64) -> Vec<Outcome> {
    let ids = group.criteria();
    let mut out = Vec::with_capacity(ids.len());
    let mut i = 0;
    while i < ids.len() {
        let id = ids[i];
        if id == 3 && ids.get(i + 1) == Some(&4) {
            let start = Instant::now();
            let pair = wf_monte_carlo_pair(profile, seed);
            let seconds = start.elapsed().as_secs_f64();
            match pair {
                Ok((c3, c4)) => {
                    for (id, c) in [(3, c3), (4, c4)] {
                        out.push(Outcome {
                            id,
                            title: title(id).into(),
                            passed: c.passed,
                            summary: c.summary,
                            seconds,
                            metrics: c.metrics,
                        });
                    }
                }
                Err(e) => {
                    for id in [3, 4] {
                        out.push(Outcome {
                            id,
                            title: title(id).into(),
                            passed: false,
                            summary: format!("error: {e}"),
                            seconds,
                            metrics: BTreeMap::new(),
                        });
                    }
                }
            }
            i += 2;
        } else {
            out.push(run_criterion(id, profile, seed));
            i += 1;
        }
    }
    out
}

fn criterion_1() -> Result<Check> {
    let start = Instant::now();
    let mut c = Check::new();
    let mut worst = 0.0f64;
    for beta in [1.5, 2.0, 3.0] {
        for mu in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let gap = (wf_phi_cf(mu, beta, 40)? - wf_phi_limit(mu, beta, 1.0)?).abs();
            worst = worst.max(gap);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.metric("max_abs_gap", worst);
    c.metric("seconds", secs);
    c.require(worst <= 1e-10, format!("max gap {worst:.2e} > 1e-10"));
    c.require(secs < 1.0, format!("took {secs:.2} s"));
    Ok(c.done(format!("max |cf40 - bessel ratio| = {worst:.2e} within the 1 s budget")))
}

fn criterion_2() -> Result<Check> {
    let mut c = Check::new();
    let mut last_rel = 0.0f64;
    for mu in [0.5, 1.0, 2.0] {
        let lim = wf_phi_limit(mu, 2.0, 1.0)?;
        let gaps = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&tau| Ok((wf_phi_n(&WfScaling::along(tau, 2.0, 1.0, 1.0)?, mu)? - lim).abs()))
            .collect::<Result<Vec<f64>>>()?;
        let rel = gaps[2] / lim;
        last_rel = last_rel.max(rel);
        c.metric(format!("rel_gap_mu{mu}_tau1e-4"), rel);
        c.require(gaps[0] > gaps[1] && gaps[1] > gaps[2], format!("gaps not decreasing at mu = {mu}: {gaps:?}"));
        c.require(rel <= 0.01, format!("relative gap {rel:.3e} at mu = {mu}"));
    }
    Ok(c.done(format!("gaps strictly decreasing; worst relative gap at tau = 1e-4 is {last_rel:.2e}")))
}

const WF_TAU: f64 = 1e-3;
const WF_DT: f64 = 2e-5;
const WF_HORIZON: f64 = 6.0;

fn wf_monte_carlo_pair(profile: Profile, seed: u64) -> Result<(Check, Check)> {
    let model = DiffusionModel::WrightFisher {
        tau: WF_TAU,
        alpha: WF_TAU,
        beta: 2.0,
    };
    let paths = profile.pick(400, 10_000);
    let mut spec = EnsembleSpec::new(model, WF_HORIZON, WF_DT, paths, seed, Start::Stationary);
    spec.record_stride = 5_000;
    spec.laplace_probes = vec![LaplaceProbe { lambda: 1.0, mu: 0.5 }, LaplaceProbe { lambda: 1.0, mu: 1.0 }];
    let ens = simulate_ensemble(&spec)?;

    let mut c3 = Check::new();
    c3.metric("paths", (ens.paths.len()) as f64);
    c3.metric("failed_paths", ens.failures.len() as f64);
    let mut parts = Vec::new();
    for mu in [0.5, 1.0] {
        let phi_hat = exponent_from_resolvent(empirical_laplace(&ens, 1.0, mu)?, 1.0);
        let phi = wf_phi_limit(mu, 2.0, 1.0)?;
        let tol = (3.0 * phi_hat.se).max(0.05 * phi);
        c3.metric(format!("phi_hat_mu{mu}"), phi_hat.value);
        c3.metric(format!("phi_hat_se_mu{mu}"), phi_hat.se);
        c3.metric(format!("phi_mu{mu}"), phi);
        c3.require(
            (phi_hat.value - phi).abs() <= tol,
            format!("mu = {mu}: {:.4} vs {phi:.4}", phi_hat.value),
        );
        parts.push(format!("mu={mu}: {:.4}+-{:.4} vs {phi:.4}", phi_hat.value, phi_hat.se));
    }
    let c3 = c3.done(parts.join(", "));

    let mut c4 = Check::new();
    let a1 = ens.functional_at(1.0)?;
    let (m, v) = wf_functional_moments(WF_TAU, WF_TAU, 2.0, 1.0);
    let (me, ve): (Estimate, Estimate) = (mean_estimate(&a1), variance_estimate(&a1));
    c4.metric("mean_hat", me.value);
    c4.metric("mean_se", me.se);
    c4.metric("mean", m);
    c4.metric("var_hat", ve.value);
    c4.metric("var_se", ve.se);
    c4.metric("var", v);
    c4.require(me.within(m, 3.0), format!("mean {:.4}+-{:.4} vs {m:.4}", me.value, me.se));
    c4.require(ve.within(v, 3.0), format!("variance {:.4}+-{:.4} vs {v:.4}", ve.value, ve.se));
    let c4 = c4.done(format!(
        "mean {:.4}+-{:.4} vs {m:.4}, variance {:.4}+-{:.4} vs {v:.4}",
        me.value, me.se, ve.value, ve.se
    ));
    Ok((c3, c4))
}

fn wf_monte_carlo(id: u8, profile: Profile, seed: u64) -> Result<Check> {
    let (c3, c4) = wf_monte_carlo_pair(profile, seed)?;
    Ok(if id == 3 { c3 } else { c4 })
}

fn criterion_5() -> Result<Check> {
    let mut c = Check::new();
    let mut gaps = Vec::new();
    for conv in MixtureConvention::ALL {
        let law = SubordinatorLaw::wright_fisher(2.0, 1.0, conv, DEFAULT_ZEROS)?;
        let mut worst = 0.0f64;
        for mu in [0.5, 1.0, 2.0] {
            worst = worst.max(lk_consistency(&law, mu, DEFAULT_ZEROS)?.abs_gap);
        }
        c.metric(format!("max_abs_gap_{}", conv.name()), worst);
        gaps.push((conv, worst));
    }
    let passing: Vec<_> = gaps.iter().filter(|(_, g)| *g <= 1e-4).collect();
    c.require(passing.len() == 1, format!("{} conventions pass", passing.len()));
    if let [(winner, _)] = passing[..] {
        let loser = gaps.iter().find(|(conv, _)| conv != winner).map(|g| g.1).unwrap_or(0.0);
        c.require(loser > 1e-3, format!("losing convention misses by only {loser:.2e}"));
        let s = format!(
            "{} selected; gaps {}",
            winner.name(),
            gaps.iter()
                .map(|(conv, g)| format!("{} {g:.2e}", conv.name()))
                .collect::<Vec<_>>()
                .join(", ")
        );
        return Ok(c.done(s));
    }
    Ok(c)
}

fn criterion_6(profile: Profile, seed: u64) -> Result<Check> {
    let mut c = Check::new();
    let law = SubordinatorLaw::wright_fisher_arbitrated(2.0, 1.0, DEFAULT_ZEROS)?;
    let kappa = law.cumulants(2)?;
    let slope = law.exponent.slope_at_zero(1e-5)?;
    c.metric("kappa1", kappa[0]);
    c.metric("kappa2", kappa[1]);
    c.metric("slope_gap", (kappa[0] - slope).abs());
    c.require((kappa[0] - slope).abs() <= 1e-8, format!("kappa1 - slope = {:.2e}", kappa[0] - slope));

    let n = profile.pick(10_000, 100_000);
    let xs = IncrementSampler::new(&law, DEFAULT_CUTOFF, DEFAULT_JUMP_BUDGET)?.sample_many(1.0, n, seed)?;
    let (m, v) = (mean_estimate(&xs), variance_estimate(&xs));
    c.metric("sample_mean", m.value);
    c.metric("sample_var", v.value);
    c.require(m.within(kappa[0], 3.0), format!("sample mean {:.4}+-{:.4}", m.value, m.se));
    c.require(v.within(kappa[1], 3.0), format!("sample variance {:.4}+-{:.4}", v.value, v.se));

    let low = jump_moment(&law, 0.4, DEFAULT_ZEROS)?;
    let high = jump_moment(&law, 0.6, DEFAULT_ZEROS)?;
    c.require(matches!(low, JumpMoment::Divergent { .. }), format!("r = 0.4 gave {low:?}"));
    c.require(matches!(high, JumpMoment::Finite(_)), format!("r = 0.6 gave {high:?}"));
    Ok(c.done(format!(
        "kappa1 = {:.6} matches slope; samples {:.4}+-{:.4} / {:.4}+-{:.4} vs {:.4} / {:.4}; r=0.4 diverges, r=0.6 finite",
        kappa[0], m.value, m.se, v.value, v.se, kappa[0], kappa[1]
    )))
}

fn criterion_7() -> Result<Check> {
    let mut c = Check::new();
    let (beta, gamma_): (f64, f64) = (2.0, 1.0);
    for mu in [0.5, 1.0, 2.0] {
        let lim = 2.0 * gamma_ * mu / (beta + (beta * beta + 4.0 * mu).sqrt());
        let rel = (feller_phi_n(1e4, 1e-4, beta, 1.0, mu)? / lim - 1.0).abs();
        c.metric(format!("rel_gap_mu{mu}"), rel);
        c.require(rel <= 0.01, format!("mu = {mu}: relative gap {rel:.3e}"));
    }
    let mus: Vec<f64> = (0..=200).map(|i| 0.05 * i as f64).collect();
    let fit = ig_parameter_fit(beta, gamma_, &mus)?;
    c.metric("ig_sup_gap", fit.max_abs_gap);
    c.metric("ig_mean", fit.mean);
    c.metric("ig_shape", fit.shape);
    c.metric("ig_shape_alternative", gamma_ * gamma_ / beta);
    c.require(fit.max_abs_gap <= 1e-10, format!("IG sup gap {:.2e}", fit.max_abs_gap));
    c.require((fit.mean - gamma_ / beta).abs() <= 1e-8, format!("IG mean {}", fit.mean));
    Ok(c.done(format!(
        "n = 1e4 within 1%; IG sup gap {:.1e}, mean {}, shape {} (gamma^2/beta = {})",
        fit.max_abs_gap,
        fit.mean,
        fit.shape,
        gamma_ * gamma_ / beta
    )))
}

fn criterion_8() -> Result<Check> {
    let mut c = Check::new();
    let n: f64 = 1e6;
    for mu in [0.5, 1.0, 2.0] {
        let rel = (rbm_phi_n(n, n.powf(-0.25), 1.0, mu)? / mu - 1.0).abs();
        c.metric(format!("rel_gap_mu{mu}"), rel);
        c.require(rel <= 0.02, format!("mu = {mu}: relative gap {rel:.3e}"));
    }
    let ratio = airy_laplace_ratio(400.0, 1.0, 20.0, 1.0)?;
    c.metric("airy_ratio", ratio);
    c.require((ratio / 0.25 - 1.0).abs() <= 0.01, format!("Airy ratio {ratio}"));
    Ok(c.done(format!("rbm within 2% of mu; Airy ratio {ratio:.5}")))
}

fn criterion_9(profile: Profile, seed: u64) -> Result<Check> {
    let mut c = Check::new();
    let samples = profile.pick(400_000, 4_000_000);
    let eps = [1e-2, 1e-3];
    let report = compound_poisson_limit_stats(3.0, 1.0, &eps, 10, samples, seed)?;
    let (a, b) = (&report.rows[0], &report.rows[1]);
    for row in &report.rows {
        c.metric(format!("rho_hat_eps{}", row.eps), row.rho.value);
        c.metric(format!("rho_se_eps{}", row.eps), row.rho.se);
    }
    c.require(b.rho.within(0.25, 3.0), format!("rho {:.4}+-{:.4} at eps = 1e-3", b.rho.value, b.rho.se));
    // linear extrapolation of ρ̂ to ε = 0 against the identity at the smallest ε
    let w = b.eps / (a.eps - b.eps);
    let extrapolated = Estimate {
        value: b.rho.value - w * (a.rho.value - b.rho.value),
        se: ((1.0 + w) * b.rho.se).hypot(w * a.rho.se),
    };
    let diff = b.identity.value - extrapolated.value;
    let se = b.identity.se.hypot(extrapolated.se);
    c.metric("rho_extrapolated", extrapolated.value);
    c.metric("identity", b.identity.value);
    c.metric("identity_se", b.identity.se);
    c.require(diff.abs() <= 3.0 * se, format!("identity {:.4} vs extrapolated {:.4}", b.identity.value, extrapolated.value));
    Ok(c.done(format!(
        "rho {:.4}+-{:.4} at eps 1e-3 (limit 0.25); identity {:.4}+-{:.4} vs extrapolation {:.4}+-{:.4}",
        b.rho.value, b.rho.se, b.identity.value, b.identity.se, extrapolated.value, extrapolated.se
    )))
}

fn criterion_10(seed: u64) -> Result<Check> {
    let mut c = Check::new();

    let mut recurrence = 0.0f64;
    for nu in [1.0, 1.5, 2.0, 3.3] {
        for i in 1..40 {
            let x = 0.37 * (i * i) as f64 / 4.0;
            let lhs = bessel_i(nu - 1.0, x)? - bessel_i(nu + 1.0, x)?;
            let rhs = 2.0 * nu / x * bessel_i(nu, x)?;
            recurrence = recurrence.max((lhs / rhs - 1.0).abs());
        }
    }
    c.metric("bessel_recurrence", recurrence);
    c.require(recurrence < 1e-9, format!("Bessel recurrence {recurrence:.2e}"));

    let mut residual = 0.0f64;
    for nu in [0.0, 0.5, 1.0, 2.0] {
        for &z in &bessel_j_zeros(nu, 300)?.zeros {
            residual = residual.max(bessel_j(nu, z)?.abs());
        }
    }
    c.metric("zero_residual", residual);
    c.require(residual <= 1e-10, format!("zero residual {residual:.2e}"));

    let sandwich = (0..200).all(|i| {
        let y = 2.0 + 0.25 * i as f64;
        let (lo, hi) = airy_tail_bounds(y);
        let ai = airy_ai(y);
        lo <= ai && ai <= hi
    });
    c.require(sandwich, "Airy tail sandwich violated");

    let opts = WfExponentOptions::default();
    for tau in [1e-2, 1e-3] {
        let p = WfScaling::along(tau, 2.0, 1.0, 1.0)?;
        let seq = wf_coefficients_adaptive(&p, 1.5, &opts)?;
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        for i in 0..=200 {
            let v = u_mu(&seq, i as f64 / 200.0, 1e-4)?;
            monotone &= v < prev;
            prev = v;
        }
        c.require(monotone, format!("u not decreasing at tau = {tau}"));
        let slope = u_mu_derivative_at_one(&seq);
        let expected = -(p.lambda * p.tau + 1.5) / p.beta;
        c.require((slope - expected).abs() < 1e-8, format!("boundary slope {slope} vs {expected}"));
    }

    let lim = wf_limit_coefficients(1.0f64, 2.0, 400)?;
    c.require(coefficient_decay_check(&lim, 0.5)?.constant < 1.0, "limit decay constant >= 1");
    let p = WfScaling::new(1e-3, 1e-3, 2.0, 1.0, 1.0)?;
    let a = coefficient_decay_check(&wf_coefficients(&p, 4.0, 200)?, 0.5)?;
    let b = coefficient_decay_check(&wf_coefficients(&p, 4.0, 400)?, 0.5)?;
    c.metric("decay_constant", b.constant);
    c.require(a.stable_against(&b, 0.01), "decay constant unstable under doubling");

    let model = DiffusionModel::WrightFisher {
        tau: 1e-2,
        alpha: 1e-2,
        beta: 2.0,
    };
    let mut spec = EnsembleSpec::new(model, 0.5, 2e-4, 64, seed, Start::Stationary);
    spec.record_stride = 25;
    spec.laplace_probes.push(LaplaceProbe { lambda: 1.0, mu: 1.0 });
    let one = simulate_ensemble_with_workers(&spec, 1)?;
    let many = simulate_ensemble_with_workers(&spec, 4)?;
    c.require(one == many, "ensemble depends on the worker count");
    let f = MixingMeasure::Beta { alpha: 0.3, beta: 3.0 };
    let pool = |w: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| crate::Error::InvalidParameter(e.to_string()))
    };
    let s1 = pool(1)?.install(|| sample_ind_model(&f, 20, 20_000, seed))?;
    let s4 = pool(4)?.install(|| sample_ind_model(&f, 20, 20_000, seed))?;
    c.require(s1 == s4, "spike counts depend on the worker count");
    Ok(c.done("Bessel recurrence, zero residuals, Airy sandwich, u monotone with boundary slope, decay stability, worker determinism"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_cover_every_criterion_once() {
        let mut ids: Vec<u8> = [Group::Specfun, Group::Wf, Group::Subordinator, Group::Feller, Group::Rbm, Group::Spiking]
            .iter()
            .flat_map(|g| g.criteria().iter().copied())
            .collect();
        ids.sort();
        assert_eq!(ids, Group::All.criteria());
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let o = run_criterion(11, Profile::Smoke, 1);
        assert!(!o.passed);
        assert!(o.summary.starts_with("error"));
    }

    #[test]
    fn analytic_criteria_pass() {
        for id in [1, 7, 8] {
            let o = run_criterion(id, Profile::Smoke, DEFAULT_SEED);
            assert!(o.passed, "{}", o.line());
        }
    }
}
