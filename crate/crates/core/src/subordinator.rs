//! Lévy–Khinchine data of the Wright–Fisher limit subordinator.
//!
//! The jump density is the exponential mixture `π(x) = Σ w_k ρ_k e^{−ρ_k x}`
//! whose rates are built from the zeros `j_k` of `J_{β−1}`. Two rate
//! conventions are available, `ρ_k = (2 j_k)²` and `ρ_k = (j_k / 2)²`; only
//! the one selected by [`arbitrate`] reproduces the Laplace exponent.
//!
//! Sums over `k` are truncated and completed by an integral tail that uses
//! `j_k ≈ π(k + c)`, `c = (β − 1)/2 − 1/4`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::analytic::feller_phi_limit;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scalar::{CompensatedSum, Real};
use crate::specfun::{bessel_j_zeros, gamma, BesselZeroTable, RayleighTable};
use crate::wf_exponent::wf_phi_limit;

pub const DEFAULT_ZEROS: usize = 10_000;

/// Default small-jump cutoff for [`sample_increment`].
pub const DEFAULT_CUTOFF: f64 = 1e-6;

/// Largest admissible expected jump count per increment.
pub const DEFAULT_JUMP_BUDGET: f64 = 1e7;

#[derive(Clone)]
pub enum LaplaceExponent {
    WfLimit { beta: f64, gamma: f64 },
    FellerLimit { beta: f64, gamma: f64 },
    /// Pure drift `Φ(μ) = bμ`, the reflected Brownian motion limit.
    RbmLimit { drift: f64 },
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for LaplaceExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WfLimit { beta, gamma } => write!(f, "WfLimit {{ beta: {beta}, gamma: {gamma} }}"),
            Self::FellerLimit { beta, gamma } => write!(f, "FellerLimit {{ beta: {beta}, gamma: {gamma} }}"),
            Self::RbmLimit { drift } => write!(f, "RbmLimit {{ drift: {drift} }}"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl LaplaceExponent {
    pub fn family(&self) -> &str {
        match self {
            Self::WfLimit { .. } => "wf_limit",
            Self::FellerLimit { .. } => "feller_limit",
            Self::RbmLimit { .. } => "rbm_limit",
            Self::Custom { name, .. } => name,
        }
    }

    pub fn evaluate(&self, mu: f64) -> Result<f64> {
        if !(mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")));
        }
        match self {
            Self::WfLimit { beta, gamma } => wf_phi_limit(mu, *beta, *gamma),
            Self::FellerLimit { beta, gamma } => feller_phi_limit(mu, *beta, *gamma),
            Self::RbmLimit { drift } => Ok(drift * mu),
            Self::Custom { f, .. } => Ok(f(mu)),
        }
    }

    /// `Φ'(0)` by Richardson-extrapolated one-sided differences.
    pub fn slope_at_zero(&self, h: f64) -> Result<f64> {
        // Second-order one-sided differences, one Richardson step on top.
        let d = |h: f64| -> Result<f64> { Ok((4.0 * self.evaluate(h)? - self.evaluate(2.0 * h)?) / (2.0 * h)) };
        let coarse = d(2.0 * h)?;
        let fine = d(h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureConvention {
    /// `ρ_k = (2 j_k)²`.
    PaperPiDens,
    /// `ρ_k = (j_k / 2)²`.
    PartialFraction,
}

impl MixtureConvention {
    pub const ALL: [MixtureConvention; 2] = [Self::PaperPiDens, Self::PartialFraction];

    /// Factor `s` in `ρ_k = (s j_k)²`.
    pub fn zero_scale(&self) -> f64 {
        match self {
            Self::PaperPiDens => 2.0,
            Self::PartialFraction => 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PaperPiDens => "paper_pi_dens",
            Self::PartialFraction => "partial_fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureTerm {
    pub rate: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SubordinatorLaw {
    pub exponent: LaplaceExponent,
    pub drift: f64,
    pub beta: f64,
    pub gamma: f64,
    pub jump_mixture: Vec<MixtureTerm>,
    pub zero_table: BesselZeroTable,
    pub convention: MixtureConvention,
}

impl SubordinatorLaw {
    /// Wright–Fisher limit law with `zeros` tabulated mixture terms.
    pub fn wright_fisher(beta: f64, gamma: f64, convention: MixtureConvention, zeros: usize) -> Result<Self> {
        if !(beta > 1.0 && beta.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need beta > 1 and gamma > 0, got beta = {beta}, gamma = {gamma}"
            )));
        }
        let zero_table = bessel_j_zeros(beta - 1.0, zeros)?;
        let s = convention.zero_scale();
        let jump_mixture = zero_table
            .zeros
            .iter()
            .map(|j| MixtureTerm {
                rate: (s * j).powi(2),
                weight: gamma,
            })
            .collect();
        Ok(Self {
            exponent: LaplaceExponent::WfLimit { beta, gamma },
            drift: 0.0,
            beta,
            gamma,
            jump_mixture,
            zero_table,
            convention,
        })
    }

    /// Law under the convention picked by [`arbitrate`].
    pub fn wright_fisher_arbitrated(beta: f64, gamma: f64, zeros: usize) -> Result<Self> {
        let report = arbitrate(beta, gamma, &[0.5, 1.0, 2.0], zeros)?;
        let convention = report.selected.ok_or_else(|| Error::Convergence {
            what: "mixture arbitration",
            detail: "no convention reproduces the Laplace exponent".into(),
        })?;
        Self::wright_fisher(beta, gamma, convention, zeros)
    }

    /// Asymptotic rates `ρ_k ≈ a²(k + c)²` as `(a, c)`.
    fn rate_asymptote(&self) -> (f64, f64) {
        (self.convention.zero_scale() * PI, 0.5 * (self.beta - 1.0) - 0.25)
    }

    /// Mixture term `k` (1-based), extrapolating beyond the table.
    pub fn term(&self, k: usize) -> MixtureTerm {
        if k <= self.jump_mixture.len() {
            self.jump_mixture[k - 1]
        } else {
            MixtureTerm {
                rate: (self.convention.zero_scale() * self.zero_table.zero(k)).powi(2),
                weight: self.gamma,
            }
        }
    }

    pub fn cumulants(&self, n_max: usize) -> Result<Vec<f64>> {
        cumulants(self.beta, self.gamma, n_max)
    }

    pub fn moments(&self, t: f64, n_max: usize) -> Result<Vec<f64>> {
        Ok(moments(&self.cumulants(n_max)?, t, n_max))
    }
}

/// Jump density `π(x)` summed until the Gaussian-type tail bound falls below
/// `1e-10` of the partial sum; `terms` is the starting truncation.
pub fn jump_density(law: &SubordinatorLaw, x: f64, terms: usize) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            func: "jump_density",
            detail: format!("density diverges at x = {x}"),
        });
    }
    let (a, c) = law.rate_asymptote();
    let b = a * a * x;
    let mut n = terms.max(1);
    loop {
        let mut acc = CompensatedSum::new();
        for k in (1..=n).rev() {
            let t = law.term(k);
            acc.add(t.weight * t.rate * (-t.rate * x).exp());
        }
        let value = acc.value();
        // ∫_{u0}^∞ γ a² u² e^{−b u²} du with erfc(z) ≤ e^{−z²}/(z√π)
        let u0 = n as f64 + 0.5 + c;
        let tail = law.gamma * a * a * (-b * u0 * u0).exp() * (u0 / (2.0 * b) + 1.0 / (4.0 * b * b * u0));
        if tail <= 1e-10 * value {
            return Ok(value);
        }
        if n > 1 << 24 {
            return Err(Error::Convergence {
                what: "jump density",
                detail: format!("tail {tail:e} at {n} terms"),
            });
        }
        n *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkCheck {
    pub value: f64,
    pub abs_gap: f64,
    /// `abs_gap / |Φ(μ)|`; independent of `γ`.
    pub rel_gap: f64,
}

/// `Σ_{k ≤ terms} w_k μ/(μ + ρ_k)` completed by the integral tail, compared
/// against the law's exponent.
pub fn lk_consistency(law: &SubordinatorLaw, mu: f64, terms: usize) -> Result<LkCheck> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let mut acc = CompensatedSum::new();
    for k in (1..=terms).rev() {
        let t = law.term(k);
        acc.add(t.weight * mu / (mu + t.rate));
    }
    let (a, c) = law.rate_asymptote();
    let s = mu.sqrt();
    let edge = terms as f64 + 0.5 + c;
    // ∫_{edge}^∞ μ/(μ + a²u²) du
    let tail = law.gamma * (s / a) * (FRAC_PI_2 - (a * edge / s).atan());
    let value = acc.value() + tail;
    let target = law.exponent.evaluate(mu)?;
    Ok(LkCheck {
        value,
        abs_gap: (value - target).abs(),
        rel_gap: (value - target).abs() / target.abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrationReport {
    pub mus: Vec<f64>,
    /// Largest relative gap over `mus` for each entry of [`MixtureConvention::ALL`].
    pub max_gaps: [f64; 2],
    pub tolerance: f64,
    /// The unique passing convention, if exactly one passes and the other
    /// misses by more than a factor 10.
    pub selected: Option<MixtureConvention>,
}

pub const ARBITRATION_TOL: f64 = 1e-4;

/// Decides which rate convention reproduces the Laplace exponent.
pub fn arbitrate(beta: f64, gamma: f64, mus: &[f64], zeros: usize) -> Result<ArbitrationReport> {
    let base = SubordinatorLaw::wright_fisher(beta, gamma, MixtureConvention::PartialFraction, zeros)?;
    let mut max_gaps = [0.0; 2];
    for (i, conv) in MixtureConvention::ALL.iter().enumerate() {
        let law = relabel(&base, *conv);
        for &mu in mus {
            max_gaps[i] = f64::max(max_gaps[i], lk_consistency(&law, mu, zeros)?.rel_gap);
        }
    }
    let tol = ARBITRATION_TOL;
    let pass: Vec<bool> = max_gaps.iter().map(|&g| g <= tol).collect();
    let selected = match (pass[0], pass[1]) {
        (true, false) if max_gaps[1] > 10.0 * tol => Some(MixtureConvention::ALL[0]),
        (false, true) if max_gaps[0] > 10.0 * tol => Some(MixtureConvention::ALL[1]),
        _ => None,
    };
    Ok(ArbitrationReport {
        mus: mus.to_vec(),
        max_gaps,
        tolerance: tol,
        selected,
    })
}

fn relabel(law: &SubordinatorLaw, convention: MixtureConvention) -> SubordinatorLaw {
    let s = convention.zero_scale();
    SubordinatorLaw {
        jump_mixture: law
            .zero_table
            .zeros
            .iter()
            .map(|j| MixtureTerm {
                rate: (s * j).powi(2),
                weight: law.gamma,
            })
            .collect(),
        convention,
        ..law.clone()
    }
}

/// Cumulants `κ_n = γ 4ⁿ n! σ_n(β − 1)`, `n = 1..=n_max`.
pub fn cumulants<T: Real>(beta: T, gamma: T, n_max: usize) -> Result<Vec<T>> {
    if !(beta > T::one()) || !(gamma > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "need beta > 1 and gamma > 0, got beta = {beta:?}, gamma = {gamma:?}"
        )));
    }
    let mut table = RayleighTable::new(beta - T::one())?;
    let sigma = table.up_to(n_max)?;
    let four = T::lit(4.0);
    let mut scale = gamma;
    Ok(sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            scale = scale * four * T::from_usize_lossy(i + 1);
            scale * s
        })
        .collect())
}

/// Raw moments `m_0..=m_{n_max}` of `A(t)` from the cumulants through
/// `m_{n+1} = t Σ_i C(n, i) κ_{i+1} m_{n−i}`.
pub fn moments<T: Real>(kappa: &[T], t: T, n_max: usize) -> Vec<T> {
    assert!(kappa.len() >= n_max, "need {n_max} cumulants");
    let mut m = Vec::with_capacity(n_max + 1);
    m.push(T::one());
    for n in 0..n_max {
        let mut acc = CompensatedSum::new();
        let mut binom = T::one();
        for i in 0..=n {
            acc.add(binom * kappa[i] * m[n - i]);
            binom = binom * T::from_usize_lossy(n - i) / T::from_usize_lossy(i + 1);
        }
        m.push(t * acc.value());
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpMoment {
    Finite(f64),
    /// Partial sums grow without bound; `decay` is the estimated power of the
    /// summand, which is at most 1.
    Divergent { decay: f64 },
}

/// `∫ x^r π(x) dx = Γ(1 + r) Σ w_k ρ_k^{−r}`.
pub fn jump_moment(law: &SubordinatorLaw, r: f64, terms: usize) -> Result<JumpMoment> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("moment order must be positive, got {r}")));
    }
    let n = terms.max(8);
    let summand = |k: usize| {
        let t = law.term(k);
        t.weight * t.rate.powf(-r)
    };
    let decay = (summand(n) / summand(2 * n)).ln() / std::f64::consts::LN_2;
    if decay <= 1.0 + 1e-3 {
        return Ok(JumpMoment::Divergent { decay });
    }
    let mut acc = CompensatedSum::new();
    for k in (1..=n).rev() {
        acc.add(summand(k));
    }
    let (a, c) = law.rate_asymptote();
    let edge = n as f64 + 0.5 + c;
    let tail = law.gamma * a.powf(-2.0 * r) * edge.powf(1.0 - 2.0 * r) / (2.0 * r - 1.0);
    Ok(JumpMoment::Finite(gamma(1.0 + r)? * (acc.value() + tail)))
}

/// Compound-Poisson approximation of the increments: jumps above the cutoff
/// are sampled exactly, the mean of the jumps below it is added as drift.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    pub cutoff: f64,
    /// `Π([ε, ∞))`.
    pub jump_rate: f64,
    /// `∫_0^ε x π(x) dx`.
    pub compensation: f64,
    pub budget: f64,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl IncrementSampler {
    pub fn new(law: &SubordinatorLaw, cutoff: f64, budget: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be positive, got {cutoff}")));
        }
        let mut rates = Vec::new();
        let mut masses = Vec::new();
        let mut comp = CompensatedSum::new();
        let mut k = 1;
        loop {
            let t = law.term(k);
            let y = t.rate * cutoff;
            if y > 45.0 {
                break;
            }
            rates.push(t.rate);
            masses.push(t.weight * (-y).exp());
            comp.add(t.weight * one_minus_exp_poly(y) / t.rate);
            k += 1;
        }
        // remaining components lie below the cutoff: Σ_{j≥k} w/ρ_j
        let (a, c) = law.rate_asymptote();
        let tail = law.gamma / (a * a * (k as f64 - 0.5 + c));
        let compensation = comp.value() + tail;

        let mut cumulative = Vec::with_capacity(masses.len());
        let mut run = CompensatedSum::new();
        for m in &masses {
            run.add(*m);
            cumulative.push(run.value());
        }
        let jump_rate = run.value();
        Ok(Self {
            cutoff,
            jump_rate,
            compensation,
            budget,
            rates,
            cumulative,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let expected = t * self.jump_rate;
        if expected > self.budget {
            return Err(Error::CutoffTooSmall {
                expected,
                budget: self.budget,
            });
        }
        let count = Poisson::new(expected)
            .map_err(|e| Error::InvalidParameter(format!("jump count law: {e}")))?
            .sample(rng) as u64;
        let mut acc = CompensatedSum::new();
        for _ in 0..count {
            let u: f64 = rng.random::<f64>() * self.jump_rate;
            let i = self.cumulative.partition_point(|&c| c <= u).min(self.rates.len() - 1);
            let e: f64 = Exp1.sample(rng);
            acc.add(self.cutoff + e / self.rates[i]);
        }
        Ok(acc.value() + t * self.compensation)
    }

    /// `n` increments over time `t`, the `i`-th drawn from substream `i`.
    pub fn sample_many(&self, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
        (0..n).map(|i| self.sample(t, &mut substream(seed, i as u64))).collect()
    }
}

/// `1 − e^{−y}(1 + y)` without cancellation for small `y`.
fn one_minus_exp_poly(y: f64) -> f64 {
    if y < 0.05 {
        // Σ_{n≥2} (−1)^n (n − 1) yⁿ / n!
        let mut term = y * y / 2.0;
        let mut sum = 0.0;
        for n in 2..20 {
            sum += (n as f64 - 1.0) * term;
            term *= -y / (n as f64 + 1.0);
        }
        sum
    } else {
        -(-y).exp_m1() - y * (-y).exp()
    }
}

/// One increment `A(t)` with jumps below `cutoff` replaced by their mean.
pub fn sample_increment(law: &SubordinatorLaw, t: f64, cutoff: f64, seed: u64) -> Result<f64> {
    IncrementSampler::new(law, cutoff, DEFAULT_JUMP_BUDGET)?.sample(t, &mut substream(seed, 0))
}
