//! Wright–Fisher prelimit and limit Laplace exponents.
//!
//! The decreasing fundamental solution of the killed generator is the power
//! series `u(x) = Σ a(k) (1 − x)^k`, whose coefficients obey a three-term
//! recursion. The prelimit exponent is the quotient of `u` integrated against
//! the representing measure and the speed measure. Both are Beta laws, so the
//! integrals go through [`beta_mean`].

use crate::error::{Error, Result};
use crate::quad::{beta_mean, TrapezoidOptions};
use crate::scalar::{CompensatedSum, Real};
use crate::specfun::bessel_i_ratio;

/// Coefficients with magnitude above this are taken as a sign of a
/// divergent recursion.
pub const COEFFICIENT_LIMIT: f64 = 1e6;

pub const DEFAULT_TRUNCATION: usize = 400;

pub const MAX_TRUNCATION: usize = 1 << 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WfScaling {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Limit of `alpha / tau` along the scaling sequence.
    pub gamma: f64,
    pub lambda: f64,
}

impl WfScaling {
    pub fn new(tau: f64, alpha: f64, beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            tau,
            alpha,
            beta,
            gamma,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    /// Point of the sequence with `alpha = gamma * tau`.
    pub fn along(tau: f64, beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(tau, gamma * tau, beta, gamma, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau", self.tau),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must exceed 1, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSource {
    Prelimit(WfScaling),
    Limit { beta: f64 },
}

impl CoefficientSource {
    pub fn beta(&self) -> f64 {
        match self {
            Self::Prelimit(p) => p.beta,
            Self::Limit { beta } => *beta,
        }
    }

    /// `λτ` in the prelimit, zero in the limit.
    fn killing(&self) -> f64 {
        match self {
            Self::Prelimit(p) => p.lambda * p.tau,
            Self::Limit { .. } => 0.0,
        }
    }

    fn alpha(&self) -> f64 {
        match self {
            Self::Prelimit(p) => p.alpha,
            Self::Limit { .. } => 0.0,
        }
    }
}

/// Coefficients `a(0..=K)` of `u(x) = Σ a(k)(1 − x)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeq<T> {
    pub coefficients: Vec<T>,
    pub source: CoefficientSource,
    pub mu: T,
}

impl<T: Real> CoefficientSeq<T> {
    pub fn truncation(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Recursion multipliers `(c(k−1), ĉ(k−2))` for index `k ≥ 2`.
    pub fn recursion_terms(&self, k: usize) -> (T, T) {
        recursion_terms(&self.source, self.mu, k)
    }

    /// `2 C K^{-1/2}` with `C = sup_{k ≥ K/2} k^{3/2} |a(k)|`: bounds the
    /// neglected tail whenever `|a(k)| ≤ C k^{-3/2}` persists past `K`.
    pub fn tail_bound(&self) -> T {
        let k_max = self.truncation();
        if k_max == 0 {
            return T::zero();
        }
        let start = (k_max / 2).max(1);
        let c = self.coefficients[start..]
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = T::from_usize_lossy(start + i);
                k.powf(T::lit(1.5)) * a.abs()
            })
            .fold(T::zero(), T::max);
        T::lit(2.0) * c / T::from_usize_lossy(k_max).sqrt()
    }

    /// Largest `|a(k) − c(k−1)a(k−1) + ĉ(k−2)a(k−2)|` relative to the size of
    /// the terms involved. Terms near the subnormal range are skipped.
    pub fn recursion_residual(&self) -> T {
        let a = &self.coefficients;
        let mut worst = T::zero();
        for k in 2..a.len() {
            let (c1, c2) = self.recursion_terms(k);
            let r = a[k] - (c1 * a[k - 1] - c2 * a[k - 2]);
            let scale = a[k].abs().max((c1 * a[k - 1]).abs()).max((c2 * a[k - 2]).abs());
            if scale > T::min_positive_value() / T::epsilon() {
                worst = worst.max(r.abs() / scale);
            }
        }
        worst
    }
}

fn recursion_terms<T: Real>(source: &CoefficientSource, mu: T, k: usize) -> (T, T) {
    let beta = T::lit(source.beta());
    let alpha = T::lit(source.alpha());
    let kill = T::lit(source.killing());
    let kf = T::from_usize_lossy(k);
    let one = T::one();
    let two = T::lit(2.0);
    let denom = kf * (beta + kf - one);
    let c1 = (kill + mu + (kf - one) * (kf + alpha + beta - two)) / denom;
    let c2 = mu / denom;
    (c1, c2)
}

fn check_mu<T: Real>(mu: T) -> Result<()> {
    if mu >= T::zero() && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu:?}")))
    }
}

/// Prelimit coefficients from the three-term recursion.
pub fn wf_coefficients<T: Real>(p: &WfScaling, mu: T, truncation: usize) -> Result<CoefficientSeq<T>> {
    p.validate()?;
    check_mu(mu)?;
    if truncation < 2 {
        return Err(Error::InvalidParameter(format!("truncation must be at least 2, got {truncation}")));
    }
    let source = CoefficientSource::Prelimit(*p);
    let mut a = Vec::with_capacity(truncation + 1);
    a.push(T::one());
    a.push((T::lit(p.lambda * p.tau) + mu) / T::lit(p.beta));
    for k in 2..=truncation {
        let (c1, c2) = recursion_terms(&source, mu, k);
        let next = c1 * a[k - 1] - c2 * a[k - 2];
        if !(next.abs() <= T::lit(COEFFICIENT_LIMIT)) {
            return Err(Error::CoefficientOverflow {
                k,
                value: next.to_f64().unwrap_or(f64::INFINITY),
            });
        }
        a.push(next);
    }
    Ok(CoefficientSeq {
        coefficients: a,
        source,
        mu,
    })
}

/// Limit coefficients `a(k) = μ^k / (k! (β)_k)`.
pub fn wf_limit_coefficients<T: Real>(mu: T, beta: f64, truncation: usize) -> Result<CoefficientSeq<T>> {
    check_mu(mu)?;
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must exceed 1, got {beta}")));
    }
    let b = T::lit(beta);
    let mut a = Vec::with_capacity(truncation + 1);
    a.push(T::one());
    for k in 1..=truncation {
        let kf = T::from_usize_lossy(k);
        let prev = a[k - 1];
        a.push(prev * mu / (kf * (b + kf - T::one())));
    }
    let seq = CoefficientSeq {
        coefficients: a,
        source: CoefficientSource::Limit { beta },
        mu,
    };
    debug_assert!(seq.recursion_residual() <= T::lit(64.0) * T::epsilon());
    Ok(seq)
}

/// `u(x)` by Horner's scheme in `1 − x`, refusing series whose tail bound
/// exceeds `tail_tol`.
pub fn u_mu<T: Real>(seq: &CoefficientSeq<T>, x: T, tail_tol: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::InvalidParameter(format!("x must lie in [0, 1], got {x:?}")));
    }
    let bound = seq.tail_bound();
    if !(bound <= tail_tol) {
        return Err(Error::Truncation {
            bound: bound.to_f64().unwrap_or(f64::INFINITY),
            tol: tail_tol.to_f64().unwrap_or(0.0),
        });
    }
    Ok(horner(&seq.coefficients, T::one() - x))
}

#[inline]
fn horner<T: Real>(a: &[T], y: T) -> T {
    a.iter().rev().fold(T::zero(), |acc, &c| acc * y + c)
}

/// `u'(1⁻) = −a(1)` recovered by differentiating the series term by term.
pub fn u_mu_derivative_at_one<T: Real>(seq: &CoefficientSeq<T>) -> T {
    // d/dx Σ a(k)(1−x)^k at x=1: only k=1 survives.
    let d: Vec<T> = seq
        .coefficients
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| -a * T::from_usize_lossy(k))
        .collect();
    horner(&d, T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// Stationary law, `Beta(α, β)`.
    Speed,
    /// `x/τ` times the speed measure.
    Representing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl MeasureSpec {
    pub fn speed(p: &WfScaling) -> Self {
        Self {
            kind: MeasureKind::Speed,
            alpha: p.alpha,
            beta: p.beta,
            tau: p.tau,
        }
    }

    pub fn representing(p: &WfScaling) -> Self {
        Self {
            kind: MeasureKind::Representing,
            ..Self::speed(p)
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self.kind {
            MeasureKind::Speed => 1.0,
            MeasureKind::Representing => self.alpha / (self.tau * (self.alpha + self.beta)),
        }
    }

    /// Shapes of the Beta law proportional to this measure.
    fn beta_shapes(&self) -> (f64, f64) {
        match self.kind {
            MeasureKind::Speed => (self.alpha, self.beta),
            MeasureKind::Representing => (self.alpha + 1.0, self.beta),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        let (a, b) = self.beta_shapes();
        let ln = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - crate::specfun::beta_ln(a, b);
        self.total_mass() * ln.exp()
    }

    pub fn integrate(&self, what: &'static str, h: impl FnMut(f64) -> f64, opts: TrapezoidOptions) -> Result<f64> {
        let (a, b) = self.beta_shapes();
        Ok(self.total_mass() * beta_mean(what, a, b, h, opts)?)
    }
}

/// Series truncation starts at `truncation` and doubles until the tail bound
/// drops below `tail_tol`; past `max_truncation` the evaluation fails.
#[derive(Debug, Clone, Copy)]
pub struct WfExponentOptions {
    pub truncation: usize,
    pub max_truncation: usize,
    pub tail_tol: f64,
    pub quad: TrapezoidOptions,
}

impl Default for WfExponentOptions {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
            max_truncation: MAX_TRUNCATION,
            tail_tol: 1e-5,
            quad: TrapezoidOptions::default(),
        }
    }
}

/// Prelimit coefficients with the truncation raised until the tail bound
/// meets `opts.tail_tol`.
pub fn wf_coefficients_adaptive(p: &WfScaling, mu: f64, opts: &WfExponentOptions) -> Result<CoefficientSeq<f64>> {
    let mut k = opts.truncation.max(2);
    loop {
        let seq = wf_coefficients(p, mu, k)?;
        let bound = seq.tail_bound();
        if bound <= opts.tail_tol {
            return Ok(seq);
        }
        if k >= opts.max_truncation {
            return Err(Error::Truncation {
                bound,
                tol: opts.tail_tol,
            });
        }
        k = (2 * k).min(opts.max_truncation);
    }
}

/// The two measure integrals of `u` entering the prelimit exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WfIntegrals {
    pub against_speed: f64,
    pub against_representing: f64,
}

impl WfIntegrals {
    pub fn phi(&self, mu: f64) -> f64 {
        mu * self.against_representing / self.against_speed
    }
}

pub fn wf_integrals(p: &WfScaling, mu: f64, opts: &WfExponentOptions) -> Result<WfIntegrals> {
    let seq = wf_coefficients_adaptive(p, mu, opts)?;
    let a = &seq.coefficients;
    let u = |x: f64| horner(a, 1.0 - x);
    let against_speed = MeasureSpec::speed(p).integrate("speed-measure integral", u, opts.quad)?;
    let against_representing = MeasureSpec::representing(p).integrate("representing-measure integral", u, opts.quad)?;
    Ok(WfIntegrals {
        against_speed,
        against_representing,
    })
}

/// Prelimit exponent `Φ_n(μ)`.
pub fn wf_phi_n(p: &WfScaling, mu: f64) -> Result<f64> {
    wf_phi_n_with(p, mu, &WfExponentOptions::default())
}

pub fn wf_phi_n_with(p: &WfScaling, mu: f64, opts: &WfExponentOptions) -> Result<f64> {
    check_mu(mu)?;
    if mu == 0.0 {
        return Ok(0.0);
    }
    Ok(wf_integrals(p, mu, opts)?.phi(mu))
}

/// `Φ(μ) = γ √μ I_β(2√μ) / I_{β−1}(2√μ)`.
pub fn wf_phi_limit(mu: f64, beta: f64, gamma: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(beta > 1.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need beta > 1 and gamma > 0, got beta = {beta}, gamma = {gamma}"
        )));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let s = mu.sqrt();
    Ok(gamma * s * bessel_i_ratio(beta - 1.0, 2.0 * s)?)
}

/// Continued fraction `μ/(β + μ/(β + 1 + …))` truncated after `depth`
/// partial denominators; excludes the factor `γ`.
pub fn wf_phi_cf<T: Real>(mu: T, beta: T, depth: usize) -> Result<T> {
    check_mu(mu)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("continued fraction depth must be at least 1".into()));
    }
    let mut r = beta + T::from_usize_lossy(depth - 1);
    for i in (0..depth - 1).rev() {
        r = beta + T::from_usize_lossy(i) + mu / r;
    }
    Ok(mu / r)
}

/// Empirical constant of the bound `|a(k)| ≤ C k^{-(2−ε)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub epsilon: f64,
    pub truncation: usize,
    pub constant: f64,
    /// Index attaining the supremum.
    pub argmax: usize,
}

impl DecayReport {
    pub fn is_finite(&self) -> bool {
        self.constant.is_finite()
    }

    pub fn stable_against(&self, other: &DecayReport, rel_tol: f64) -> bool {
        if !(self.is_finite() && other.is_finite()) {
            return false;
        }
        let scale = self.constant.abs().max(other.constant.abs());
        scale == 0.0 || (self.constant - other.constant).abs() <= rel_tol * scale
    }
}

pub fn coefficient_decay_check<T: Real>(seq: &CoefficientSeq<T>, epsilon: f64) -> Result<DecayReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mut constant = 0.0;
    let mut argmax = 0;
    for (k, a) in seq.coefficients.iter().enumerate().skip(1) {
        let v = a.to_f64().unwrap_or(f64::INFINITY).abs() * (k as f64).powf(2.0 - epsilon);
        if !(v <= constant) {
            constant = v;
            argmax = k;
        }
    }
    Ok(DecayReport {
        epsilon,
        truncation: seq.truncation(),
        constant,
        argmax,
    })
}

/// `Σ_k |a_n(k) − a(k)|` over the common truncation.
pub fn coefficient_gap<T: Real>(prelimit: &CoefficientSeq<T>, limit: &CoefficientSeq<T>) -> T {
    let mut acc = CompensatedSum::new();
    for (a, b) in prelimit.coefficients.iter().zip(&limit.coefficients) {
        acc.add((*a - *b).abs());
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(tau: f64) -> WfScaling {
        WfScaling::along(tau, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn first_coefficient() {
        let s = wf_coefficients(&p(0.01), 1.0f64, 10).unwrap();
        assert_eq!(s.coefficients[0], 1.0);
        assert!((s.coefficients[1] - 0.505).abs() < 1e-15);
        assert_eq!(s.recursion_residual(), 0.0);
    }

    #[test]
    fn zero_mu_small_killing_annihilates() {
        let q = WfScaling::new(1e-12, 1e-3, 2.0, 1.0, 1e-12).unwrap();
        let s = wf_coefficients(&q, 0.0f64, 50).unwrap();
        assert!(s.coefficients[1..].iter().all(|a| a.abs() < 1e-20));
    }

    #[test]
    fn limit_coefficients_closed_form() {
        let s = wf_limit_coefficients(1.0f64, 2.0, 10).unwrap();
        assert!((s.coefficients[2] - 1.0 / 12.0).abs() < 1e-16);
        assert!(s.recursion_residual() < 1e-14);
        let z = wf_limit_coefficients(0.0f64, 3.0, 10).unwrap();
        assert!(z.coefficients[1..].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn u_at_one_and_derivative() {
        let s = wf_coefficients(&p(0.01), 1.0f64, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(u_mu(&s, 1.0, 1.0).unwrap(), 1.0);
        assert!((u_mu_derivative_at_one(&s) + 1.01 / 2.0).abs() < 1e-8);
    }

    #[test]
    fn cf_first_convergent() {
        assert_eq!(wf_phi_cf(1.0, 2.0, 1).unwrap(), 0.5);
        assert!(wf_phi_cf(1.0f32, 2.0, 40).is_ok());
    }

    #[test]
    fn overflow_guard_trips() {
        let err = wf_coefficients(&p(0.1), 1e4f64, 50).unwrap_err();
        assert!(matches!(err, Error::CoefficientOverflow { .. }));
    }

    #[test]
    fn measure_masses() {
        let q = p(1e-2);
        let one = |_: f64| 1.0;
        let o = TrapezoidOptions::default();
        assert!((MeasureSpec::speed(&q).integrate("t", one, o).unwrap() - 1.0).abs() < 1e-12);
        let k = MeasureSpec::representing(&q);
        assert!((k.integrate("t", one, o).unwrap() - 1.0 / 2.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WfScaling::along(1e-2, 1.0, 1.0, 1.0).is_err());
        assert!(WfScaling::along(-1.0, 2.0, 1.0, 1.0).is_err());
        assert!(wf_phi_limit(-1.0, 2.0, 1.0).is_err());
    }
}
