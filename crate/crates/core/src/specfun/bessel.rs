//! Bessel functions of real order and nonnegative real argument.
//!
//! `I_ν`: ascending series (all terms positive, compensated) for `x ≤ 50`,
//! Hankel's exponentially scaled expansion above.
//!
//! `J_ν`: ascending series for `x ≤ 8`, Schläfli's integral for the middle
//! range and the Hankel amplitude/phase expansion once `x ≥ 25 + ν²`.

use std::f64::consts::PI;

use super::gamma::gamma_ln_unchecked;
use crate::error::{domain, Error, Result};
use crate::quad::{gauss_legendre_48, gauss_legendre_96, gauss_legendre_on};
use crate::scalar::CompensatedSum;

/// Argument at which `I_ν` switches from the series to the asymptotic form.
pub const I_SERIES_LIMIT: f64 = 50.0;
/// Upper end of the ascending-series range of `J_ν`.
pub const J_SERIES_LIMIT: f64 = 8.0;

fn check(func: &'static str, nu: f64, x: f64) -> Result<()> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain(func, format!("order {nu} must be finite and nonnegative")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain(func, format!("argument {x} must be finite and nonnegative")));
    }
    Ok(())
}

/// Modified Bessel function of the first kind `I_ν(x)`.
pub fn bessel_i(nu: f64, x: f64) -> Result<f64> {
    check("bessel_i", nu, x)?;
    if use_i_series(nu, x) {
        Ok(i_series(nu, x))
    } else {
        let s = i_asymptotic_scaled(nu, x);
        if x > 709.0 {
            return Err(Error::Overflow(format!("I_{nu}({x}) exceeds f64 range; use bessel_i_scaled")));
        }
        Ok(s * x.exp())
    }
}

/// Exponentially scaled `e^{−x} I_ν(x)`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    check("bessel_i_scaled", nu, x)?;
    if use_i_series(nu, x) {
        Ok(i_series(nu, x) * (-x).exp())
    } else {
        Ok(i_asymptotic_scaled(nu, x))
    }
}

fn use_i_series(nu: f64, x: f64) -> bool {
    x <= I_SERIES_LIMIT || nu * nu > x
}

/// Ascending series of `I_ν`; exposed for switchover tests.
pub fn i_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let q = 0.25 * x * x;
    let mut term = (nu * (0.5 * x).ln() - gamma_ln_unchecked(nu + 1.0)).exp();
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        acc.add(term);
        if term < 1e-17 * acc.value() && k > 0.5 * x {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    acc.value()
}

/// Hankel expansion of `e^{−x} I_ν(x)`; exposed for switchover tests.
pub fn i_asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * x);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// `I_{ν+1}(x) / I_ν(x)` from the scaled values.
pub fn bessel_i_ratio(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        check("bessel_i_ratio", nu, x)?;
        return Ok(0.0);
    }
    Ok(bessel_i_scaled(nu + 1.0, x)? / bessel_i_scaled(nu, x)?)
}

/// Bessel function of the first kind `J_ν(x)`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check("bessel_j", nu, x)?;
    Ok(bessel_j_unchecked(nu, x))
}

pub(crate) fn bessel_j_unchecked(nu: f64, x: f64) -> f64 {
    if x <= J_SERIES_LIMIT {
        j_series(nu, x)
    } else if x >= hankel_threshold(nu) {
        j_hankel(nu, x)
    } else {
        j_schlafli(nu, x)
    }
}

fn hankel_threshold(nu: f64) -> f64 {
    25.0 + nu * nu
}

/// Alternating ascending series of `J_ν`.
pub fn j_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let q = -0.25 * x * x;
    let mut term = (nu * (0.5 * x).ln() - gamma_ln_unchecked(nu + 1.0)).exp();
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let mut k = 0.0;
    let mut peak = term.abs();
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        acc.add(term);
        peak = peak.max(term.abs());
        if term.abs() < 1e-18 * peak && k > 0.5 * x {
            break;
        }
    }
    acc.value()
}

/// Schläfli's integral representation, valid for every `x > 0`.
pub fn j_schlafli(nu: f64, x: f64) -> f64 {
    let rule = gauss_legendre_96();
    let panels = ((x + nu) / 30.0).ceil().max(1.0) as usize;
    let width = PI / panels as f64;
    let mut first = 0.0;
    for p in 0..panels {
        let lo = p as f64 * width;
        first += gauss_legendre_on(rule, lo, lo + width, |t| (nu * t - x * t.sin()).cos());
    }
    first /= PI;
    let s = (nu * PI).sin();
    if s.abs() < 1e-15 {
        return first;
    }
    let upper = (45.0 / x).asinh() + 1.0;
    let second = gauss_legendre_on(gauss_legendre_48(), 0.0, upper, |t| (-x * t.sinh() - nu * t).exp());
    first - s / PI * second
}

/// Hankel amplitude/phase expansion for large `x`.
pub fn j_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let (p, q) = hankel_pq(mu, x);
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn hankel_pq(mu: f64, x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (8.0 * kf * x);
        if term.abs() >= prev && k > 2 {
            break;
        }
        prev = term.abs();
        // a_k/x^k contributes to Q for odd k and P for even k, alternating.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn bessel_j_derivative(nu: f64, x: f64, j_nu: f64) -> f64 {
    nu / x * j_nu - bessel_j_unchecked(nu + 1.0, x)
}

/// Positive zeros `j_{ν,1} < j_{ν,2} < …` of `J_ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselZeroTable {
    pub order: f64,
    pub zeros: Vec<f64>,
}

impl BesselZeroTable {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    /// `k`-th zero, 1-based. Beyond the table the McMahon expansion is used.
    pub fn zero(&self, k: usize) -> f64 {
        if k >= 1 && k <= self.zeros.len() {
            self.zeros[k - 1]
        } else {
            mcmahon_zero(self.order, k)
        }
    }
}

/// McMahon's large-`k` expansion of `j_{ν,k}`.
pub fn mcmahon_zero(nu: f64, k: usize) -> f64 {
    let m = 4.0 * nu * nu;
    let b = (k as f64 + 0.5 * nu - 0.25) * PI;
    let e = 8.0 * b;
    let e2 = e * e;
    let m1 = m - 1.0;
    b - m1 / e
        - 4.0 * m1 * (7.0 * m - 31.0) / (3.0 * e * e2)
        - 32.0 * m1 * (83.0 * m * m - 982.0 * m + 3779.0) / (15.0 * e * e2 * e2)
        - 64.0 * m1 * (6949.0 * m * m * m - 153_855.0 * m * m + 1_585_743.0 * m - 6_277_237.0)
            / (105.0 * e * e2 * e2 * e2)
}

/// First `count` positive zeros of `J_ν`, each bracketed around its McMahon
/// estimate and refined by safeguarded Newton iteration.
pub fn bessel_j_zeros(nu: f64, count: usize) -> Result<BesselZeroTable> {
    check("bessel_j_zeros", nu, 0.0)?;
    if count == 0 {
        return Err(domain("bessel_j_zeros", "count must be at least 1"));
    }
    let mut zeros = Vec::with_capacity(count);
    let mut prev = 0.0f64;
    for k in 1..=count {
        let guess = mcmahon_zero(nu, k);
        let floor = prev + 1e-9;
        let mut lo = (guess - 0.5).max(floor);
        let mut hi = guess + 0.5;
        let mut flo = bessel_j_unchecked(nu, lo);
        let mut fhi = bessel_j_unchecked(nu, hi);
        let mut widen = 0;
        while flo * fhi > 0.0 {
            widen += 1;
            if widen > 16 {
                return Err(Error::Convergence {
                    what: "Bessel zero bracket",
                    detail: format!("nu = {nu}, k = {k}, guess = {guess}"),
                });
            }
            lo = (lo - PI / 4.0).max(floor);
            hi += PI / 4.0;
            flo = bessel_j_unchecked(nu, lo);
            fhi = bessel_j_unchecked(nu, hi);
        }
        let z = refine_zero(nu, lo, hi, flo, guess.clamp(lo, hi))?;
        zeros.push(z);
        prev = z;
    }
    Ok(BesselZeroTable { order: nu, zeros })
}

fn refine_zero(nu: f64, mut lo: f64, mut hi: f64, flo: f64, start: f64) -> Result<f64> {
    let lo_sign = flo.signum();
    let mut x = start;
    for _ in 0..200 {
        let f = bessel_j_unchecked(nu, x);
        if f == 0.0 {
            return Ok(x);
        }
        if f.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let df = bessel_j_derivative(nu, x, f);
        let mut next = x - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x || hi - lo <= 4e-16 * x {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        what: "Bessel zero refinement",
        detail: format!("nu = {nu}, bracket [{lo}, {hi}]"),
    })
}
