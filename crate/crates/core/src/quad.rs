//! Quadrature rules.
//!
//! The workhorse is the trapezoid rule on the whole real line, which converges
//! geometrically for integrands analytic in a strip that decay at both ends.
//! Half-line and Beta-weighted integrals are mapped onto that form by
//! `x = e^s` and `x = 1/(1 + e^{-s})` respectively, which absorbs algebraic
//! endpoint singularities into exponentially decaying tails.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::specfun::gamma::beta_ln;

/// Step-halving control for [`trapezoid_real_line`].
#[derive(Debug, Clone, Copy)]
pub struct TrapezoidOptions {
    pub rel_tol: f64,
    /// Disagreement between the two finest levels above which the result is
    /// rejected.
    pub fail_tol: f64,
    pub initial_step: f64,
    pub max_halvings: u32,
}

impl Default for TrapezoidOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            fail_tol: 1e-7,
            initial_step: 0.5,
            max_halvings: 11,
        }
    }
}

const RANGE_LIMIT: f64 = 2000.0;

fn scan_edge(f: &mut impl FnMut(f64) -> f64, dir: f64, h: f64, scale: &mut f64) -> f64 {
    let mut s = 0.0;
    let mut quiet = 0;
    loop {
        s += dir * h;
        let v = f(s).abs();
        if v > *scale {
            *scale = v;
        }
        // NaN counts as quiet: it only appears where the weight underflows.
        if !(v > 1e-19 * *scale) {
            quiet += 1;
            if quiet >= 3 && s.abs() >= 4.0 {
                return s;
            }
        } else {
            quiet = 0;
        }
        if s.abs() > RANGE_LIMIT {
            return s;
        }
    }
}

/// `∫_{-∞}^{∞} f(s) ds` by the step-halving trapezoid rule.
pub fn trapezoid_real_line(
    what: &'static str,
    f: impl FnMut(f64) -> f64,
    opts: TrapezoidOptions,
) -> Result<f64> {
    trapezoid_with_floor(what, f, opts, 0.0)
}

/// As [`trapezoid_real_line`], with step gaps measured against
/// `max(|estimate|, floor)`.
fn trapezoid_with_floor(
    what: &'static str,
    mut f: impl FnMut(f64) -> f64,
    opts: TrapezoidOptions,
    floor: f64,
) -> Result<f64> {
    let h0 = opts.initial_step;
    let mut scale = f(0.0).abs();
    let hi = scan_edge(&mut f, 1.0, h0, &mut scale);
    let lo = scan_edge(&mut f, -1.0, h0, &mut scale);
    let n0 = ((hi - lo) / h0).round() as i64;

    let mut sum = 0.0;
    for i in 0..=n0 {
        sum += f(lo + i as f64 * h0);
    }
    let mut h = h0;
    let mut estimate = sum * h;
    let mut gap = f64::INFINITY;
    for level in 0..opts.max_halvings {
        let mut mid = 0.0;
        let count = n0 << level;
        for i in 0..count {
            mid += f(lo + (i as f64 + 0.5) * h);
        }
        sum += mid;
        h *= 0.5;
        let next = sum * h;
        gap = (next - estimate).abs() / next.abs().max(floor).max(f64::MIN_POSITIVE);
        estimate = next;
        if level >= 1 && gap <= opts.rel_tol {
            return Ok(estimate);
        }
    }
    if gap <= opts.fail_tol {
        Ok(estimate)
    } else {
        Err(Error::Quadrature { what, rel_gap: gap })
    }
}

/// `∫_0^∞ g(x) dx` via `x = e^s`.
pub fn half_line(
    what: &'static str,
    mut g: impl FnMut(f64) -> f64,
    opts: TrapezoidOptions,
) -> Result<f64> {
    trapezoid_real_line(
        what,
        |s| {
            let x = s.exp();
            if x == 0.0 || !x.is_finite() {
                0.0
            } else {
                g(x) * x
            }
        },
        opts,
    )
}

#[inline]
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Logistic map `s ↦ (x, 1 − x, ln x, ln(1 − x))` evaluated without
/// cancellation at either end.
#[inline]
pub fn logistic_point(s: f64) -> (f64, f64, f64, f64) {
    let ln_x = -softplus(-s);
    let ln_1mx = -softplus(s);
    (ln_x.exp(), ln_1mx.exp(), ln_x, ln_1mx)
}

/// `E[h(X)]` for `X ~ Beta(a, b)`, robust for shape `a` down to ~1e-6.
///
/// Writes the expectation as `h(0) + E[h(X) − h(0)]`; the bracket vanishes at
/// the origin and cancels the `x^{a−1}` singularity, after which the logistic
/// substitution makes the integrand decay exponentially on both sides.
/// Convergence is judged against `|h(0)|` too, so a bracket that is pure
/// rounding noise does not fail the rule.
pub fn beta_mean(
    what: &'static str,
    a: f64,
    b: f64,
    mut h: impl FnMut(f64) -> f64,
    opts: TrapezoidOptions,
) -> Result<f64> {
    let h0 = h(0.0);
    let ln_norm = beta_ln(a, b);
    let rest = trapezoid_with_floor(
        what,
        |s| {
            let (x, _, ln_x, ln_1mx) = logistic_point(s);
            let w = (a * ln_x + b * ln_1mx - ln_norm).exp();
            if w == 0.0 {
                0.0
            } else {
                (h(x) - h0) * w
            }
        },
        opts,
        h0.abs(),
    )?;
    Ok(h0 + rest)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn gauss_legendre_96() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(96))
}

pub(crate) fn gauss_legendre_48() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(48))
}

/// Fixed Gauss–Legendre rule mapped onto `[lo, hi]`.
pub fn gauss_legendre_on(rule: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&z, &w)| w * f(mid + half * z))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_on_real_line() {
        let v = trapezoid_real_line("gauss", |s| (-s * s).exp(), TrapezoidOptions::default()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn half_line_with_endpoint_singularity() {
        // ∫ x^{-1/2} e^{-x} = Γ(1/2)
        let v = half_line("gamma", |x| x.powf(-0.5) * (-x).exp(), TrapezoidOptions::default()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn beta_mean_of_x_matches_closed_form_for_tiny_shape() {
        for &(a, b) in &[(1e-4, 2.0), (0.3, 1.5), (2.0, 3.0)] {
            let v = beta_mean("mean", a, b, |x| x, TrapezoidOptions::default()).unwrap();
            assert!((v - a / (a + b)).abs() < 1e-13 * (a / (a + b)).max(1e-3), "{a} {b} {v}");
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
