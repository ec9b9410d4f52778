//! Airy functions on the real line, with a log-scaled `Ai` for large
//! arguments.
//!
//! `Ai` uses the Maclaurin series on `x ≤ 2`, the integral
//! `Ai(x) = π^{-1} √(x/3) K_{1/3}(ζ)` with `e^{ζ} K_ν(ζ) = ∫_0^∞ e^{−ζ(cosh t − 1)} cosh(νt) dt`
//! on `(2, 8)`, and the asymptotic expansion in `ζ = (2/3) x^{3/2}` from `8` on.
//! The series cannot go further than about `x = 2` without losing digits to
//! cancellation between its two halves.

use std::f64::consts::PI;

use crate::quad::{trapezoid_real_line, TrapezoidOptions};

/// `Ai(0) = 3^{−2/3} / Γ(2/3)`.
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// `−Ai'(0) = 3^{−1/3} / Γ(1/3)`.
pub const AIP0: f64 = 0.258_819_403_792_806_8;

pub const MACLAURIN_LIMIT: f64 = 2.0;
pub const ASYMPTOTIC_LIMIT: f64 = 8.0;

fn maclaurin_fg(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let mut f = 1.0;
    let mut g = x;
    let mut tf = 1.0;
    let mut tg = x;
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
        if tf.abs() < 1e-18 * f.abs() && tg.abs() < 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    (f, g)
}

/// Maclaurin-series `Ai`; exposed for the overlap test.
pub fn ai_maclaurin(x: f64) -> f64 {
    let (f, g) = maclaurin_fg(x);
    AI0 * f - AIP0 * g
}

/// Asymptotic sum `Σ (∓1)^k u_k / ζ^k` truncated at its smallest term.
fn asymptotic_sum(zeta: f64, alternating: bool) -> f64 {
    let mut u = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..100 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / (216.0 * kf * (2.0 * kf - 1.0));
        let next = u / zeta.powi(k);
        if next >= prev {
            break;
        }
        sum += if alternating && k % 2 == 1 { -next } else { next };
        prev = next;
        if next < 1e-17 {
            break;
        }
    }
    sum
}

/// `ln Ai(x)` from the asymptotic expansion; exposed for the overlap test.
pub fn ln_ai_asymptotic(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    -zeta - (2.0 * PI.sqrt()).ln() - 0.25 * x.ln() + asymptotic_sum(zeta, true).ln()
}

/// `ln Ai(x)` from the Macdonald-function integral; exposed for the overlap test.
pub fn ln_ai_integral(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let opts = TrapezoidOptions {
        rel_tol: 1e-15,
        ..TrapezoidOptions::default()
    };
    // Trapezoid over the whole line of an even integrand, halved.
    let scaled_k = 0.5
        * trapezoid_real_line("Airy integral", |t| (-zeta * (t.cosh() - 1.0)).exp() * (t / 3.0).cosh(), opts)
            .expect("smooth integrand converges");
    -zeta + ((x / 3.0).sqrt() / PI * scaled_k).ln()
}

/// `ln Ai(x)` for `x > 0`; stays finite long after `Ai` underflows.
pub fn ln_airy_ai(x: f64) -> f64 {
    if x <= MACLAURIN_LIMIT {
        ai_maclaurin(x).ln()
    } else if x < ASYMPTOTIC_LIMIT {
        ln_ai_integral(x)
    } else {
        ln_ai_asymptotic(x)
    }
}

/// Airy function `Ai(x)`. Accurate to ~1e-13 relative for `x ≥ −2`; the
/// Maclaurin branch loses digits for large negative arguments.
pub fn airy_ai(x: f64) -> f64 {
    if x <= MACLAURIN_LIMIT {
        ai_maclaurin(x)
    } else {
        ln_airy_ai(x).exp()
    }
}

/// Airy function `Bi(x)`.
pub fn airy_bi(x: f64) -> f64 {
    if x <= 10.0 {
        let (f, g) = maclaurin_fg(x);
        3f64.sqrt() * (AI0 * f + AIP0 * g)
    } else {
        let zeta = 2.0 / 3.0 * x * x.sqrt();
        zeta.exp() / (PI.sqrt() * x.powf(0.25)) * asymptotic_sum(zeta, false)
    }
}

/// Two-sided tail bound `(1 − r(y)) q(y) e(y) ≤ Ai(y) ≤ q(y) e(y)` for
/// `y > (3/2)^{2/3}`, returned as `(lower, upper)`.
pub fn airy_tail_bounds(y: f64) -> (f64, f64) {
    let r = 1.5 * y.powf(-1.5);
    let q = y.powf(-0.25);
    let e = (-2.0 / 3.0 * y.powf(1.5)).exp() / (4.0 * PI).sqrt();
    ((1.0 - r) * q * e, q * e)
}
