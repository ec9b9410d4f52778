//! Kummer's confluent hypergeometric function of the second kind.

use super::gamma::gamma_ln_unchecked;
use crate::error::{domain, Result};
use crate::quad::{trapezoid_real_line, TrapezoidOptions};

/// `U(a, b, x) = Γ(a)^{-1} ∫_0^∞ e^{−tx} t^{a−1} (1+t)^{b−a−1} dt` for
/// `a, x > 0`, integrated over `t = e^s`.
///
/// For `a < 1` the `t^{a−1}` singularity is peeled off against
/// `∫ t^{a−1} e^{−t} dt = Γ(a)` so the remaining integrand decays on both
/// sides even as `a → 0`.
pub fn kummer_u(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain("kummer_u", format!("a = {a} must be positive")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("kummer_u", format!("x = {x} must be positive")));
    }
    if !b.is_finite() {
        return Err(domain("kummer_u", format!("b = {b} must be finite")));
    }
    let c = b - a - 1.0;
    let lg = gamma_ln_unchecked(a);
    let opts = TrapezoidOptions {
        rel_tol: 1e-12,
        ..TrapezoidOptions::default()
    };
    let log_kernel = move |s: f64| {
        let t = s.exp();
        let ln1pt = if s > 0.0 { s + (-s).exp().ln_1p() } else { t.ln_1p() };
        a * s - x * t + c * ln1pt - lg
    };
    if a < 1.0 {
        let rest = trapezoid_real_line(
            "kummer_u",
            |s| {
                let t = s.exp();
                log_kernel(s).exp() - (a * s - t - lg).exp()
            },
            opts,
        )?;
        Ok(1.0 + rest)
    } else {
        trapezoid_real_line("kummer_u", |s| log_kernel(s).exp(), opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_u_1_2() {
        for &x in &[0.5, 1.0, 2.0] {
            let u = kummer_u(1.0, 2.0, x).unwrap();
            assert!((u * x - 1.0).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn positive_for_small_a() {
        for &a in &[1e-4, 0.01, 0.5, 3.0] {
            for &b in &[-1.0, 0.001, 2.0] {
                assert!(kummer_u(a, b, 0.7).unwrap() > 0.0);
            }
        }
        // U(a, b, x) → 1 as a → 0 at fixed x.
        assert!((kummer_u(1e-8, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(kummer_u(0.0, 1.0, 1.0).is_err());
        assert!(kummer_u(1.0, 1.0, 0.0).is_err());
    }
}
