//! Gamma-family functions.

use crate::error::{domain, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_ln(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(x)` for `x > 0`.
pub fn gamma_ln(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("gamma_ln", format!("x = {x} must be positive and finite")));
    }
    Ok(gamma_ln_unchecked(x))
}

pub(crate) fn gamma_ln_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1)/x keeps the Lanczos sum in its accurate range.
        lanczos_ln(x + 1.0) - x.ln()
    } else {
        lanczos_ln(x)
    }
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    gamma_ln(x).map(f64::exp)
}

/// `ln B(a, b)`.
pub fn beta_ln(a: f64, b: f64) -> f64 {
    gamma_ln_unchecked(a) + gamma_ln_unchecked(b) - gamma_ln_unchecked(a + b)
}

/// Upper incomplete gamma `Γ(a, y) = ∫_y^∞ ξ^{a−1} e^{−ξ} dξ`.
pub fn upper_incomplete_gamma(a: f64, y: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain("upper_incomplete_gamma", format!("a = {a} must be positive")));
    }
    if !(y >= 0.0) {
        return Err(domain("upper_incomplete_gamma", format!("y = {y} must be nonnegative")));
    }
    let lg = gamma_ln_unchecked(a);
    if y == 0.0 {
        return Ok(lg.exp());
    }
    if y < a + 1.0 {
        let p = lower_regularized_series(a, y, lg)?;
        Ok(lg.exp() * (1.0 - p))
    } else {
        Ok(upper_cf(a, y, lg)? * lg.exp())
    }
}

/// Regularized upper incomplete gamma `Q(a, y)`.
pub fn upper_regularized_gamma(a: f64, y: f64) -> Result<f64> {
    if !(a > 0.0) || !(y >= 0.0) {
        return Err(domain("upper_regularized_gamma", format!("a = {a}, y = {y}")));
    }
    let lg = gamma_ln_unchecked(a);
    if y == 0.0 {
        Ok(1.0)
    } else if y < a + 1.0 {
        Ok(1.0 - lower_regularized_series(a, y, lg)?)
    } else {
        upper_cf(a, y, lg)
    }
}

fn lower_regularized_series(a: f64, y: f64, lg: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= y / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            return Ok(sum * (-y + a * y.ln() - lg).exp());
        }
    }
    Err(Error::Convergence {
        what: "incomplete gamma series",
        detail: format!("a = {a}, y = {y}"),
    })
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, y)`.
fn upper_cf(a: f64, y: f64, lg: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = y + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok((-y + a * y.ln() - lg).exp() * h);
        }
    }
    Err(Error::Convergence {
        what: "incomplete gamma continued fraction",
        detail: format!("a = {a}, y = {y}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(gamma_ln(1.0).unwrap(), 0.0);
        assert!((gamma_ln(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        assert!((gamma(0.5).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        let mut f = 1.0f64;
        for n in 1..30 {
            f *= n as f64;
            let lg = gamma_ln(n as f64 + 1.0).unwrap();
            assert!((lg - f.ln()).abs() <= 1e-12 * f.ln().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn small_argument_uses_recurrence() {
        let x = 1e-4;
        // Γ(x) ≈ 1/x − γ_E
        let g = gamma(x).unwrap();
        assert!((g - (1.0 / x - 0.577_215_664_901_532_9 + 0.989_055_995_327_972_5 * x)).abs() < 1e-6);
    }

    #[test]
    fn incomplete_gamma_edge_cases() {
        assert!((upper_incomplete_gamma(2.5, 0.0).unwrap() - gamma(2.5).unwrap()).abs() < 1e-14);
        for &y in &[0.1, 1.0, 3.0, 20.0] {
            let v = upper_incomplete_gamma(1.0, y).unwrap();
            assert!((v / (-y).exp() - 1.0).abs() < 1e-12, "y = {y}");
        }
        // Γ(2, y) = (1 + y) e^{-y}
        for &y in &[0.5, 2.0, 7.0] {
            let v = upper_incomplete_gamma(2.0, y).unwrap();
            assert!((v / ((1.0 + y) * (-y).exp()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(gamma_ln(0.0).is_err());
        assert!(gamma_ln(-1.0).is_err());
        assert!(upper_incomplete_gamma(0.0, 1.0).is_err());
        assert!(upper_incomplete_gamma(1.0, -1.0).is_err());
    }
}
