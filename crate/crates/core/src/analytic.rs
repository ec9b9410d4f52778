//! Prelimit exponents with closed-form fundamental solutions: the Feller
//! (CIR) diffusion through Kummer's `U`, and reflected Brownian motion with
//! drift through the Airy function.

use crate::error::{Error, Result};
use crate::quad::{beta_mean, half_line, TrapezoidOptions};
use crate::scalar::Real;
use crate::specfun::{gamma_ln, ln_airy_ai, upper_regularized_gamma};

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Constants of the Feller fundamental solution
/// `φ(x) = e^{Lx} U(A, α, Sx) / Γ(A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FellerAux {
    pub l: f64,
    pub r: f64,
    pub s: f64,
    pub a_n: f64,
}

impl FellerAux {
    pub fn new(n: f64, alpha_n: f64, beta: f64, lambda: f64, mu: f64) -> Self {
        let root = (beta * beta + 4.0 * mu).sqrt();
        // β − root cancels for small μ
        let l = -2.0 * mu / (beta + root);
        let r = 0.5 * (beta + root);
        let s = root;
        Self {
            l,
            r,
            s,
            a_n: (lambda / n - alpha_n * l) / s,
        }
    }
}

/// Prelimit Feller exponent
/// `Φ_n(μ) = nαμ E[g^{−α−1}; Beta(A,2)] / ((1 + A) E[g^{−α}; Beta(A,1)])`
/// with `g(r) = R(1 − r) + S r`.
pub fn feller_phi_n(n: f64, alpha_n: f64, beta: f64, lambda: f64, mu: f64) -> Result<f64> {
    for (name, v) in [("n", n), ("alpha_n", alpha_n), ("beta", beta), ("lambda", lambda)] {
        positive(name, v)?;
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let aux = FellerAux::new(n, alpha_n, beta, lambda, mu);
    let g = |r: f64| aux.r * (1.0 - r) + aux.s * r;
    let opts = TrapezoidOptions::default();
    let num = beta_mean("Feller numerator", aux.a_n, 2.0, |r| g(r).powf(-alpha_n - 1.0), opts)?;
    let den = beta_mean("Feller denominator", aux.a_n, 1.0, |r| g(r).powf(-alpha_n), opts)?;
    Ok(n * alpha_n * mu * num / ((1.0 + aux.a_n) * den))
}

/// `Φ(μ) = 2γμ / (β + √(β² + 4μ))`.
pub fn feller_phi_limit<T: Real>(mu: T, beta: T, gamma: T) -> Result<T> {
    if !(mu >= T::zero()) || !(beta > T::zero()) || !(gamma > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "need mu >= 0, beta > 0, gamma > 0, got {mu:?}, {beta:?}, {gamma:?}"
        )));
    }
    let two = T::lit(2.0);
    Ok(two * gamma * mu / (beta + (beta * beta + T::lit(4.0) * mu).sqrt()))
}

/// `(γ/2)(√(β² + 4μ) − β)`, algebraically equal to [`feller_phi_limit`].
pub fn feller_phi_limit_difference_form<T: Real>(mu: T, beta: T, gamma: T) -> T {
    gamma / T::lit(2.0) * ((beta * beta + T::lit(4.0) * mu).sqrt() - beta)
}

/// Inverse-Gaussian exponent `(Λ/M)(√(1 + 2M²μ/Λ) − 1)`.
pub fn inverse_gaussian_exponent(mu: f64, mean: f64, shape: f64) -> f64 {
    let c = 2.0 * mean * mean / shape;
    // (√(1 + cμ) − 1) without cancellation
    (shape / mean) * c * mu / ((1.0 + c * mu).sqrt() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgFit {
    /// `M = Φ'(0)`.
    pub mean: f64,
    /// `Λ = −Φ'(0)³ / Φ''(0)`.
    pub shape: f64,
    pub max_abs_gap: f64,
}

/// Matches the inverse-Gaussian family to the Feller limit through `Φ'(0)`
/// and `Φ''(0)` and reports the sup gap on `mus`.
pub fn ig_parameter_fit(beta: f64, gamma: f64, mus: &[f64]) -> Result<IgFit> {
    positive("beta", beta)?;
    positive("gamma", gamma)?;
    let d1 = gamma / beta;
    let d2 = -2.0 * gamma / beta.powi(3);
    let mean = d1;
    let shape = -d1.powi(3) / d2;
    let mut max_abs_gap = 0.0f64;
    for &mu in mus {
        let gap = (inverse_gaussian_exponent(mu, mean, shape) - feller_phi_limit(mu, beta, gamma)?).abs();
        max_abs_gap = max_abs_gap.max(gap);
    }
    Ok(IgFit {
        mean,
        shape,
        max_abs_gap,
    })
}

/// Constants of the reflected-BM fundamental solution
/// `φ(x) = e^{βx/2} Ai(c + γx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbmAux {
    pub c_n: f64,
    pub gamma_n: f64,
    pub delta_n: f64,
    /// `c^{1/2} γ / δ`.
    pub rho: f64,
}

impl RbmAux {
    pub fn new(n: f64, beta_n: f64, lambda: f64, mu: f64) -> Self {
        let b2n = beta_n * beta_n * n;
        let mu23 = mu.powf(-2.0 / 3.0);
        let c_n = 0.25 * b2n.powf(2.0 / 3.0) * mu23 + lambda * b2n.powf(-1.0 / 3.0) * mu23;
        let gamma_n = mu.cbrt() * beta_n.cbrt() * n.powf(-1.0 / 3.0);
        let delta_n = 0.5 * beta_n;
        Self {
            c_n,
            gamma_n,
            delta_n,
            rho: c_n.sqrt() * gamma_n / delta_n,
        }
    }
}

/// `Ai(c + y) / Ai(c)` in log space.
fn ln_airy_shift(c: f64, y: f64, ln_ai_c: f64) -> f64 {
    ln_airy_ai(c + y) - ln_ai_c
}

/// Prelimit exponent of reflected BM with drift,
/// `μ ∫ β² x e^{−βx/2} Ai(c + γx) dx / ∫ β e^{−βx/2} Ai(c + γx) dx`.
pub fn rbm_phi_n(n: f64, beta_n: f64, lambda: f64, mu: f64) -> Result<f64> {
    for (name, v) in [("n", n), ("beta_n", beta_n), ("lambda", lambda), ("mu", mu)] {
        positive(name, v)?;
    }
    let aux = RbmAux::new(n, beta_n, lambda, mu);
    let ln_ai_c = ln_airy_ai(aux.c_n);
    if !ln_ai_c.is_finite() {
        return Err(Error::Overflow(format!("log Ai({}) not finite", aux.c_n)));
    }
    let opts = TrapezoidOptions::default();
    let weight = |x: f64| (-aux.delta_n * x + ln_airy_shift(aux.c_n, aux.gamma_n * x, ln_ai_c)).exp();
    let num = half_line("RBM numerator", |x| beta_n * beta_n * x * weight(x), opts)?;
    let den = half_line("RBM denominator", |x| beta_n * weight(x), opts)?;
    if !(num.is_finite() && den > 0.0) {
        return Err(Error::Overflow("Airy weight integrals left the double range".into()));
    }
    Ok(mu * num / den)
}

/// `(1/Ai(c)) ∫_0^∞ δ^{1+α}/Γ(1+α) e^{−δx} x^α Ai(c + γx) dx`.
pub fn airy_laplace_ratio(c: f64, gamma_: f64, delta_: f64, alpha_: f64) -> Result<f64> {
    for (name, v) in [("c", c), ("gamma", gamma_), ("delta", delta_), ("alpha", alpha_)] {
        positive(name, v)?;
    }
    let ln_ai_c = ln_airy_ai(c);
    let ln_norm = (1.0 + alpha_) * delta_.ln() - gamma_ln(1.0 + alpha_)?;
    half_line(
        "Airy Laplace ratio",
        |x| (ln_norm - delta_ * x + alpha_ * x.ln() + ln_airy_shift(c, gamma_ * x, ln_ai_c)).exp(),
        TrapezoidOptions::default(),
    )
}

/// Lower and upper bounds on [`airy_laplace_ratio`] built from the Airy tail
/// bounds and convexity of `y^{3/2}`; require `c > (3/2)^{2/3}`.
pub fn airy_laplace_bounds(c: f64, gamma_: f64, delta_: f64, alpha_: f64) -> Result<(f64, f64)> {
    for (name, v) in [("gamma", gamma_), ("delta", delta_), ("alpha", alpha_)] {
        positive(name, v)?;
    }
    if !(c > 1.5f64.powf(2.0 / 3.0)) {
        return Err(Error::InvalidParameter(format!("c must exceed (3/2)^(2/3), got {c}")));
    }
    let r = 1.5 * c.powf(-1.5);
    let dt = delta_ / gamma_;
    let sc = c.sqrt();
    let upper = (dt / (dt + sc)).powf(alpha_ + 1.0) / (1.0 - r);
    let b = dt + sc + 0.25 / c;
    let ct = b / c;
    let eta = (1.0 - r) * (-0.25 * ct.sqrt()).exp() * (1.0 - upper_regularized_gamma(1.0 + alpha_, b.powf(1.25))?);
    let lower = eta * (dt / b).powf(alpha_ + 1.0);
    Ok((lower, upper))
}
