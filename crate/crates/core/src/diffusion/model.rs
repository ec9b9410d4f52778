use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{beta_variate, exponential_variate, gamma_variate, noncentral_chi2_variate_floored, normal_variate};

/// Keeps Wright–Fisher states off the entrance boundary at 1.
pub const WF_UPPER_CLAMP: f64 = 1.0 - 1e-12;

/// Grid-resolution requirement for the Wright–Fisher fast time scale.
pub const WF_STEPS_PER_TAU: f64 = 50.0;

/// Prelimit diffusions, each instantaneously reflected at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DiffusionModel {
    /// Generator `(1/τ)[x(1−x)f'' + (α(1−x) − βx)f']`, functional `(1/τ)∫X`.
    WrightFisher { tau: f64, alpha: f64, beta: f64 },
    /// Generator `n[x f'' + (α − βx)f']`, functional `n∫X`.
    Feller { n: f64, alpha: f64, beta: f64 },
    /// Generator `n[f'' − β f']`, functional `β∫X`.
    ReflectedBm { n: f64, beta_n: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Model-specific default: `LocalCir` for Wright–Fisher, `Exact`
    /// otherwise.
    #[default]
    Auto,
    /// Exact CIR transition with the `(1 − x)` diffusion factor frozen over
    /// the step. Wright–Fisher only.
    LocalCir,
    /// Full-truncation Euler; for reflected BM a Gaussian step folded by `|·|`.
    Euler,
    /// Exact transition: noncentral chi-square for Feller, bridge minimum for
    /// reflected BM.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "x", rename_all = "snake_case")]
pub enum Start {
    Zero,
    Stationary,
    Fixed(f64),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl DiffusionModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::WrightFisher { tau, alpha, beta } => {
                positive("tau", tau)?;
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                if beta <= 1.0 {
                    return Err(Error::InvalidParameter(format!("Wright-Fisher needs beta > 1, got {beta}")));
                }
                Ok(())
            }
            Self::Feller { n, alpha, beta } => {
                positive("n", n)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Self::ReflectedBm { n, beta_n } => {
                positive("n", n)?;
                positive("beta_n", beta_n)
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::WrightFisher { .. } => "wright_fisher",
            Self::Feller { .. } => "feller",
            Self::ReflectedBm { .. } => "reflected_bm",
        }
    }

    pub fn upper_bound(&self) -> f64 {
        match self {
            Self::WrightFisher { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Prefactor of `∫X` in the additive functional.
    pub fn functional_scale(&self) -> f64 {
        match *self {
            Self::WrightFisher { tau, .. } => 1.0 / tau,
            Self::Feller { n, .. } => n,
            Self::ReflectedBm { beta_n, .. } => beta_n,
        }
    }

    pub fn stationary_mean(&self) -> f64 {
        match *self {
            Self::WrightFisher { alpha, beta, .. } => alpha / (alpha + beta),
            Self::Feller { alpha, beta, .. } => alpha / beta,
            Self::ReflectedBm { beta_n, .. } => 1.0 / beta_n,
        }
    }

    /// Largest admissible step, where the model imposes one.
    pub fn max_dt(&self) -> Option<f64> {
        match *self {
            Self::WrightFisher { tau, .. } => Some(tau / WF_STEPS_PER_TAU),
            _ => None,
        }
    }

    pub fn resolve_scheme(&self, scheme: Scheme) -> Result<Scheme> {
        let resolved = match (self, scheme) {
            (Self::WrightFisher { .. }, Scheme::Auto) => Scheme::LocalCir,
            (_, Scheme::Auto) => Scheme::Exact,
            (Self::WrightFisher { .. }, Scheme::Exact) => {
                return Err(Error::InvalidParameter("no exact Wright-Fisher transition; use local_cir or euler".into()))
            }
            (Self::WrightFisher { .. }, s) => s,
            (_, Scheme::LocalCir) => {
                return Err(Error::InvalidParameter("local_cir applies to Wright-Fisher only".into()))
            }
            (_, s) => s,
        };
        Ok(resolved)
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, start: Start, rng: &mut R) -> Result<f64> {
        match start {
            Start::Zero => Ok(0.0),
            Start::Stationary => Ok(self.stationary_sample(rng)),
            Start::Fixed(x) => {
                if x >= 0.0 && x < self.upper_bound() && x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "start {x} outside the state space of {}",
                        self.family()
                    )))
                }
            }
        }
    }

    /// A draw from the stationary law: `Beta(α, β)`, `Gamma(α, β)` or
    /// `Exponential(β_n)`.
    pub fn stationary_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::WrightFisher { alpha, beta, .. } => beta_variate(alpha, beta, rng).min(WF_UPPER_CLAMP),
            Self::Feller { alpha, beta, .. } => gamma_variate(alpha, beta, rng),
            Self::ReflectedBm { beta_n, .. } => exponential_variate(beta_n, rng),
        }
    }

    pub(crate) fn stepper(&self, scheme: Scheme, dt: f64) -> Result<Stepper> {
        let scheme = self.resolve_scheme(scheme)?;
        Ok(match (*self, scheme) {
            (Self::WrightFisher { tau, alpha, beta }, Scheme::LocalCir) => {
                let kappa = (alpha + beta) / tau;
                let decay = (-kappa * dt).exp();
                Stepper::WfLocalCir {
                    alpha,
                    decay,
                    // c(x) = (1 − x) σ₀²(1 − e^{−κh})/(4κ) with σ₀² = 2/τ
                    c0: -(-kappa * dt).exp_m1() / (2.0 * kappa * tau),
                }
            }
            (Self::WrightFisher { tau, alpha, beta }, _) => Stepper::WfEuler { tau, alpha, beta, dt },
            (Self::Feller { n, alpha, beta }, Scheme::Exact) => {
                let kappa = n * beta;
                let decay = (-kappa * dt).exp();
                let c = -(-kappa * dt).exp_m1() * 2.0 * n / (4.0 * kappa);
                Stepper::FellerExact {
                    df: 2.0 * alpha,
                    decay,
                    c,
                }
            }
            (Self::Feller { n, alpha, beta }, _) => Stepper::FellerEuler { n, alpha, beta, dt },
            (Self::ReflectedBm { n, beta_n }, s) => Stepper::Rbm {
                drift: -n * beta_n * dt,
                var: 2.0 * n * dt,
                exact: s == Scheme::Exact,
            },
        })
    }
}

/// One-step transition with all step-size constants precomputed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stepper {
    WfLocalCir { alpha: f64, decay: f64, c0: f64 },
    WfEuler { tau: f64, alpha: f64, beta: f64, dt: f64 },
    FellerExact { df: f64, decay: f64, c: f64 },
    FellerEuler { n: f64, alpha: f64, beta: f64, dt: f64 },
    Rbm { drift: f64, var: f64, exact: bool },
}

impl Stepper {
    /// Next state, and whether the path touched 0 during the step where the
    /// scheme can tell.
    #[inline]
    pub(crate) fn step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> (f64, bool) {
        match *self {
            Self::WfLocalCir { alpha, decay, c0 } => {
                let free = 1.0 - x;
                let c = c0 * free;
                let df = 2.0 * alpha / free;
                let nc = x * decay / c;
                ((c * noncentral_chi2_variate_floored(df, nc, rng)).min(WF_UPPER_CLAMP), false)
            }
            Self::WfEuler { tau, alpha, beta, dt } => {
                let xp = x.clamp(0.0, 1.0);
                let drift = (alpha * (1.0 - xp) - beta * xp) / tau;
                let vol = (2.0 * xp * (1.0 - xp) / tau * dt).sqrt();
                let next = x + drift * dt + vol * normal_variate(rng);
                (next.clamp(0.0, WF_UPPER_CLAMP), false)
            }
            Self::FellerExact { df, decay, c } => (c * noncentral_chi2_variate_floored(df, x * decay / c, rng), false),
            Self::FellerEuler { n, alpha, beta, dt } => {
                let xp = x.max(0.0);
                let next = x + n * (alpha - beta * xp) * dt + (2.0 * n * xp * dt).sqrt() * normal_variate(rng);
                (next.max(0.0), false)
            }
            Self::Rbm { drift, var, exact } => {
                let y = x + drift + var.sqrt() * normal_variate(rng);
                if exact {
                    // minimum of the Brownian bridge from x to y
                    let u: f64 = rng.random::<f64>();
                    let spread = ((y - x) * (y - x) - 2.0 * var * (1.0 - u).ln()).sqrt();
                    let low = 0.5 * (x + y - spread);
                    if low < 0.0 {
                        (y - low, true)
                    } else {
                        (y, false)
                    }
                } else {
                    (y.abs(), y <= 0.0)
                }
            }
        }
    }
}

/// Mean and variance of `(1/τ)∫_0^t X` for stationary Wright–Fisher.
///
/// `Var = 2 Var[X] (θt − 1 + e^{−θt}) / (τθ)²` with `θ = (α + β)/τ` and
/// `Var[X] = αβ/((α+β)²(α+β+1))`.
pub fn wf_functional_moments(tau: f64, alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    let s = alpha + beta;
    let theta = s / tau;
    let mean = t * alpha / tau / s;
    let var_x = alpha * beta / (s * s * (s + 1.0));
    let z = theta * t;
    let shape = z + (-z).exp_m1();
    (mean, 2.0 * var_x * shape / (tau * theta).powi(2))
}

/// Mean and variance of `n∫_0^t X` for stationary Feller.
pub fn feller_functional_moments(n: f64, alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    let theta = n * beta;
    let var_x = alpha / (beta * beta);
    let z = theta * t;
    (n * t * alpha / beta, 2.0 * n * n * var_x * (z + (-z).exp_m1()) / (theta * theta))
}
