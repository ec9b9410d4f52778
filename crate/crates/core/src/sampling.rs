//! Random variates that stay accurate for tiny shape parameters.
//!
//! Gamma and Beta draws with shape near `1e-4` put almost all their mass in
//! values far below the double range of `U^{1/a}`; everything here works with
//! logarithms until the final exponentiation.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// `Gamma(shape, 1)` for `shape ≥ 1` by Marsaglia–Tsang squeeze rejection.
#[inline]
fn gamma_at_least_one<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = normal_variate(rng);
        let t = 1.0 + c * z;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.random::<f64>();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u > 0.0 && u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// `ln U` for `U` uniform on `(0, 1]`.
#[inline]
pub(crate) fn ln_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (1.0 - rng.random::<f64>()).ln()
}

/// `ln G` with `G ~ Gamma(shape, 1)`.
///
/// Below shape 1 uses `G = G' U^{1/a}` with `G' ~ Gamma(a + 1, 1)`.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        gamma_at_least_one(shape, rng).ln()
    } else {
        let lu = ln_uniform(rng);
        gamma_at_least_one(shape + 1.0, rng).ln() + lu / shape
    }
}

/// `Gamma(shape, 1)`, returning exactly 0 whenever the draw lies below
/// `e^{−230}`.
///
/// For shapes near 0 most draws are that small and the bulk sample is
/// skipped: `U^{1/a} < e^{−270}` with `G' < e^{40}` fails only with
/// probability below `1e−15`.
#[inline]
pub fn gamma_variate_floored<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        return gamma_at_least_one(shape, rng);
    }
    let lu = ln_uniform(rng) / shape;
    if lu < -270.0 {
        return 0.0;
    }
    let g = gamma_at_least_one(shape + 1.0, rng);
    let v = g.ln() + lu;
    if v < -230.0 {
        0.0
    } else {
        v.exp()
    }
}

/// `Gamma(shape, rate)`; may return 0 when the draw underflows.
pub fn gamma_variate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    ln_gamma_variate(shape, rng).exp() / rate
}

/// `(X, 1 − X)` with `X ~ Beta(a, b)`, each side computed without
/// cancellation.
pub fn beta_variate_pair<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> (f64, f64) {
    let la = ln_gamma_variate(a, rng);
    let lb = ln_gamma_variate(b, rng);
    let m = la.max(lb);
    let lse = m + ((la - m).exp() + (lb - m).exp()).ln();
    ((la - lse).exp(), (lb - lse).exp())
}

pub fn beta_variate<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    beta_variate_pair(a, b, rng).0
}

pub fn exponential_variate<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>();
    -(1.0 - u).ln() / rate
}

pub fn normal_variate<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn poisson_variate<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        // sequential inversion; e^{-m} by series while the chain of
        // products stays exact to double precision
        let p0 = if mean < 1e-3 {
            1.0 - mean * (1.0 - mean * (0.5 - mean * (1.0 / 6.0 - mean / 24.0)))
        } else {
            (-mean).exp()
        };
        let u: f64 = rng.random::<f64>();
        let mut k = 0u64;
        let mut p = p0;
        let mut cdf = p0;
        while u >= cdf {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                break;
            }
            cdf = next;
        }
        return k;
    }
    let p: f64 = Poisson::new(mean).expect("mean checked positive").sample(rng);
    p as u64
}

/// Noncentral chi-square with `df` degrees of freedom and noncentrality `nc`,
/// as a Poisson mixture of central chi-squares.
pub fn noncentral_chi2_variate<R: Rng + ?Sized>(df: f64, nc: f64, rng: &mut R) -> f64 {
    let n = poisson_variate(0.5 * nc, rng);
    2.0 * gamma_variate(0.5 * df + n as f64, 1.0, rng)
}

/// As [`noncentral_chi2_variate`] with draws below `2e^{−230}` returned as
/// exactly 0; see [`gamma_variate_floored`].
#[inline]
pub fn noncentral_chi2_variate_floored<R: Rng + ?Sized>(df: f64, nc: f64, rng: &mut R) -> f64 {
    let n = if nc > 0.0 { poisson_variate(0.5 * nc, rng) } else { 0 };
    2.0 * gamma_variate_floored(0.5 * df + n as f64, rng)
}

/// `Binomial(k, p)` for `p` in `[0, 1]`; small `k` by direct Bernoulli trials.
pub fn binomial_variate<R: Rng + ?Sized>(k: u64, p: f64, rng: &mut R) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return k;
    }
    if k <= 64 {
        return (0..k).filter(|_| rng.random::<f64>() < p).count() as u64;
    }
    rand_distr::Binomial::new(k, p).expect("p checked in range").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stats::mean_estimate;

    #[test]
    fn tiny_shape_gamma_mean() {
        let mut rng = substream(11, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| gamma_variate(0.01, 2.0, &mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0 && x.is_finite()));
        assert!(mean_estimate(&xs).within(0.005, 3.0));
    }

    #[test]
    fn floored_gamma_matches_plain_law() {
        let mut rng = substream(15, 0);
        for &shape in &[1e-3, 0.3, 2.5] {
            let xs: Vec<f64> = (0..200_000).map(|_| gamma_variate_floored(shape, &mut rng)).collect();
            assert!(mean_estimate(&xs).within(shape, 3.0), "shape {shape}");
            let tiny = xs.iter().filter(|&&x| x > 0.0 && x < 1e-100).count();
            assert_eq!(tiny, 0);
        }
    }

    #[test]
    fn poisson_inversion_mean() {
        let mut rng = substream(16, 0);
        for &m in &[1e-4, 0.7, 12.0, 80.0] {
            let xs: Vec<f64> = (0..100_000).map(|_| poisson_variate(m, &mut rng) as f64).collect();
            let e = mean_estimate(&xs);
            assert!(e.within(m, 3.0) || (m < 1e-3 && e.value < 1e-2), "mean {m}: {e:?}");
        }
    }

    #[test]
    fn beta_pair_sums_to_one() {
        let mut rng = substream(12, 0);
        for _ in 0..1000 {
            let (x, y) = beta_variate_pair(1e-3, 2.0, &mut rng);
            assert!((x + y - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn noncentral_chi2_mean() {
        let mut rng = substream(13, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| noncentral_chi2_variate(0.5, 3.0, &mut rng)).collect();
        assert!(mean_estimate(&xs).within(3.5, 3.0));
    }

    #[test]
    fn binomial_edges_and_mean() {
        let mut rng = substream(14, 0);
        assert_eq!(binomial_variate(10, 0.0, &mut rng), 0);
        assert_eq!(binomial_variate(10, 1.0, &mut rng), 10);
        let xs: Vec<f64> = (0..50_000).map(|_| binomial_variate(200, 0.1, &mut rng) as f64).collect();
        assert!(mean_estimate(&xs).within(20.0, 3.0));
    }
}
