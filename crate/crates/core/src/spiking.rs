//! Binned spike counts of `K` exchangeable neurons driven by a mixing
//! variable: the independent mixture model, the doubly-stochastic model whose
//! mixing process is the integral of a diffusion, and a forward model driven
//! by subordinator increments.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::PathEnsemble;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::sampling::{beta_variate, binomial_variate, poisson_variate};
use crate::specfun::gamma::{beta_ln, gamma_ln};
use crate::stats::{batch_estimate, mean, Estimate};
use crate::subordinator::{IncrementSampler, SubordinatorLaw, DEFAULT_CUTOFF, DEFAULT_JUMP_BUDGET};

/// Bins per random substream; fixes the chunking so results do not depend on
/// the worker count.
const CHUNK: usize = 4096;

/// Batches for standard errors of nonlinear statistics.
const BATCHES: usize = 32;

/// Share of clamped increments above which the forward model warns.
pub const CLAMP_WARN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingMeasure {
    Beta { alpha: f64, beta: f64 },
    /// Point mass.
    Dirac { z: f64 },
    /// Uniform resampling of recorded values.
    Empirical { values: Vec<f64> },
}

impl MixingMeasure {
    /// `Be(α_ε, β)` with `α_ε = βrε/(1 − rε)`, whose mean is `rε`.
    pub fn beta_scaled(beta: f64, r: f64, eps: f64) -> Result<Self> {
        if !(beta > 0.0 && r > 0.0 && eps > 0.0 && r * eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need beta, r, eps > 0 and r eps < 1, got {beta}, {r}, {eps}"
            )));
        }
        Ok(Self::Beta {
            alpha: beta * r * eps / (1.0 - r * eps),
            beta,
        })
    }

    /// Unit-bin increments `∫_{j−1}^{j} X dt` of every path, pooled.
    pub fn from_ensemble(ens: &PathEnsemble, bin: f64) -> Result<Self> {
        let values = ensemble_bins(ens, bin)?.into_iter().flatten().collect();
        Self::empirical(values)
    }

    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::InvalidParameter("empirical mixing values must be nonempty and lie in [0, 1]".into()));
        }
        Ok(Self::Empirical { values })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Beta { alpha, beta } if *alpha > 0.0 && *beta > 0.0 => Ok(()),
            Self::Dirac { z } if (0.0..=1.0).contains(z) => Ok(()),
            Self::Empirical { values } if !values.is_empty() => Ok(()),
            other => Err(Error::InvalidParameter(format!("invalid mixing measure {other:?}"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Beta { alpha, beta } => beta_variate(*alpha, *beta, rng),
            Self::Dirac { z } => *z,
            Self::Empirical { values } => values[rng.random_range(0..values.len())],
        }
    }

    /// `(E[Z], Var[Z])`.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            Self::Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha / s, alpha * beta / (s * s * (s + 1.0)))
            }
            Self::Dirac { z } => (*z, 0.0),
            Self::Empirical { values } => {
                let m = mean(values);
                let v = mean(&values.iter().map(|z| (z - m) * (z - m)).collect::<Vec<_>>());
                (m, v)
            }
        }
    }

    /// `corr[B_k, B_l] = Var[Z] / (E[Z](1 − E[Z]))`.
    pub fn pairwise_correlation(&self) -> f64 {
        let (m, v) = self.moments();
        v / (m * (1.0 - m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// `S ~ Binomial(K, Z)`.
    #[default]
    Binomial,
    /// `S ~ Poisson(KZ)`; counts may exceed `K`.
    Poisson,
}

impl Generator {
    fn draw<R: Rng + ?Sized>(self, k: u64, z: f64, rng: &mut R) -> u64 {
        match self {
            Self::Binomial => binomial_variate(k, z, rng),
            Self::Poisson => poisson_variate(k as f64 * z, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeBatch {
    pub k: u64,
    pub counts: Vec<u64>,
    pub bin_width: f64,
    pub seed: u64,
    /// Length of each independent run when `counts` concatenates several;
    /// lagged statistics never straddle two runs.
    pub run_length: usize,
}

impl SpikeBatch {
    fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn mean_count(&self) -> Estimate {
        batch_estimate(&self.as_f64(), BATCHES.min(self.counts.len()), mean)
    }

    /// `P̂[S = k]` with a binomial standard error.
    pub fn frequency(&self, k: u64) -> Estimate {
        let n = self.counts.len() as f64;
        let p = self.counts.iter().filter(|&&c| c == k).count() as f64 / n;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / n).sqrt(),
        }
    }

    /// `ρ̂ = (m₂ − m₁²)/(m₁(1 − m₁))` with `m₁ = E[S]/K` and
    /// `m₂ = E[S(S−1)]/(K(K−1))` estimating `E[Z]` and `E[Z²]`.
    pub fn pairwise_correlation(&self) -> Result<Estimate> {
        if self.k < 2 {
            return Err(Error::InvalidParameter("pairwise correlation needs K >= 2".into()));
        }
        let k = self.k as f64;
        let stat = |xs: &[f64]| {
            let m1 = mean(xs) / k;
            let m2 = mean(&xs.iter().map(|s| s * (s - 1.0)).collect::<Vec<_>>()) / (k * (k - 1.0));
            (m2 - m1 * m1) / (m1 * (1.0 - m1))
        };
        Ok(batch_estimate(&self.as_f64(), BATCHES.min(self.counts.len()), stat))
    }

    /// Lag-`lag` autocorrelation pooled over runs, with a batch standard error
    /// across runs (or across blocks of a single run).
    pub fn lag_correlation(&self, lag: usize) -> Estimate {
        let xs = self.as_f64();
        let runs: Vec<&[f64]> = xs.chunks(self.run_length.max(1)).collect();
        let m = mean(&xs);
        let var = mean(&xs.iter().map(|x| (x - m) * (x - m)).collect::<Vec<_>>());
        let products: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| r.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).collect())
            .collect();
        let flat: Vec<f64> = products.iter().flatten().copied().collect();
        if flat.is_empty() || var == 0.0 {
            return Estimate { value: 0.0, se: 0.0 };
        }
        let est = batch_estimate(&flat, BATCHES.min(flat.len()), mean);
        Estimate {
            value: est.value / var,
            se: est.se / var,
        }
    }
}

fn check_counts(k: u64, bins: usize) -> Result<()> {
    if k == 0 || bins == 0 {
        return Err(Error::InvalidParameter(format!("need K >= 1 and at least one bin, got {k}, {bins}")));
    }
    Ok(())
}

/// Applies `draw` to bins in fixed chunks, each on its own substream.
fn chunked<F>(bins: usize, seed: u64, draw: F) -> Vec<u64>
where
    F: Fn(usize, &mut rand_chacha::ChaCha8Rng) -> u64 + Sync,
{
    let chunks = bins.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(bins);
            (lo..hi).map(|j| draw(j, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// `J` independent bins: `Z_j ~ F`, then `S_j | Z_j` from the generator.
pub fn sample_ind_model_with(f: &MixingMeasure, k: u64, bins: usize, seed: u64, generator: Generator) -> Result<SpikeBatch> {
    f.validate()?;
    check_counts(k, bins)?;
    let counts = chunked(bins, seed, |_, rng| {
        let z = f.sample(rng);
        generator.draw(k, z, rng)
    });
    Ok(SpikeBatch {
        k,
        counts,
        bin_width: 1.0,
        seed,
        run_length: bins,
    })
}

pub fn sample_ind_model(f: &MixingMeasure, k: u64, bins: usize, seed: u64) -> Result<SpikeBatch> {
    sample_ind_model_with(f, k, bins, seed, Generator::Binomial)
}

/// Per-neuron spikes `B_{jk}` of the independent model, row-major by bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRaster {
    pub k: usize,
    pub bins: usize,
    pub spikes: Vec<bool>,
}

impl SpikeRaster {
    pub fn bin(&self, j: usize) -> &[bool] {
        &self.spikes[j * self.k..(j + 1) * self.k]
    }

    /// Sample covariance of neurons `a` and `b` across bins.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let xa: Vec<f64> = (0..self.bins).map(|j| self.bin(j)[a] as u8 as f64).collect();
        let xb: Vec<f64> = (0..self.bins).map(|j| self.bin(j)[b] as u8 as f64).collect();
        let (ma, mb) = (mean(&xa), mean(&xb));
        mean(&xa.iter().zip(&xb).map(|(x, y)| (x - ma) * (y - mb)).collect::<Vec<_>>())
    }

    pub fn counts(&self, seed: u64) -> SpikeBatch {
        SpikeBatch {
            k: self.k as u64,
            counts: (0..self.bins).map(|j| self.bin(j).iter().filter(|&&b| b).count() as u64).collect(),
            bin_width: 1.0,
            seed,
            run_length: self.bins,
        }
    }
}

pub fn sample_ind_raster(f: &MixingMeasure, k: usize, bins: usize, seed: u64) -> Result<SpikeRaster> {
    f.validate()?;
    check_counts(k as u64, bins)?;
    let chunks = bins.div_ceil(CHUNK);
    let spikes = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, c as u64);
            let n = (bins - c * CHUNK).min(CHUNK);
            let mut out = Vec::with_capacity(n * k);
            for _ in 0..n {
                let z = f.sample(&mut rng);
                out.extend((0..k).map(|_| rng.random::<f64>() < z));
            }
            out
        })
        .collect();
    Ok(SpikeRaster { k, bins, spikes })
}

/// Bin integrals `∫ X dt` of each path over consecutive bins of width `bin`.
fn ensemble_bins(ens: &PathEnsemble, bin: f64) -> Result<Vec<Vec<f64>>> {
    if !(bin > 0.0) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {bin}")));
    }
    let bins = (ens.spec.horizon / bin + 1e-9).floor() as usize;
    if bins == 0 {
        return Err(Error::Horizon {
            horizon: ens.spec.horizon,
            required: bin,
        });
    }
    let idx = (0..=bins)
        .map(|j| ens.record_index(j as f64 * bin))
        .collect::<Result<Vec<_>>>()?;
    // the stored functional carries the family's prefactor
    let scale = ens.spec.model.functional_scale();
    Ok(ens
        .paths
        .iter()
        .map(|p| {
            idx.windows(2)
                .map(|w| ((p.a[w[1]] - p.a[w[0]]) / scale).clamp(0.0, 1.0))
                .collect()
        })
        .collect())
}

/// Spike counts whose success probabilities are the unscaled bin integrals
/// `Z_j = ∫_{j−1}^{j} X dt` of each path; runs are concatenated path by path.
pub fn sample_doubly_stochastic(ens: &PathEnsemble, k: u64, bin: f64, seed: u64) -> Result<SpikeBatch> {
    let z = ensemble_bins(ens, bin)?;
    let run_length = z[0].len();
    let flat: Vec<f64> = z.into_iter().flatten().collect();
    check_counts(k, flat.len())?;
    let counts = chunked(flat.len(), seed, |j, rng| binomial_variate(k, flat[j], rng));
    Ok(SpikeBatch {
        k,
        counts,
        bin_width: bin,
        seed,
        run_length,
    })
}

/// `P[S = s]` under the beta-binomial law with `K` trials.
pub fn beta_binomial_pmf(k: u64, s: u64, alpha: f64, beta: f64) -> Result<f64> {
    if s > k {
        return Ok(0.0);
    }
    let (kf, sf) = (k as f64, s as f64);
    let ln_choose = gamma_ln(kf + 1.0)? - gamma_ln(sf + 1.0)? - gamma_ln(kf - sf + 1.0)?;
    Ok((ln_choose + beta_ln(sf + alpha, kf - sf + beta) - beta_ln(alpha, beta)).exp())
}

/// `lim_{ε→0} (1 − P[S^ε = 0])/ε = βr Σ_{j<K} 1/(β + j)`.
pub fn compound_poisson_rate_limit(beta: f64, r: f64, k: u64) -> f64 {
    beta * r * (0..k).map(|j| 1.0 / (beta + j as f64)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonRow {
    pub eps: f64,
    pub rate: Estimate,
    /// `(1 − P[S = 0])/ε` from the beta-binomial law.
    pub rate_exact: f64,
    /// `P̂[J = k]` for `k = 1..=K`.
    pub jump_law: Vec<f64>,
    pub rho: Estimate,
    pub rho_exact: f64,
    /// `E[J(J−1)] / ((K−1)E[J])` from the same bins.
    pub identity: Estimate,
    /// `ρ̂ − identity`, paired within batches.
    pub identity_gap: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonReport {
    pub beta: f64,
    pub r: f64,
    pub k: u64,
    pub rows: Vec<CompoundPoissonRow>,
    pub rate_limit: f64,
    pub rho_limit: f64,
    /// Successive rate differences shrink along the ε grid.
    pub rate_settles: bool,
}

/// Independent-model statistics along a decreasing `ε` grid for
/// `Be(α_ε, β)` mixing.
pub fn compound_poisson_limit_stats(
    beta: f64,
    r: f64,
    eps_grid: &[f64],
    k: u64,
    samples: usize,
    seed: u64,
) -> Result<CompoundPoissonReport> {
    if k < 2 {
        return Err(Error::InvalidParameter("compound Poisson statistics need K >= 2".into()));
    }
    let kf = k as f64;
    let rows = eps_grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let f = MixingMeasure::beta_scaled(beta, r, eps)?;
            let MixingMeasure::Beta { alpha, .. } = f else { unreachable!() };
            let batch = sample_ind_model(&f, k, samples, seed.wrapping_add(i as u64))?;
            let zero = batch.frequency(0);
            let xs = batch.as_f64();
            let positive = xs.iter().filter(|&&s| s > 0.0).count() as f64;
            let jump_law = (1..=k)
                .map(|j| batch.counts.iter().filter(|&&c| c == j).count() as f64 / positive.max(1.0))
                .collect();
            let identity_stat = |xs: &[f64]| {
                let m1 = mean(xs);
                let m2 = mean(&xs.iter().map(|s| s * (s - 1.0)).collect::<Vec<_>>());
                m2 / ((kf - 1.0) * m1)
            };
            let rho_stat = |xs: &[f64]| {
                let m1 = mean(xs) / kf;
                let m2 = mean(&xs.iter().map(|s| s * (s - 1.0)).collect::<Vec<_>>()) / (kf * (kf - 1.0));
                (m2 - m1 * m1) / (m1 * (1.0 - m1))
            };
            let batches = BATCHES.min(samples);
            Ok(CompoundPoissonRow {
                eps,
                rate: Estimate {
                    value: (1.0 - zero.value) / eps,
                    se: zero.se / eps,
                },
                rate_exact: (1.0 - beta_binomial_pmf(k, 0, alpha, beta)?) / eps,
                jump_law,
                rho: batch_estimate(&xs, batches, rho_stat),
                rho_exact: f.pairwise_correlation(),
                identity: batch_estimate(&xs, batches, identity_stat),
                identity_gap: batch_estimate(&xs, batches, |b| rho_stat(b) - identity_stat(b)),
            })
        })
        .collect::<Result<Vec<CompoundPoissonRow>>>()?;
    let diffs: Vec<f64> = rows.windows(2).map(|w| (w[1].rate.value - w[0].rate.value).abs()).collect();
    let rate_settles = rows.iter().all(|r| r.rate.value > 0.0) && diffs.windows(2).all(|d| d[1] <= d[0]);
    Ok(CompoundPoissonReport {
        beta,
        r,
        k,
        rows,
        rate_limit: compound_poisson_rate_limit(beta, r, k),
        rho_limit: 1.0 / (1.0 + beta),
        rate_settles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenSpikes {
    pub batch: SpikeBatch,
    /// Unclamped `rate_scale ×` subordinator increment per bin.
    pub increments: Vec<f64>,
    pub clamp_rate: f64,
}

/// Forward model: `Z_j = min(1, c ΔA_j)` for subordinator increments over bins
/// of width `bin`, then binomial counts.
pub fn subordinator_driven_spikes(
    law: &SubordinatorLaw,
    rate_scale: f64,
    k: u64,
    horizon: f64,
    bin: f64,
    seed: u64,
) -> Result<DrivenSpikes> {
    if !(rate_scale > 0.0 && bin > 0.0 && horizon >= bin) {
        return Err(Error::InvalidParameter(format!(
            "need rate_scale > 0 and 0 < bin <= horizon, got {rate_scale}, {bin}, {horizon}"
        )));
    }
    let bins = (horizon / bin + 1e-9).floor() as usize;
    check_counts(k, bins)?;
    let sampler = IncrementSampler::new(law, DEFAULT_CUTOFF, DEFAULT_JUMP_BUDGET)?;
    let increments: Vec<f64> = sampler
        .sample_many(bin, bins, seed)?
        .into_iter()
        .map(|x| rate_scale * x)
        .collect();
    let clamped = increments.iter().filter(|&&z| z > 1.0).count();
    let clamp_rate = clamped as f64 / bins as f64;
    if clamp_rate > CLAMP_WARN {
        log::warn!("{:.3}% of bin increments clamped to 1", 100.0 * clamp_rate);
    }
    let counts = chunked(bins, seed ^ 0x5eed_5eed, |j, rng| binomial_variate(k, increments[j].min(1.0), rng));
    Ok(DrivenSpikes {
        batch: SpikeBatch {
            k,
            counts,
            bin_width: bin,
            seed,
            run_length: bins,
        },
        increments,
        clamp_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_beta_has_linear_mean() {
        let f = MixingMeasure::beta_scaled(3.0, 2.0, 1e-3).unwrap();
        assert!((f.moments().0 - 2e-3).abs() < 1e-15);
        assert!(MixingMeasure::beta_scaled(3.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn beta_binomial_sums_to_one() {
        let total: f64 = (0..=10).map(|s| beta_binomial_pmf(10, s, 0.3, 3.0).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirac_zero_never_spikes() {
        let b = sample_ind_model(&MixingMeasure::Dirac { z: 0.0 }, 10, 1000, 1).unwrap();
        assert!(b.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn rate_limit_small_eps() {
        let (beta, r, k) = (3.0, 1.0, 10);
        let f = MixingMeasure::beta_scaled(beta, r, 1e-7).unwrap();
        let MixingMeasure::Beta { alpha, .. } = f else { unreachable!() };
        let rate = (1.0 - beta_binomial_pmf(k, 0, alpha, beta).unwrap()) / 1e-7;
        assert!((rate / compound_poisson_rate_limit(beta, r, k) - 1.0).abs() < 1e-5);
    }
}
