use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{DiffusionModel, Scheme, Start};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Step counts must reproduce the horizon to this relative accuracy.
const GRID_TOL: f64 = 1e-9;

/// `∫ e^{−λt − μA(t)} dt` accumulated at full grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceProbe {
    pub lambda: f64,
    pub mu: f64,
}

/// Whether the path comes within the hit threshold of 0 somewhere in
/// `[t, t + eps]`, checked at full grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingProbe {
    pub t: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model: DiffusionModel,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub master_seed: u64,
    pub start: Start,
    #[serde(default)]
    pub scheme: Scheme,
    /// States and functionals are stored every `record_stride` steps and at
    /// the horizon.
    pub record_stride: usize,
    #[serde(default)]
    pub laplace_probes: Vec<LaplaceProbe>,
    #[serde(default)]
    pub hitting_probes: Vec<HittingProbe>,
    /// Defaults to `1e-3` times the stationary mean.
    #[serde(default)]
    pub hit_threshold: Option<f64>,
}

impl EnsembleSpec {
    pub fn new(model: DiffusionModel, horizon: f64, dt: f64, paths: usize, master_seed: u64, start: Start) -> Self {
        Self {
            model,
            horizon,
            dt,
            paths,
            master_seed,
            start,
            scheme: Scheme::Auto,
            record_stride: 1,
            laplace_probes: Vec::new(),
            hitting_probes: Vec::new(),
            hit_threshold: None,
        }
    }

    pub fn hit_threshold(&self) -> f64 {
        self.hit_threshold.unwrap_or(1e-3 * self.model.stationary_mean())
    }

    /// Number of steps, validating the grid against the horizon.
    pub fn steps(&self) -> Result<usize> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        let n = (self.horizon / self.dt).round();
        if (n * self.dt - self.horizon).abs() > GRID_TOL * self.horizon.max(self.dt) {
            return Err(Error::InvalidParameter(format!(
                "horizon {} is not a whole number of steps {}",
                self.horizon, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.model.resolve_scheme(self.scheme)?;
        self.steps()?;
        if let Some(max) = self.model.max_dt() {
            if self.dt > max * (1.0 + GRID_TOL) {
                return Err(Error::Resolution {
                    dt: self.dt,
                    required: max,
                });
            }
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter("paths must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        if let Start::Fixed(x) = self.start {
            if !(x >= 0.0 && x < self.model.upper_bound()) {
                return Err(Error::InvalidParameter(format!("start {x} outside the state space")));
            }
        }
        for p in &self.laplace_probes {
            if !(p.lambda > 0.0 && p.mu >= 0.0) {
                return Err(Error::InvalidParameter(format!("Laplace probe needs lambda > 0, mu >= 0, got {p:?}")));
            }
        }
        for p in &self.hitting_probes {
            check_hitting_window(p.t, p.eps, self.dt, self.horizon)?;
        }
        Ok(())
    }
}

pub(crate) fn check_hitting_window(t: f64, eps: f64, spacing: f64, horizon: f64) -> Result<()> {
    if !(t >= 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("hitting window needs t >= 0, eps > 0, got {t}, {eps}")));
    }
    if spacing > eps / 10.0 * (1.0 + GRID_TOL) {
        return Err(Error::Resolution {
            dt: spacing,
            required: eps / 10.0,
        });
    }
    if t + eps > horizon * (1.0 + GRID_TOL) {
        return Err(Error::Horizon {
            horizon,
            required: t + eps,
        });
    }
    Ok(())
}

/// One simulated path on the record grid plus its full-resolution probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    /// One value per Laplace probe.
    pub laplace: Vec<f64>,
    /// One flag per hitting probe.
    pub hit: Vec<bool>,
    /// Smallest state over the full grid.
    pub min_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    /// The spec with its scheme resolved.
    pub spec: EnsembleSpec,
    pub steps: usize,
    pub record_times: Vec<f64>,
    /// Completed paths in index order.
    pub paths: Vec<PathRecord>,
    /// Paths aborted on a non-finite state; excluded from every estimate.
    pub failures: Vec<PathFailure>,
}

impl PathEnsemble {
    /// Index into the record grid of time `t`, if `t` is a record time.
    pub fn record_index(&self, t: f64) -> Result<usize> {
        let tol = GRID_TOL * self.spec.horizon.max(self.spec.dt);
        self.record_times
            .iter()
            .position(|&r| (r - t).abs() <= tol)
            .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not on the record grid")))
    }

    /// `A(t)` across completed paths.
    pub fn functional_at(&self, t: f64) -> Result<Vec<f64>> {
        let i = self.record_index(t)?;
        Ok(self.paths.iter().map(|p| p.a[i]).collect())
    }

    pub fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        let i = self.record_index(t)?;
        Ok(self.paths.iter().map(|p| p.x[i]).collect())
    }

    pub fn laplace_probe_index(&self, lambda: f64, mu: f64) -> Option<usize> {
        self.spec
            .laplace_probes
            .iter()
            .position(|p| p.lambda == lambda && p.mu == mu)
    }

    pub fn hitting_probe_index(&self, t: f64, eps: f64) -> Option<usize> {
        self.spec.hitting_probes.iter().position(|p| p.t == t && p.eps == eps)
    }
}

fn record_steps(steps: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=steps).step_by(stride).collect();
    if *v.last().expect("step 0 always recorded") != steps {
        v.push(steps);
    }
    v
}

/// Exact integral over one step of `e^{g}` with `g` linear between
/// `g0` and `g0 − d`, `d ≥ 0`, divided by `h e^{g0}`.
#[inline]
pub(crate) fn linear_exp_weight(d: f64) -> (f64, f64) {
    // returns ((1 − e^{−d})/d, e^{−d}); truncated series below 1e-3 err < 1e-19
    if d < 1e-3 {
        let w = 1.0 - d * (0.5 - d * (1.0 / 6.0 - d * (1.0 / 24.0 - d * (1.0 / 120.0 - d / 720.0))));
        let e = 1.0 - d * (1.0 - d * (0.5 - d * (1.0 / 6.0 - d * (1.0 / 24.0 - d * (1.0 / 120.0 - d / 720.0)))));
        (w, e)
    } else {
        let em = (-d).exp_m1();
        (-em / d, 1.0 + em)
    }
}

struct ProbeState {
    decay: f64,
    /// Weights for steps with no functional increment.
    idle: (f64, f64),
    mu: f64,
    f: f64,
    integral: f64,
}

struct HitWindow {
    lo: usize,
    hi: usize,
}

fn simulate_path(spec: &EnsembleSpec, steps: usize, records: &[usize], index: usize) -> std::result::Result<PathRecord, PathFailure> {
    let model = &spec.model;
    let stepper = model.stepper(spec.scheme, spec.dt).expect("spec validated");
    let mut rng = substream(spec.master_seed, index as u64);
    let scale = model.functional_scale();
    let dt = spec.dt;
    let half = 0.5 * dt * scale;
    let threshold = spec.hit_threshold();

    let mut x = model.initial_state(spec.start, &mut rng).expect("spec validated");
    let mut a = 0.0;
    let mut xs = Vec::with_capacity(records.len());
    let mut as_ = Vec::with_capacity(records.len());
    xs.push(x);
    as_.push(a);
    let mut next_record = 1;

    let mut probes: Vec<ProbeState> = spec
        .laplace_probes
        .iter()
        .map(|p| ProbeState {
            decay: p.lambda * dt,
            idle: linear_exp_weight(p.lambda * dt),
            mu: p.mu,
            f: 1.0,
            integral: 0.0,
        })
        .collect();
    let windows: Vec<HitWindow> = spec
        .hitting_probes
        .iter()
        .map(|p| HitWindow {
            lo: ((p.t / dt) - GRID_TOL * steps as f64).ceil().max(0.0) as usize,
            hi: (((p.t + p.eps) / dt) + GRID_TOL * steps as f64).floor() as usize,
        })
        .collect();
    let mut hit: Vec<bool> = windows.iter().map(|w| w.lo == 0 && x <= threshold).collect();
    let mut min_x = x;

    for step in 1..=steps {
        let (next, touched) = stepper.step(x, &mut rng);
        if !next.is_finite() {
            return Err(PathFailure { path: index, step });
        }
        let da = half * (x + next);
        a += da;
        for p in &mut probes {
            let (w, e) = if da == 0.0 {
                p.idle
            } else {
                linear_exp_weight(p.decay + p.mu * da)
            };
            p.integral += dt * p.f * w;
            p.f *= e;
        }
        for (h, w) in hit.iter_mut().zip(&windows) {
            if !*h && step >= w.lo && step <= w.hi && (next <= threshold || (touched && step > w.lo)) {
                *h = true;
            }
        }
        min_x = min_x.min(next);
        x = next;
        if next_record < records.len() && records[next_record] == step {
            xs.push(x);
            as_.push(a);
            next_record += 1;
        }
    }
    Ok(PathRecord {
        index,
        x: xs,
        a: as_,
        laplace: probes.iter().map(|p| p.integral).collect(),
        hit,
        min_x,
    })
}

/// Simulates `spec.paths` independent paths on the current rayon pool.
///
/// Path `i` draws from substream `i` of `master_seed`, so the ensemble is
/// identical for any number of worker threads.
pub fn simulate_ensemble(spec: &EnsembleSpec) -> Result<PathEnsemble> {
    spec.validate()?;
    let mut spec = spec.clone();
    spec.scheme = spec.model.resolve_scheme(spec.scheme)?;
    let steps = spec.steps()?;
    let records = record_steps(steps, spec.record_stride);
    let results: Vec<_> = (0..spec.paths)
        .into_par_iter()
        .map(|i| simulate_path(&spec, steps, &records, i))
        .collect();
    let mut paths = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => paths.push(p),
            Err(f) => {
                log::warn!("path {} aborted at step {} on a non-finite state", f.path, f.step);
                failures.push(f);
            }
        }
    }
    if paths.is_empty() {
        let f = failures[0];
        return Err(Error::NonFinite {
            path: f.path,
            step: f.step,
        });
    }
    let record_times = records.iter().map(|&s| s as f64 * spec.dt).collect();
    Ok(PathEnsemble {
        spec,
        steps,
        record_times,
        paths,
        failures,
    })
}

/// [`simulate_ensemble`] on a dedicated pool of `workers` threads.
pub fn simulate_ensemble_with_workers(spec: &EnsembleSpec, workers: usize) -> Result<PathEnsemble> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build a pool of {workers} workers: {e}")))?;
    pool.install(|| simulate_ensemble(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wf() -> DiffusionModel {
        DiffusionModel::WrightFisher {
            tau: 1e-2,
            alpha: 1e-2,
            beta: 2.0,
        }
    }

    #[test]
    fn record_grid_includes_horizon() {
        assert_eq!(record_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(record_steps(8, 4), vec![0, 4, 8]);
        assert_eq!(record_steps(0, 3), vec![0]);
    }

    #[test]
    fn rejects_coarse_wf_grid() {
        let spec = EnsembleSpec::new(wf(), 1.0, 1e-3, 10, 1, Start::Zero);
        assert!(matches!(spec.validate(), Err(Error::Resolution { .. })));
        let spec = EnsembleSpec::new(wf(), 1.0, 3e-4, 10, 1, Start::Zero);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn zero_horizon_is_trivial() {
        let mut spec = EnsembleSpec::new(wf(), 0.0, 1e-4, 5, 1, Start::Fixed(0.3));
        spec.laplace_probes.push(LaplaceProbe { lambda: 1.0, mu: 1.0 });
        let ens = simulate_ensemble(&spec).unwrap();
        for p in &ens.paths {
            assert_eq!(p.x, vec![0.3]);
            assert_eq!(p.a, vec![0.0]);
            assert_eq!(p.laplace, vec![0.0]);
        }
    }

    #[test]
    fn exact_linear_weight() {
        for &d in &[0.0, 1e-9, 1e-3, 0.5, 30.0] {
            let (w, e) = linear_exp_weight(d);
            let want = if d == 0.0 { 1.0 } else { -(-d).exp_m1() / d };
            assert!((w - want).abs() < 1e-12);
            assert!((e - (-d).exp()).abs() < 1e-15);
        }
    }
}
