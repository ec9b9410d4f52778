//! Experiment descriptions shared by the command line and `config.toml`.
//!
//! Every subcommand's arguments double as the `[experiment]` table of the
//! configuration file, so a run can be replayed with `levy-limits run`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use levy_limits::diffusion::Scheme;
use levy_limits::spiking::Generator;
use levy_limits::verify::{Group, Profile};
use serde::{Deserialize, Serialize};

/// `lo:hi:n`, `n` evenly spaced points including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("grid must read lo:hi:n, got {s:?}"));
        };
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("bad grid bound {v:?}: {e}"));
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        let n: usize = n.trim().parse().map_err(|e| format!("bad grid size {n:?}: {e}"))?;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
            return Err(format!("grid needs 0 <= lo <= hi and n >= 1, got {s:?}"));
        }
        Ok(Self { lo, hi, n })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl TryFrom<String> for Grid {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.to_string()
    }
}

/// Hitting window `t:eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Window {
    pub t: f64,
    pub eps: f64,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (t, eps) = s.split_once(':').ok_or_else(|| format!("window must read t:eps, got {s:?}"))?;
        let t: f64 = t.trim().parse().map_err(|e| format!("bad window start {t:?}: {e}"))?;
        let eps: f64 = eps.trim().parse().map_err(|e| format!("bad window width {eps:?}: {e}"))?;
        if !(t >= 0.0 && eps > 0.0) {
            return Err(format!("window needs t >= 0 and eps > 0, got {s:?}"));
        }
        Ok(Self { t, eps })
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.t, self.eps)
    }
}

impl TryFrom<String> for Window {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Window> for String {
    fn from(w: Window) -> String {
        w.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileArg {
    Smoke,
    #[default]
    Desk,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Smoke => Profile::Smoke,
            ProfileArg::Desk => Profile::Desk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupArg {
    Specfun,
    Wf,
    Subordinator,
    Feller,
    Rbm,
    Spiking,
    All,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Specfun => Group::Specfun,
            GroupArg::Wf => Group::Wf,
            GroupArg::Subordinator => Group::Subordinator,
            GroupArg::Feller => Group::Feller,
            GroupArg::Rbm => Group::Rbm,
            GroupArg::Spiking => Group::Spiking,
            GroupArg::All => Group::All,
        }
    }
}

/// Source of the `phi_n` column of `exponent wf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Prelimit exponent from the fundamental-solution series.
    #[default]
    Series,
    /// Depth-40 continued fraction of the limit.
    Cf,
    /// Bessel-ratio limit.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartArg {
    Zero,
    #[default]
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    #[default]
    Auto,
    LocalCir,
    Euler,
    Exact,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Auto => Scheme::Auto,
            SchemeArg::LocalCir => Scheme::LocalCir,
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Exact => Scheme::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorArg {
    #[default]
    Binomial,
    Poisson,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::Binomial => Generator::Binomial,
            GeneratorArg::Poisson => Generator::Poisson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ZerosArgs {
    /// Bessel order.
    #[arg(long)]
    pub nu: f64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WfExponentArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Time scale; with `alpha = tau` this is the prelimit index `1/n`.
    #[arg(long, default_value_t = 1e-2)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "0.1:5:50")]
    pub mu_grid: Grid,
    #[arg(long, value_enum, default_value_t)]
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FellerExponentArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Scaling index; the drift parameter is `gamma / n`.
    #[arg(long)]
    pub n: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "0.1:5:50")]
    pub mu_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RbmExponentArgs {
    #[arg(long)]
    pub n: f64,
    /// Drift; defaults to `n^{-1/4}`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_n: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "0.1:5:50")]
    pub mu_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExponentFamily {
    /// Wright-Fisher prelimit and Bessel-ratio limit.
    Wf(WfExponentArgs),
    /// Feller prelimit and its closed-form limit.
    Feller(FellerExponentArgs),
    /// Reflected Brownian motion prelimit; the limit is `mu`.
    Rbm(RbmExponentArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExponentArgs {
    #[command(subcommand)]
    #[serde(flatten)]
    pub family: ExponentFamily,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SubordinatorArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Bessel zeros in the jump mixture.
    #[arg(long, default_value_t = 10_000)]
    pub zeros: usize,
    /// Number of cumulants to write.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulants: Option<usize>,
    /// Number of moments of `A(t)` to write.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Number of sampled increments over time `t`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    /// Small-jump cutoff of the sampler.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulationArgs {
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Time step; defaults to the model's largest stable step.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, value_enum, default_value_t)]
    pub start: StartArg,
    #[arg(long, value_enum, default_value_t)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Laplace variables, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    pub mu: Vec<f64>,
    /// Hitting windows `t:eps`, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub hit: Vec<Window>,
    /// Spacing of stored path points; defaults to `T / 100`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_dt: Option<f64>,
    /// Also write `paths.csv.gz`.
    #[arg(long)]
    #[serde(default)]
    pub write_paths: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimWfArgs {
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: SimulationArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimFellerArgs {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: SimulationArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimRbmArgs {
    #[arg(long)]
    pub n: f64,
    /// Drift; defaults to `n^{-1/4}`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_n: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: SimulationArgs,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SimulateFamily {
    /// Wright-Fisher diffusion.
    Wf(SimWfArgs),
    /// Feller (CIR) diffusion.
    Feller(SimFellerArgs),
    /// Reflected Brownian motion with drift.
    Rbm(SimRbmArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(subcommand)]
    #[serde(flatten)]
    pub family: SimulateFamily,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpikeIndArgs {
    /// Neurons.
    #[arg(long = "K")]
    pub k: u64,
    #[arg(long, default_value_t = 100_000)]
    pub bins: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t)]
    pub generator: GeneratorArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpikeDsArgs {
    #[arg(long = "K")]
    pub k: u64,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "T", default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
    #[arg(long, default_value_t = 1.0)]
    pub bin: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpikeCpArgs {
    #[arg(long = "K")]
    pub k: u64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Bin widths, comma separated, decreasing.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SpikingModel {
    /// Independent bins with Beta mixing.
    Ind(SpikeIndArgs),
    /// Mixing by unit-bin integrals of a Wright-Fisher path.
    Ds(SpikeDsArgs),
    /// Compound Poisson limit statistics along an eps grid.
    Cp(SpikeCpArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpikingArgs {
    #[command(subcommand)]
    #[serde(flatten)]
    pub model: SpikingModel,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value = "all")]
    pub group: GroupArg,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Experiment {
    /// Positive zeros of the Bessel function J_nu.
    Zeros(ZerosArgs),
    /// Prelimit and limit Laplace exponents on a grid.
    Exponent(ExponentArgs),
    /// Cumulants, moments and sampled increments of the limit subordinator.
    Subordinator(SubordinatorArgs),
    /// Monte Carlo path ensembles and their Laplace functionals.
    Simulate(SimulateArgs),
    /// Binned spike counts.
    Spiking(SpikingArgs),
    /// Acceptance criteria.
    Verify(VerifyArgs),
}

impl Experiment {
    pub fn name(&self) -> String {
        match self {
            Self::Zeros(_) => "zeros".into(),
            Self::Exponent(a) => format!(
                "exponent {}",
                match a.family {
                    ExponentFamily::Wf(_) => "wf",
                    ExponentFamily::Feller(_) => "feller",
                    ExponentFamily::Rbm(_) => "rbm",
                }
            ),
            Self::Subordinator(_) => "subordinator".into(),
            Self::Simulate(a) => format!(
                "simulate {}",
                match a.family {
                    SimulateFamily::Wf(_) => "wf",
                    SimulateFamily::Feller(_) => "feller",
                    SimulateFamily::Rbm(_) => "rbm",
                }
            ),
            Self::Spiking(a) => format!(
                "spiking {}",
                match a.model {
                    SpikingModel::Ind(_) => "ind",
                    SpikingModel::Ds(_) => "ds",
                    SpikingModel::Cp(_) => "cp",
                }
            ),
            Self::Verify(v) => format!("verify {}", v.group.to_possible_value().map(|p| p.get_name().to_owned()).unwrap_or_default()),
        }
    }
}

/// Limits that turn a completed computation into a tolerance failure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Series tail bound for prelimit exponents.
    pub tail_tol: f64,
    /// Largest accepted gap between the depth-40 continued fraction and the
    /// Bessel-ratio limit.
    pub cf_abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tail_tol: 1e-5,
            cf_abs_tol: 1e-10,
        }
    }
}

/// Fully resolved run description, written as `config.toml` next to the
/// outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub out: PathBuf,
    #[serde(default)]
    pub profile: ProfileArg,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    pub fn from_toml(s: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            master_seed: 7,
            workers: Some(2),
            out: PathBuf::from("out/sim"),
            profile: ProfileArg::Smoke,
            tolerances: Tolerances::default(),
            experiment: Experiment::Simulate(SimulateArgs {
                family: SimulateFamily::Wf(SimWfArgs {
                    tau: 1e-3,
                    alpha: 1e-3,
                    beta: 2.0,
                    run: SimulationArgs {
                        horizon: 6.0,
                        dt: Some(2e-5),
                        paths: 100,
                        start: StartArg::Stationary,
                        scheme: SchemeArg::Auto,
                        lambda: 1.0,
                        mu: vec![0.5, 1.0],
                        hit: vec![Window { t: 0.5, eps: 0.1 }],
                        record_dt: None,
                        write_paths: true,
                    },
                }),
            }),
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let configs = [
            sample(),
            ExperimentConfig {
                experiment: Experiment::Exponent(ExponentArgs {
                    family: ExponentFamily::Wf(WfExponentArgs {
                        beta: 2.0,
                        gamma: 1.0,
                        tau: 0.1 + 0.2,
                        lambda: 1.0,
                        mu_grid: "0.1:5:50".parse().unwrap(),
                        method: Method::Cf,
                    }),
                }),
                ..sample()
            },
            ExperimentConfig {
                experiment: Experiment::Verify(VerifyArgs { group: GroupArg::Spiking }),
                workers: None,
                ..sample()
            },
        ];
        for c in configs {
            let text = c.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.1:5:50".parse().unwrap();
        assert_eq!(g.points().len(), 50);
        assert_eq!(g.points()[49], 5.0);
        assert!("1:0:3".parse::<Grid>().is_err());
        assert!("1:2".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }
}
