//! Desk-scale studies: cross-validated benchmarks, runtime scaling and the
//! mixed-versus-continuous comparison on a single binary feature.

mod benchmark;
mod runtime;
mod stylized;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_baseline, BaselineConfig};
use crate::conic::{DroConfig, ModelParams};
use crate::cutgen::{run, EngineConfig};
use crate::data::Dataset;
use crate::error::{DroError, Result};

pub use benchmark::{benchmark, cross_validate, BenchmarkReport, CvOutcome, CvScore, MethodReport};
pub use runtime::{
    runtime_study, write_runtime_csv, RuntimeConfig, RuntimeRow, RuntimeStatus, Solver,
};
pub use stylized::{
    stylized_comparison, stylized_data, StylizedConfig, StylizedModel, StylizedSummary,
};

/// Seed of task `index` derived from a master seed (SplitMix64 finalizer).
pub fn task_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linearly interpolated sample quantile. NaN for an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// `{0} ∪ {scale·10^e}` for `e` from `lo` to `hi` with `per_decade` points
/// per decade.
fn log_grid(scale: f64, lo: i32, hi: i32, per_decade: usize) -> Vec<f64> {
    let per = per_decade.max(1);
    let steps = (hi - lo) as usize * per;
    let mut out = vec![0.0];
    out.extend((0..=steps).map(|k| scale * 10f64.powf(lo as f64 + k as f64 / per as f64)));
    out
}

/// Hyperparameter grids searched by cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub epsilons: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::log_spaced(1)
    }
}

impl GridSpec {
    /// `ε ∈ {0} ∪ [1e-5, 1]` and `γ ∈ {0} ∪ [5e-6, 0.5]`, log-spaced.
    pub fn log_spaced(points_per_decade: usize) -> Self {
        GridSpec {
            epsilons: log_grid(1.0, -5, 0, points_per_decade),
            gammas: log_grid(0.5, -5, 0, points_per_decade),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("epsilon", &self.epsilons), ("gamma", &self.gammas)] {
            if grid.is_empty() {
                return Err(DroError::Config(format!("{name} grid is empty")));
            }
            if grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(DroError::Config(format!(
                    "{name} grid must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

/// How the label-flip cost is set for a robust method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaRule {
    /// `κ = 1`.
    One,
    /// `κ = m`, the number of categorical features (at least 1).
    NumCategorical,
}

impl KappaRule {
    pub fn value(self, dataset: &Dataset) -> f64 {
        match self {
            KappaRule::One => 1.0,
            KappaRule::NumCategorical => dataset.num_categorical().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Lr,
    RegularizedLr,
    Dro(KappaRule),
    /// Robust model with a lasso term in the master objective.
    RegularizedDro(KappaRule),
}

impl Method {
    /// The four methods of the default benchmark.
    pub fn standard() -> Vec<Method> {
        vec![
            Method::Lr,
            Method::RegularizedLr,
            Method::Dro(KappaRule::One),
            Method::Dro(KappaRule::NumCategorical),
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::RegularizedLr => "r-lr",
            Method::Dro(KappaRule::One) => "dro-k1",
            Method::Dro(KappaRule::NumCategorical) => "dro-km",
            Method::RegularizedDro(KappaRule::One) => "r-dro-k1",
            Method::RegularizedDro(KappaRule::NumCategorical) => "r-dro-km",
        }
    }

    /// Candidate hyperparameters, deduplicated and sorted by `(ε, γ)`.
    pub fn candidates(self, grid: &GridSpec) -> Vec<Hyper> {
        let dedup = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let eps = dedup(&grid.epsilons);
        let gam = dedup(&grid.gammas);
        match self {
            Method::Lr => vec![Hyper::default()],
            Method::RegularizedLr => gam.iter().map(|&g| Hyper::new(0.0, g)).collect(),
            Method::Dro(_) => eps.iter().map(|&e| Hyper::new(e, 0.0)).collect(),
            Method::RegularizedDro(_) => eps
                .iter()
                .flat_map(|&e| gam.iter().map(move |&g| Hyper::new(e, g)))
                .collect(),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = DroError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lr" => Method::Lr,
            "r-lr" | "rlr" => Method::RegularizedLr,
            "dro-k1" => Method::Dro(KappaRule::One),
            "dro-km" => Method::Dro(KappaRule::NumCategorical),
            "r-dro-k1" => Method::RegularizedDro(KappaRule::One),
            "r-dro-km" => Method::RegularizedDro(KappaRule::NumCategorical),
            other => return Err(DroError::Config(format!("unknown method `{other}`"))),
        })
    }
}

impl TryFrom<String> for Method {
    type Error = DroError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

/// Radius and lasso weight of one fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub epsilon: f64,
    pub gamma: f64,
}

impl Hyper {
    pub fn new(epsilon: f64, gamma: f64) -> Self {
        Hyper { epsilon, gamma }
    }
}

/// Settings shared by the benchmark and cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub folds: usize,
    pub train_fraction: f64,
    /// Metric and safeguards for the robust methods; radius, `κ` and lasso
    /// weight are overwritten per fit.
    pub dro: DroConfig,
    pub engine: EngineConfig,
    /// z-score numeric columns using training statistics.
    pub standardize: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridSpec::default(),
            folds: 5,
            train_fraction: 0.8,
            dro: DroConfig::default(),
            engine: EngineConfig::default(),
            standardize: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.folds < 2 {
            return Err(DroError::Config(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(DroError::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        self.dro.metric.validate()?;
        self.engine.solver.validate()
    }
}

/// Fit one method at fixed hyperparameters.
pub fn fit_method(
    method: Method,
    hyper: Hyper,
    train: &Dataset,
    config: &ExperimentConfig,
) -> Result<ModelParams> {
    let baseline = |gamma| {
        let cfg = BaselineConfig {
            gamma,
            coef_bound: config.dro.coef_bound,
            solver: config.engine.solver.clone(),
            ..BaselineConfig::default()
        };
        fit_baseline(train, &cfg).map(|f| f.params)
    };
    let robust = |kappa: KappaRule, gamma| {
        let mut dro = config.dro.clone().with_epsilon(hyper.epsilon);
        dro.metric.kappa = kappa.value(train);
        dro.lasso = gamma;
        let result = run(train, &dro, &config.engine)?;
        if !result.termination.converged() {
            log::warn!(
                "robust fit at epsilon {} stopped with {:?}, gap {:.3e}",
                hyper.epsilon,
                result.termination,
                result.gap()
            );
        }
        Ok(result.params)
    };
    match method {
        Method::Lr => baseline(0.0),
        Method::RegularizedLr => baseline(hyper.gamma),
        Method::Dro(k) => robust(k, 0.0),
        Method::RegularizedDro(k) => robust(k, hyper.gamma),
    }
}
