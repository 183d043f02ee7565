use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantile, task_seed};
use crate::baselines::train_lr;
use crate::conic::{build_continuous_model, build_monolithic, DroConfig};
use crate::data::Dataset;
use crate::error::{DroError, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StylizedConfig {
    pub ns: Vec<usize>,
    pub runs: usize,
    /// `c` in `ε = c/√N`.
    pub radius_constant: f64,
    pub solver: SolverConfig,
}

impl Default for StylizedConfig {
    fn default() -> Self {
        StylizedConfig {
            ns: vec![250, 1000, 4000],
            runs: 100,
            radius_constant: 0.32,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StylizedModel {
    Lr,
    /// Robust model with one categorical feature, `p = 1`, `κ = 1`.
    Mixed,
    /// Robust model treating the feature as numeric, metric `½|z − z'|`.
    Continuous,
}

impl StylizedModel {
    pub const ALL: [StylizedModel; 3] = [
        StylizedModel::Lr,
        StylizedModel::Mixed,
        StylizedModel::Continuous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StylizedModel::Lr => "lr",
            StylizedModel::Mixed => "mixed",
            StylizedModel::Continuous => "continuous",
        }
    }
}

/// Fitted slopes of one model at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylizedSummary {
    pub n: usize,
    pub model: StylizedModel,
    pub epsilon: f64,
    pub mean: f64,
    pub q15: f64,
    pub q85: f64,
    pub slopes: Vec<f64>,
}

impl StylizedSummary {
    /// The 15–85% band contains `value`.
    pub fn band_contains(&self, value: f64) -> bool {
        self.q15 <= value && value <= self.q85
    }
}

/// `N` draws with `z` uniform on `{−1, +1}` and `P(y | z) = σ(y·z)`,
/// returned as one binary categorical feature (category 1 is `z = +1`).
pub fn stylized_data(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let t = usize::from(rng.random::<bool>());
        let zv = 2.0 * t as f64 - 1.0;
        let p_pos = 1.0 / (1.0 + (-zv).exp());
        y.push(if rng.random::<f64>() < p_pos { 1 } else { -1 });
        z.push(vec![t]);
    }
    Dataset::new(vec![vec![]; n], z, vec![2], y)
}

/// Slope on the `±1` coding fitted by each model.
fn fit_slopes(data: &Dataset, epsilon: f64, solver: &SolverConfig) -> Result<[f64; 3]> {
    let pm = data.categorical_as_numeric([-1.0, 1.0])?;
    let lr = train_lr(&pm)?.beta_num[0];

    let mixed_cfg = DroConfig::default().with_epsilon(epsilon).with_kappa(1.0);
    let mixed = build_monolithic(data, &mixed_cfg)?.solve(solver)?.beta;
    // z ∈ {0,1} → ±1 halves the slope
    let mixed = mixed.beta_cat[0][0] / 2.0;

    let cont = build_continuous_model(&pm, epsilon, 1.0, Some(vec![0.5]))?
        .solve(solver)?
        .beta
        .beta_num[0];
    Ok([lr, mixed, cont])
}

/// Mean and 15/85% quantiles of the fitted slope for each sample size,
/// with the same radius `c/√N` for both robust models.
pub fn stylized_comparison(config: &StylizedConfig, seed: u64) -> Result<Vec<StylizedSummary>> {
    if config.runs == 0 || config.ns.is_empty() {
        return Err(DroError::Config(
            "need at least one run and one sample size".into(),
        ));
    }
    if !(config.radius_constant >= 0.0 && config.radius_constant.is_finite()) {
        return Err(DroError::Config(
            "radius constant must be finite and non-negative".into(),
        ));
    }
    let mut out = Vec::new();
    for (a, &n) in config.ns.iter().enumerate() {
        if n == 0 {
            return Err(DroError::Config("sample sizes must be positive".into()));
        }
        let epsilon = config.radius_constant / (n as f64).sqrt();
        let cell = task_seed(seed, a as u64);
        let fits: Vec<[f64; 3]> = (0..config.runs)
            .into_par_iter()
            .map(|r| {
                let data = stylized_data(n, task_seed(cell, r as u64))?;
                fit_slopes(&data, epsilon, &config.solver)
                    .map_err(|e| e.in_task(format!("N={n}, run {r}")))
            })
            .collect::<Result<_>>()?;
        for (k, model) in StylizedModel::ALL.into_iter().enumerate() {
            let slopes: Vec<f64> = fits.iter().map(|f| f[k]).collect();
            out.push(StylizedSummary {
                n,
                model,
                epsilon,
                mean: slopes.iter().sum::<f64>() / slopes.len() as f64,
                q15: quantile(&slopes, 0.15),
                q85: quantile(&slopes, 0.85),
                slopes,
            });
        }
    }
    Ok(out)
}
