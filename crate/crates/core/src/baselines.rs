//! Plain and lasso-regularized logistic regression, solved with the same
//! conic machinery as the robust model, plus prediction and error rates.
//! Unregularized fits are refined by Newton steps on the smooth log-loss.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{build_monolithic, empirical_log_loss, DroConfig, ModelParams};
use crate::data::Dataset;
use crate::error::{DroError, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Lasso weight `γ`.
    pub gamma: f64,
    /// Whether `β₀` is penalized as well.
    pub penalize_intercept: bool,
    pub coef_bound: f64,
    pub solver: SolverConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            gamma: 0.0,
            penalize_intercept: false,
            coef_bound: 1e4,
            solver: SolverConfig::default(),
        }
    }
}

/// Mean log-loss below which the fit is reported as separable.
const SEPARABLE_LOSS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BaselineFit {
    pub params: ModelParams,
    /// Mean log-loss plus the lasso term.
    pub objective: f64,
    /// A coefficient reached the box bound.
    pub coef_at_bound: bool,
    /// The training loss vanished or a coefficient hit the box: the
    /// unregularized fit diverges on these data.
    pub separable: bool,
    pub solve_time: f64,
}

/// Fit logistic regression with an optional lasso term.
pub fn fit_baseline(dataset: &Dataset, config: &BaselineConfig) -> Result<BaselineFit> {
    if !(config.gamma >= 0.0 && config.gamma.is_finite()) {
        return Err(DroError::InvalidArgument(format!(
            "lasso weight must be finite and non-negative, got {}",
            config.gamma
        )));
    }
    let dro = DroConfig {
        epsilon: 0.0,
        coef_bound: config.coef_bound,
        lasso: config.gamma,
        lasso_intercept: config.penalize_intercept,
        ..DroConfig::default()
    };
    let model = build_monolithic(dataset, &dro)?;
    let sol = model
        .solve(&config.solver)
        .map_err(|e| e.with_context("logistic regression"))?;
    let separable = sol.coef_at_bound || empirical_log_loss(&sol.beta, dataset) <= SEPARABLE_LOSS;
    if separable {
        log::warn!("training data look separable; coefficients are limited by the solver");
    }
    let (params, objective) = match config.gamma == 0.0 && !separable {
        true => newton_polish(&sol.beta, dataset, config.coef_bound),
        false => (sol.beta, sol.objective),
    };
    Ok(BaselineFit {
        separable,
        params,
        objective,
        coef_at_bound: sol.coef_at_bound,
        solve_time: sol.solve_time,
    })
}

/// `(1, x, one-hot z)` for row `i`.
fn design_row(dataset: &Dataset, i: usize, dim: usize) -> DVector<f64> {
    let mut phi = DVector::zeros(dim);
    phi[0] = 1.0;
    let mut k = 1;
    for &v in dataset.x(i) {
        phi[k] = v;
        k += 1;
    }
    for (&t, &card) in dataset.z(i).iter().zip(dataset.cardinalities()) {
        if t > 0 {
            phi[k + t - 1] = 1.0;
        }
        k += card - 1;
    }
    phi
}

fn from_vector(template: &ModelParams, v: &DVector<f64>) -> ModelParams {
    let mut k = 1;
    let beta_num = template
        .beta_num
        .iter()
        .map(|_| {
            k += 1;
            v[k - 1]
        })
        .collect();
    let beta_cat = template
        .beta_cat
        .iter()
        .map(|b| {
            b.iter()
                .map(|_| {
                    k += 1;
                    v[k - 1]
                })
                .collect()
        })
        .collect();
    ModelParams {
        beta0: v[0],
        beta_num,
        beta_cat,
    }
}

/// A few Newton steps on the mean log-loss starting from `start`; returns
/// the start unchanged if the Hessian is singular or the loss would rise.
fn newton_polish(start: &ModelParams, dataset: &Dataset, bound: f64) -> (ModelParams, f64) {
    let start_loss = empirical_log_loss(start, dataset);
    let dim = 1 + start.slopes().count();
    let rows: Vec<DVector<f64>> = (0..dataset.len())
        .map(|i| design_row(dataset, i, dim))
        .collect();
    let n = dataset.len() as f64;
    let mut beta = DVector::from_iterator(dim, std::iter::once(start.beta0).chain(start.slopes()));
    for _ in 0..8 {
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        for (i, phi) in rows.iter().enumerate() {
            let y = dataset.y(i);
            let score = phi.dot(&beta);
            let sig = 1.0 / (1.0 + (y * score).exp());
            grad.axpy(-y * sig / n, phi, 1.0);
            hess.ger(sig * (1.0 - sig) / n, phi, phi, 1.0);
        }
        let Some(chol) = hess.cholesky() else {
            return (start.clone(), start_loss);
        };
        let step = chol.solve(&grad);
        beta -= &step;
        if step.amax() < 1e-13 {
            break;
        }
    }
    let params = from_vector(start, &beta);
    let loss = empirical_log_loss(&params, dataset);
    if loss.is_finite() && loss <= start_loss + 1e-12 && params.max_abs() < bound {
        (params, loss)
    } else {
        (start.clone(), start_loss)
    }
}

/// Unregularized logistic regression.
pub fn train_lr(dataset: &Dataset) -> Result<ModelParams> {
    Ok(fit_baseline(dataset, &BaselineConfig::default())?.params)
}

/// Logistic regression with `γ‖(β_N, β_C)‖₁` added to the mean log-loss.
pub fn train_regularized_lr(dataset: &Dataset, gamma: f64) -> Result<ModelParams> {
    let config = BaselineConfig {
        gamma,
        ..BaselineConfig::default()
    };
    Ok(fit_baseline(dataset, &config)?.params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: i8,
    /// `P(y = +1)`.
    pub probability: f64,
}

/// Logistic prediction; a zero score is labelled `+1`.
pub fn predict(params: &ModelParams, x: &[f64], z: &[usize]) -> Result<Prediction> {
    if x.len() != params.beta_num.len() || z.len() != params.beta_cat.len() {
        return Err(DroError::DimensionMismatch(format!(
            "model expects {} numeric and {} categorical values, got {} and {}",
            params.beta_num.len(),
            params.beta_cat.len(),
            x.len(),
            z.len()
        )));
    }
    for (j, &t) in z.iter().enumerate() {
        let k = params.beta_cat[j].len() + 1;
        if t >= k {
            return Err(DroError::CategoryOutOfRange {
                index: t,
                cardinality: k,
            });
        }
    }
    let score = params.score(x, z);
    Ok(Prediction {
        label: if score >= 0.0 { 1 } else { -1 },
        probability: 1.0 / (1.0 + (-score).exp()),
    })
}

/// Fraction of misclassified points. Panics on dimension mismatch; use
/// [`ModelParams::check_dims`] first for untrusted inputs.
pub fn classification_error(params: &ModelParams, dataset: &Dataset) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let wrong = (0..dataset.len())
        .filter(|&i| {
            let score = params.score(dataset.x(i), dataset.z(i));
            let label = if score >= 0.0 { 1 } else { -1 };
            label != dataset.labels()[i]
        })
        .count();
    wrong as f64 / dataset.len() as f64
}
