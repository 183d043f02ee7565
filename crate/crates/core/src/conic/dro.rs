//! Exponential-conic models of Wasserstein-robust logistic regression.
//!
//! For `ε > 0` the robust problem is
//!
//! ```text
//! minimize   λε + (1/N) Σᵢ sᵢ
//! subject to softplus(−yᵢ·score(xᵢ, z))      ≤ sᵢ + λ·d_C(z, zᵢ)        (plus family)
//!            softplus( yᵢ·score(xᵢ, z))      ≤ sᵢ + λ·d_C(z, zᵢ) + λκ   (minus family)
//!            ‖β_N‖_* ≤ λ,  λ ≥ 0
//! ```
//!
//! for all `i` and all `z ∈ C`, each softplus row being encoded by
//! [`softplus_epigraph`]. A [`DroModel`] holds the base variables and any
//! subset of these constraint groups.

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::program::{AffineExpr, ConicProgram, Var};
use crate::data::Dataset;
use crate::error::{DroError, Result};
use crate::metric::{categorical_distance_from_count, GroundMetricConfig, Norm};
use crate::solver::{solve, SolveResult, SolveStatus, SolverConfig};

/// Encode `log(1 + exp(c)) ≤ a` as `u + v ≤ 1`, `(u, 1, −a) ∈ K_exp`,
/// `(v, 1, c − a) ∈ K_exp` with fresh auxiliaries. Returns `(u, v)`.
pub fn softplus_epigraph(
    program: &mut ConicProgram,
    c: AffineExpr,
    a: AffineExpr,
    tag: &str,
) -> (Var, Var) {
    let u = program.add_free_var(format!("u{tag}"));
    let v = program.add_free_var(format!("v{tag}"));
    program.add_le(AffineExpr::from(u) + v.into(), 1.0.into());
    program.add_exp_cone(u.into(), 1.0.into(), -a.clone());
    program.add_exp_cone(v.into(), 1.0.into(), c - a);
    (u, v)
}

/// The two constraint families: the observed label kept, or flipped at
/// cost `λκ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    /// Sign `σ` such that the loss argument is `σ·yᵢ·score`.
    pub fn label_sign(self) -> f64 {
        match self {
            Family::Plus => -1.0,
            Family::Minus => 1.0,
        }
    }
}

/// Model options shared by all robust builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroConfig {
    pub epsilon: f64,
    pub metric: GroundMetricConfig,
    /// Solver safeguard on `λ`.
    pub lambda_max: f64,
    /// Box bound on every coefficient.
    pub coef_bound: f64,
    /// Omit the label-flip family (the `κ → ∞` limit).
    pub drop_label_flip: bool,
    /// Lasso weight on `(β_N, β_C)`; zero for the plain robust model.
    pub lasso: f64,
    /// Whether the lasso term also covers `β₀`.
    #[serde(default)]
    pub lasso_intercept: bool,
    /// Largest `|C|` the monolithic builder will enumerate.
    pub enumeration_cap: u128,
}

impl Default for DroConfig {
    fn default() -> Self {
        DroConfig {
            epsilon: 0.1,
            metric: GroundMetricConfig::default(),
            lambda_max: 1e8,
            coef_bound: 1e4,
            drop_label_flip: false,
            lasso: 0.0,
            lasso_intercept: false,
            enumeration_cap: 1 << 20,
        }
    }
}

impl DroConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.metric.kappa = kappa;
        self
    }

    /// Upper bound actually placed on `λ`: `lambda_max`, divided by `κ`
    /// when the label-flip family is present so that `λκ ≤ lambda_max`.
    pub fn lambda_cap(&self) -> f64 {
        if self.drop_label_flip {
            self.lambda_max
        } else {
            self.lambda_max / self.metric.kappa.max(1.0)
        }
    }

    /// Bound on `λ` for `dataset` when every coefficient lies in
    /// `[−scale, scale]`. Beyond `(S + log 2)/min(1, κ)`, with `S` the
    /// largest possible score magnitude, every off-sample group is slack, so
    /// the bound never cuts off an optimum; the configured safeguard applies
    /// on top.
    pub fn lambda_cap_for(&self, dataset: &Dataset, scale: f64) -> Result<f64> {
        let x_max = (0..dataset.len())
            .map(|i| dataset.x(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let score = scale * (1.0 + x_max + dataset.num_categorical() as f64);
        let groups = (score + std::f64::consts::LN_2) / self.metric.kappa.min(1.0);
        let dual_row = scale * self.metric.dual_norm(&vec![1.0; dataset.num_numeric()])?;
        Ok(self.lambda_cap().min(groups.max(dual_row)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(DroError::InvalidArgument(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.lasso >= 0.0) {
            return Err(DroError::InvalidArgument(format!(
                "lasso weight must be non-negative, got {}",
                self.lasso
            )));
        }
        if !(self.lambda_max > 0.0 && self.coef_bound > 0.0) {
            return Err(DroError::InvalidArgument("bounds must be positive".into()));
        }
        self.metric.validate()
    }
}

#[derive(Debug, Clone)]
enum Beta {
    Free {
        beta0: Var,
        num: Vec<Var>,
        cat: Vec<Vec<Var>>,
    },
    Fixed(ModelParams),
}

/// Handles of one generated constraint group.
#[derive(Debug, Clone, PartialEq)]
pub struct CutVars {
    pub i: usize,
    pub z: Vec<usize>,
    pub family: Family,
    pub u: Var,
    pub v: Var,
}

/// A robust (or, at `ε = 0`, empirical) logistic regression program under
/// construction.
#[derive(Debug, Clone)]
pub struct DroModel {
    program: ConicProgram,
    beta: Beta,
    lambda: Option<Var>,
    lambda_cap: f64,
    s: Vec<Var>,
    cuts: Vec<CutVars>,
    config: DroConfig,
}

/// Values of a solved model.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub beta: ModelParams,
    pub lambda: f64,
    pub s: Vec<f64>,
    /// `λε + (1/N)Σ sᵢ` (+ lasso term) at the returned point.
    pub objective: f64,
    pub status: SolveStatus,
    /// `(u, v)` for each constraint group, in the order of [`DroModel::cuts`].
    pub cut_values: Vec<(f64, f64)>,
    pub solve_time: f64,
    pub lambda_at_bound: bool,
    /// Some coefficient sits on the box bound, typically because the
    /// data are separable.
    pub coef_at_bound: bool,
}

impl DroModel {
    /// Base variables, the dual-norm row and the objective, without any
    /// constraint groups. With `fixed_beta` the coefficients enter as
    /// constants.
    pub fn new(
        dataset: &Dataset,
        config: &DroConfig,
        fixed_beta: Option<&ModelParams>,
    ) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(DroError::EmptyDataset);
        }
        let mut program = ConicProgram::new();
        let bound = config.coef_bound;
        let beta = match fixed_beta {
            Some(p) => {
                p.check_dims(dataset)?;
                Beta::Fixed(p.clone())
            }
            None => Beta::Free {
                beta0: program.add_var("beta0", -bound, bound),
                num: (0..dataset.num_numeric())
                    .map(|j| program.add_var(format!("beta_num[{j}]"), -bound, bound))
                    .collect(),
                cat: dataset
                    .cardinalities()
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| {
                        (1..k)
                            .map(|t| program.add_var(format!("beta_cat[{j}][{t}]"), -bound, bound))
                            .collect()
                    })
                    .collect(),
            },
        };
        let robust = config.epsilon > 0.0;
        let scale = match &beta {
            Beta::Fixed(p) => bound.max(p.max_abs()),
            Beta::Free { .. } => bound,
        };
        let lambda_cap = config.lambda_cap_for(dataset, scale)?;
        let lambda = robust.then(|| program.add_var("lambda", 0.0, lambda_cap));
        let s: Vec<Var> = (0..dataset.len())
            .map(|i| program.add_free_var(format!("s[{i}]")))
            .collect();

        let mut objective = AffineExpr::default();
        if let Some(l) = lambda {
            objective.add_term(l, config.epsilon);
        }
        let inv_n = 1.0 / dataset.len() as f64;
        for &si in &s {
            objective.add_term(si, inv_n);
        }

        let mut model = DroModel {
            program,
            beta,
            lambda,
            lambda_cap,
            s,
            cuts: Vec::new(),
            config: config.clone(),
        };
        if let Some(l) = lambda {
            model.add_dual_norm_row(l, dataset.num_numeric())?;
        }
        if config.lasso > 0.0 {
            model.add_lasso(&mut objective);
        }
        model.program.set_objective(objective);
        Ok(model)
    }

    fn numeric_slope_exprs(&self, n: usize) -> Vec<AffineExpr> {
        match &self.beta {
            Beta::Free { num, .. } => num.iter().map(|&v| v.into()).collect(),
            Beta::Fixed(p) => (0..n)
                .map(|j| AffineExpr::constant(p.beta_num[j]))
                .collect(),
        }
    }

    /// `‖β_N‖_* ≤ λ` for the configured (possibly weighted) norm.
    fn add_dual_norm_row(&mut self, lambda: Var, n: usize) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let weights = match &self.config.metric.weights {
            Some(w) if w.len() != n => {
                return Err(DroError::DimensionMismatch(format!(
                    "{} metric weights for {n} numeric features",
                    w.len()
                )))
            }
            Some(w) => w.clone(),
            None => vec![1.0; n],
        };
        // dual norm of a weighted primal norm acts on β_j / w_j
        let scaled: Vec<AffineExpr> = self
            .numeric_slope_exprs(n)
            .into_iter()
            .zip(&weights)
            .map(|(e, w)| e * (1.0 / w))
            .collect();
        let lam = AffineExpr::from(lambda);
        match self.config.metric.norm {
            Norm::L1 => {
                for e in scaled {
                    self.program.add_le(e.clone(), lam.clone());
                    self.program.add_le(-e, lam.clone());
                }
            }
            Norm::L2 => self.program.add_soc(lam, scaled),
            Norm::Linf => {
                let mut total = AffineExpr::default();
                for (j, e) in scaled.into_iter().enumerate() {
                    let t = self
                        .program
                        .add_var(format!("dual_abs[{j}]"), 0.0, f64::INFINITY);
                    self.program.add_le(e.clone(), t.into());
                    self.program.add_le(-e, t.into());
                    total.add_term(t, 1.0);
                }
                self.program.add_le(total, lam);
            }
        }
        Ok(())
    }

    fn add_lasso(&mut self, objective: &mut AffineExpr) {
        let Beta::Free { beta0, num, cat } = &self.beta else {
            return;
        };
        let intercept = self.config.lasso_intercept.then_some(*beta0);
        let slopes: Vec<Var> = intercept
            .into_iter()
            .chain(num.iter().chain(cat.iter().flatten()).copied())
            .collect();
        for (j, b) in slopes.into_iter().enumerate() {
            let t = self
                .program
                .add_var(format!("lasso_abs[{j}]"), 0.0, f64::INFINITY);
            self.program.add_le(b.into(), t.into());
            self.program.add_le(-AffineExpr::from(b), t.into());
            objective.add_term(t, self.config.lasso);
        }
    }

    /// `β₀ + β_N·xᵢ + β_C·z` as an affine expression.
    fn score_expr(&self, dataset: &Dataset, i: usize, z: &[usize]) -> AffineExpr {
        match &self.beta {
            Beta::Fixed(p) => AffineExpr::constant(p.score(dataset.x(i), z)),
            Beta::Free { beta0, num, cat } => {
                let mut e = AffineExpr::term(*beta0, 1.0);
                for (v, &xv) in num.iter().zip(dataset.x(i)) {
                    e.add_term(*v, xv);
                }
                for (j, &t) in z.iter().enumerate() {
                    if t > 0 {
                        e.add_term(cat[j][t - 1], 1.0);
                    }
                }
                e
            }
        }
    }

    /// Whether a group is part of the model at all. At `ε = 0` only the
    /// observed points of the plus family matter.
    pub fn accepts(&self, dataset: &Dataset, i: usize, z: &[usize], family: Family) -> bool {
        match self.lambda {
            Some(_) => !(family == Family::Minus && self.config.drop_label_flip),
            None => family == Family::Plus && z == dataset.z(i),
        }
    }

    /// Add the constraint group of `(i, z)` for `family`. Returns `false`
    /// when the group is not part of this model (see [`Self::accepts`]).
    pub fn add_cut(
        &mut self,
        dataset: &Dataset,
        i: usize,
        z: &[usize],
        family: Family,
    ) -> Result<bool> {
        if i >= dataset.len() {
            return Err(DroError::InvalidArgument(format!(
                "data index {i} out of range for N = {}",
                dataset.len()
            )));
        }
        if z.len() != dataset.num_categorical() {
            return Err(DroError::DimensionMismatch(format!(
                "cut has {} categorical values, data has {}",
                z.len(),
                dataset.num_categorical()
            )));
        }
        if let Some((j, &t)) = z
            .iter()
            .enumerate()
            .find(|(j, &t)| t >= dataset.cardinalities()[*j])
        {
            return Err(DroError::CategoryOutOfRange {
                index: t,
                cardinality: dataset.cardinalities()[j],
            });
        }
        if !self.accepts(dataset, i, z, family) {
            return Ok(false);
        }
        let theta = self.score_expr(dataset, i, z) * (family.label_sign() * dataset.y(i));
        let mut rhs = AffineExpr::term(self.s[i], 1.0);
        if let Some(l) = self.lambda {
            let count = z.iter().zip(dataset.z(i)).filter(|(a, b)| a != b).count();
            let mut penalty = categorical_distance_from_count(count, self.config.metric.p);
            if family == Family::Minus {
                penalty += self.config.metric.kappa;
            }
            rhs.add_term(l, penalty);
        }
        let tag = format!(
            "{}[{i};{}]",
            match family {
                Family::Plus => "+",
                Family::Minus => "-",
            },
            z.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        );
        let (u, v) = softplus_epigraph(&mut self.program, theta, rhs, &tag);
        self.cuts.push(CutVars {
            i,
            z: z.to_vec(),
            family,
            u,
            v,
        });
        Ok(true)
    }

    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    pub fn into_program(self) -> ConicProgram {
        self.program
    }

    pub fn cuts(&self) -> &[CutVars] {
        &self.cuts
    }

    pub fn config(&self) -> &DroConfig {
        &self.config
    }

    /// Solve and extract; anything but an optimal status is an error.
    pub fn solve(&self, solver: &SolverConfig) -> Result<MasterSolution> {
        let result = solve(&self.program, solver)?;
        if !result.is_optimal() {
            return Err(DroError::Solver {
                status: result.status,
                context: String::new(),
            });
        }
        Ok(self.extract(&result))
    }

    /// Read model quantities off a solver result.
    pub fn extract(&self, result: &SolveResult) -> MasterSolution {
        let x = &result.x;
        let beta = match &self.beta {
            Beta::Fixed(p) => p.clone(),
            Beta::Free { beta0, num, cat } => ModelParams {
                beta0: x[beta0.0],
                beta_num: num.iter().map(|v| x[v.0]).collect(),
                beta_cat: cat
                    .iter()
                    .map(|blk| blk.iter().map(|v| x[v.0]).collect())
                    .collect(),
            },
        };
        let lambda = self.lambda.map_or(0.0, |l| x[l.0]);
        let lambda_at_bound = self.lambda.is_some() && lambda >= self.lambda_cap * (1.0 - 1e-6);
        if lambda_at_bound {
            log::warn!("lambda reached its safeguard bound {}", self.lambda_cap);
        }
        let coef_at_bound = matches!(self.beta, Beta::Free { .. })
            && beta.max_abs() >= self.config.coef_bound * (1.0 - 1e-6);
        if coef_at_bound {
            log::warn!(
                "a coefficient reached the bound {}; the data may be separable",
                self.config.coef_bound
            );
        }
        MasterSolution {
            coef_at_bound,
            beta,
            lambda,
            s: self.s.iter().map(|v| x[v.0]).collect(),
            objective: result.objective,
            status: result.status,
            cut_values: self.cuts.iter().map(|c| (x[c.u.0], x[c.v.0])).collect(),
            solve_time: result.solve_time,
            lambda_at_bound,
        }
    }
}

/// Every `z ∈ C` in mixed-radix order (last feature fastest).
pub fn enumerate_categories(cardinalities: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: u128 = cardinalities.iter().map(|&k| k as u128).product();
    let mut current = vec![0usize; cardinalities.len()];
    let mut produced: u128 = 0;
    std::iter::from_fn(move || {
        if produced == total {
            return None;
        }
        let out = current.clone();
        produced += 1;
        for j in (0..cardinalities.len()).rev() {
            current[j] += 1;
            if current[j] < cardinalities[j] {
                break;
            }
            current[j] = 0;
        }
        Some(out)
    })
}

/// The full program: every `(i, z) ∈ [N] × C` in both families.
pub fn build_monolithic(dataset: &Dataset, config: &DroConfig) -> Result<DroModel> {
    build_monolithic_with(dataset, config, None)
}

pub(crate) fn build_monolithic_with(
    dataset: &Dataset,
    config: &DroConfig,
    fixed_beta: Option<&ModelParams>,
) -> Result<DroModel> {
    config.validate()?;
    let size = dataset.category_space_size();
    if config.epsilon > 0.0 && size > config.enumeration_cap {
        return Err(DroError::EnumerationCap {
            size,
            cap: config.enumeration_cap,
        });
    }
    let mut model = DroModel::new(dataset, config, fixed_beta)?;
    if config.epsilon == 0.0 {
        for i in 0..dataset.len() {
            model.add_cut(dataset, i, dataset.z(i), Family::Plus)?;
        }
        return Ok(model);
    }
    let all: Vec<Vec<usize>> = enumerate_categories(dataset.cardinalities()).collect();
    for i in 0..dataset.len() {
        for z in &all {
            model.add_cut(dataset, i, z, Family::Plus)?;
            model.add_cut(dataset, i, z, Family::Minus)?;
        }
    }
    Ok(model)
}

/// The relaxation restricted to the listed `(i, z)` pairs.
pub fn build_reduced_master(
    dataset: &Dataset,
    plus: &[(usize, Vec<usize>)],
    minus: &[(usize, Vec<usize>)],
    config: &DroConfig,
) -> Result<DroModel> {
    let mut model = DroModel::new(dataset, config, None)?;
    for (i, z) in plus {
        model.add_cut(dataset, *i, z, Family::Plus)?;
    }
    for (i, z) in minus {
        model.add_cut(dataset, *i, z, Family::Minus)?;
    }
    Ok(model)
}

/// Robust model that treats every feature as numeric: no categorical
/// enumeration, ground metric `Σ_j w_j |x_j − x'_j| + κ·1[y ≠ y']`.
pub fn build_continuous_model(
    dataset: &Dataset,
    epsilon: f64,
    kappa: f64,
    weights: Option<Vec<f64>>,
) -> Result<DroModel> {
    if dataset.num_categorical() != 0 {
        return Err(DroError::InvalidArgument(
            "continuous model expects numeric features only; re-code categorical columns first"
                .into(),
        ));
    }
    let mut metric = GroundMetricConfig::new(Norm::L1, 1.0, kappa)?;
    if let Some(w) = weights {
        metric = metric.with_weights(w)?;
    }
    let config = DroConfig {
        epsilon,
        metric,
        ..DroConfig::default()
    };
    build_monolithic(dataset, &config)
}
