//! Constraint generation for the robust model.
//!
//! Each iteration solves the master restricted to the current cut pools,
//! separates exactly over `[N] × C` for both families and adds the most
//! violated cuts. The master value is a lower bound; shifting every `sᵢ` by
//! the largest `log v` turns the master point into a feasible one, which
//! gives the upper bound.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_baseline, BaselineConfig};
use crate::conic::{
    build_monolithic_with, empirical_log_loss, DroConfig, DroModel, Family, MasterSolution,
    ModelParams,
};
use crate::data::Dataset;
use crate::error::{DroError, Result};
use crate::separation::{separate_each, ViolationReport};
use crate::solver::{solve, SolveStatus, SolverConfig};

/// When the pools are pruned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EasingSchedule {
    /// Every `period` iterations.
    Periodic { period: usize },
    /// At iterations `⌈start·ratio^k⌉`, `k = 0, 1, …`.
    Geometric { start: f64, ratio: f64 },
}

impl EasingSchedule {
    pub fn is_due(&self, iteration: usize) -> bool {
        match *self {
            EasingSchedule::Periodic { period } => {
                period > 0 && iteration > 0 && iteration % period == 0
            }
            EasingSchedule::Geometric { start, ratio } => {
                if !(start >= 1.0 && ratio > 1.0) {
                    return false;
                }
                let mut k = 0;
                loop {
                    let t = (start * ratio.powi(k)).ceil() as usize;
                    if t >= iteration {
                        return t == iteration;
                    }
                    k += 1;
                }
            }
        }
    }
}

/// Slack above which a cut is removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EasingThreshold {
    Constant {
        value: f64,
    },
    /// `start + step·(number of earlier easing events)`.
    Increasing {
        start: f64,
        step: f64,
    },
}

impl EasingThreshold {
    pub fn at_event(&self, event: usize) -> f64 {
        match *self {
            EasingThreshold::Constant { value } => value,
            EasingThreshold::Increasing { start, step } => start + step * event as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EasingConfig {
    pub schedule: EasingSchedule,
    pub threshold: EasingThreshold,
}

impl Default for EasingConfig {
    fn default() -> Self {
        EasingConfig {
            schedule: EasingSchedule::Periodic { period: 200 },
            threshold: EasingThreshold::Constant { value: 0.05 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seeding {
    /// `(i, zᵢ)` for every data point in both pools.
    #[default]
    Observed,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub solver: SolverConfig,
    /// Absolute tolerance on `UB − LB`.
    pub gap_tol: f64,
    /// Violations `ϑ` at or below this count as zero.
    pub violation_tol: f64,
    pub max_iterations: usize,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    /// Cuts added per family and iteration.
    pub cuts_per_family: usize,
    pub seeding: Seeding,
    pub easing: Option<EasingConfig>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            solver: SolverConfig::default(),
            gap_tol: 1e-6,
            violation_tol: 1e-8,
            max_iterations: 5000,
            time_limit: None,
            cuts_per_family: 1,
            seeding: Seeding::Observed,
            easing: None,
        }
    }
}

/// Key of a cut: family, data index and category tuple.
pub type CutKey = (Family, usize, Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct CutMeta {
    pub added_at: usize,
    pub times_deleted: usize,
    pub last_slack: Option<f64>,
}

/// Active cuts of both families, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    active: Vec<CutKey>,
    meta: HashMap<CutKey, CutMeta>,
    deleted: HashSet<CutKey>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` if the cut is already active.
    pub fn insert(&mut self, key: CutKey, iteration: usize) -> bool {
        if let Some(meta) = self.meta.get_mut(&key) {
            if self.active.contains(&key) {
                return false;
            }
            meta.added_at = iteration;
            meta.last_slack = None;
        } else {
            self.meta.insert(
                key.clone(),
                CutMeta {
                    added_at: iteration,
                    times_deleted: 0,
                    last_slack: None,
                },
            );
        }
        self.active.push(key);
        true
    }

    pub fn contains(&self, key: &CutKey) -> bool {
        self.meta.contains_key(key) && self.active.contains(key)
    }

    pub fn active(&self) -> &[CutKey] {
        &self.active
    }

    pub fn len(&self, family: Family) -> usize {
        self.active.iter().filter(|k| k.0 == family).count()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn meta(&self, key: &CutKey) -> Option<&CutMeta> {
        self.meta.get(key)
    }

    /// Whether easing may still remove this cut.
    pub fn deletable(&self, key: &CutKey) -> bool {
        !self.deleted.contains(key)
    }

    fn remove_where(&mut self, mut drop: impl FnMut(&CutKey) -> bool) -> usize {
        let before = self.active.len();
        let mut removed = Vec::new();
        self.active.retain(|k| {
            let gone = drop(k);
            if gone {
                removed.push(k.clone());
            }
            !gone
        });
        for k in removed {
            if let Some(m) = self.meta.get_mut(&k) {
                m.times_deleted += 1;
            }
            self.deleted.insert(k);
        }
        before - self.active.len()
    }
}

/// Initial pools for `dataset`.
pub fn seed_pool(dataset: &Dataset, seeding: Seeding) -> CutPool {
    let mut pool = CutPool::new();
    if seeding == Seeding::Observed {
        for family in [Family::Plus, Family::Minus] {
            for i in 0..dataset.len() {
                pool.insert((family, i, dataset.z(i).to_vec()), 0);
            }
        }
    }
    pool
}

/// Remove cuts whose slack `1 − (u + v)` exceeds the threshold of easing
/// event `event`, sparing cuts that were deleted before. `slacks` pairs
/// each active cut with its slack in the last master. Returns the number
/// removed.
pub fn ease(pool: &mut CutPool, slacks: &[(CutKey, f64)], threshold: f64) -> usize {
    let mut over = HashSet::new();
    for (key, slack) in slacks {
        if let Some(m) = pool.meta.get_mut(key) {
            m.last_slack = Some(*slack);
        }
        if *slack > threshold && pool.deletable(key) {
            over.insert(key.clone());
        }
    }
    pool.remove_where(|k| over.contains(k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub master_value: f64,
    pub plus_violation: f64,
    pub minus_violation: f64,
    pub plus_pool: usize,
    pub minus_pool: usize,
    pub cuts_added: usize,
    pub cuts_removed: usize,
    pub master_time: f64,
    pub separation_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `UB − LB` within tolerance.
    Gap,
    /// No violation above tolerance.
    NoViolation,
    /// Violations remain but every candidate cut is already in the pool;
    /// the master is not solved accurately enough to make progress.
    Stalled,
    IterationCap,
    TimeLimit,
    /// A master solve failed after earlier ones succeeded; the result is the
    /// iterate with the best upper bound.
    MasterFailure,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::Gap | Termination::NoViolation)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub iterations: Vec<IterationRecord>,
    pub total_time: f64,
}

impl RunTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration",
            "lower_bound",
            "upper_bound",
            "master_value",
            "plus_violation",
            "minus_violation",
            "plus_pool",
            "minus_pool",
            "cuts_added",
            "cuts_removed",
            "master_time",
            "separation_time",
        ])?;
        for r in &self.iterations {
            w.write_record([
                r.iteration.to_string(),
                r.lower_bound.to_string(),
                r.upper_bound.to_string(),
                r.master_value.to_string(),
                r.plus_violation.to_string(),
                r.minus_violation.to_string(),
                r.plus_pool.to_string(),
                r.minus_pool.to_string(),
                r.cuts_added.to_string(),
                r.cuts_removed.to_string(),
                r.master_time.to_string(),
                r.separation_time.to_string(),
            ])?;
        }
        w.flush().map_err(|e| DroError::io("<trace>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref()).map_err(|e| DroError::io(&path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone)]
pub struct EngineResult {
    /// Coefficients of the last master.
    pub params: ModelParams,
    pub lambda: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub termination: Termination,
    pub trace: RunTrace,
    pub lambda_at_bound: bool,
    pub coef_at_bound: bool,
}

impl EngineResult {
    /// Best feasible objective found.
    pub fn objective(&self) -> f64 {
        self.upper_bound
    }

    pub fn gap(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }
}

fn build_master(
    dataset: &Dataset,
    pool: &CutPool,
    config: &DroConfig,
    fixed_beta: Option<&ModelParams>,
) -> Result<DroModel> {
    let mut model = DroModel::new(dataset, config, fixed_beta)?;
    for (family, i, z) in pool.active() {
        model.add_cut(dataset, *i, z, *family)?;
    }
    Ok(model)
}

fn solve_master(
    dataset: &Dataset,
    pool: &CutPool,
    config: &DroConfig,
    fixed_beta: Option<&ModelParams>,
    solver: &SolverConfig,
    iteration: usize,
) -> Result<(DroModel, MasterSolution)> {
    let model = build_master(dataset, pool, config, fixed_beta)?;
    let result = solve(model.program(), solver)?;
    if !result.is_optimal() {
        return Err(DroError::Solver {
            status: result.status,
            context: format!(" in master problem at iteration {iteration}"),
        });
    }
    let sol = model.extract(&result);
    Ok((model, sol))
}

/// Top `count` violated reports, largest first, ties to the smaller index.
fn top_violations(
    mut reports: Vec<ViolationReport>,
    tol: f64,
    count: usize,
) -> Vec<ViolationReport> {
    reports.retain(|r| r.violation() > tol);
    reports.sort_by(|a, b| b.log_value.total_cmp(&a.log_value).then(a.i.cmp(&b.i)));
    reports.truncate(count);
    reports
}

/// Solve the robust problem by constraint generation.
pub fn run(dataset: &Dataset, config: &DroConfig, engine: &EngineConfig) -> Result<EngineResult> {
    run_inner(dataset, config, engine, None)
}

/// Worst-case expected log-loss of fixed coefficients, computed by
/// constraint generation over `(λ, s)`.
pub fn run_fixed(
    dataset: &Dataset,
    params: &ModelParams,
    config: &DroConfig,
    engine: &EngineConfig,
) -> Result<EngineResult> {
    params.check_dims(dataset)?;
    run_inner(dataset, config, engine, Some(params))
}

fn run_inner(
    dataset: &Dataset,
    config: &DroConfig,
    engine: &EngineConfig,
    fixed_beta: Option<&ModelParams>,
) -> Result<EngineResult> {
    config.validate()?;
    engine.solver.validate()?;
    if dataset.is_empty() {
        return Err(DroError::EmptyDataset);
    }
    let start = Instant::now();
    if config.epsilon == 0.0 {
        return solve_empirical(dataset, config, engine, fixed_beta, start);
    }

    let include_minus = !config.drop_label_flip;
    let mut pool = seed_pool(dataset, engine.seeding);
    if !include_minus {
        pool.remove_where(|k| k.0 == Family::Minus);
        pool.deleted.clear();
    }
    let mut trace = RunTrace::default();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut easing_events = 0;
    let mut last: Option<MasterSolution> = None;
    let mut incumbent: Option<(f64, MasterSolution)> = None;
    let mut termination = Termination::IterationCap;

    for t in 1..=engine.max_iterations {
        if engine
            .time_limit
            .is_some_and(|lim| start.elapsed().as_secs_f64() > lim)
        {
            termination = Termination::TimeLimit;
            break;
        }
        let t0 = Instant::now();
        let (model, sol) = match solve_master(dataset, &pool, config, fixed_beta, &engine.solver, t)
        {
            Ok(solved) => solved,
            Err(e) if last.is_some() && e.is_solver_failure() => {
                log::warn!("{e}; returning the best iterate so far");
                termination = Termination::MasterFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        let master_time = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let dual = config.metric.dual_norm(&sol.beta.beta_num)?;
        let lambda = sol.lambda.max(dual);
        let plus = separate_each(
            dataset,
            &sol.beta,
            lambda,
            &sol.s,
            Family::Plus,
            &config.metric,
        );
        let minus = if include_minus {
            separate_each(
                dataset,
                &sol.beta,
                lambda,
                &sol.s,
                Family::Minus,
                &config.metric,
            )
        } else {
            Vec::new()
        };
        let separation_time = t1.elapsed().as_secs_f64();

        let max_log = |rs: &[ViolationReport]| {
            rs.iter()
                .map(ViolationReport::log1p_violation)
                .fold(0.0, f64::max)
        };
        let plus_log = max_log(&plus);
        let minus_log = max_log(&minus);
        let theta = sol.objective;
        let candidate = theta + (lambda - sol.lambda) * config.epsilon + plus_log.max(minus_log);
        // the master value may drop after easing; both bounds stay valid
        lower = lower.max(theta);
        upper = upper.min(candidate.max(lower));
        lower = lower.min(upper);
        if incumbent.as_ref().is_none_or(|(v, _)| candidate < *v) {
            incumbent = Some((candidate, sol.clone()));
        }

        let mut removed = 0;
        if let Some(easing) = &engine.easing {
            if easing.schedule.is_due(t) {
                let slacks: Vec<(CutKey, f64)> = model
                    .cuts()
                    .iter()
                    .zip(&sol.cut_values)
                    .map(|(c, (u, v))| ((c.family, c.i, c.z.clone()), 1.0 - (u + v)))
                    .collect();
                removed = ease(&mut pool, &slacks, easing.threshold.at_event(easing_events));
                easing_events += 1;
            }
        }

        let plus_top = top_violations(plus, engine.violation_tol, engine.cuts_per_family);
        let minus_top = top_violations(minus, engine.violation_tol, engine.cuts_per_family);
        let violated = !(plus_top.is_empty() && minus_top.is_empty());
        let mut added = 0;
        for r in plus_top.iter().chain(&minus_top) {
            if pool.insert((r.family, r.i, r.z.clone()), t) {
                added += 1;
            }
        }

        trace.iterations.push(IterationRecord {
            iteration: t,
            lower_bound: lower,
            upper_bound: upper,
            master_value: theta,
            plus_violation: plus_log.exp_m1(),
            minus_violation: minus_log.exp_m1(),
            plus_pool: pool.len(Family::Plus),
            minus_pool: pool.len(Family::Minus),
            cuts_added: added,
            cuts_removed: removed,
            master_time,
            separation_time,
        });
        log::debug!("iteration {t}: LB {lower:.8} UB {upper:.8} added {added} removed {removed}");
        last = Some(sol);

        if upper - lower <= engine.gap_tol {
            termination = Termination::Gap;
            break;
        }
        if !violated {
            termination = Termination::NoViolation;
            break;
        }
        if added == 0 && removed == 0 {
            termination = Termination::Stalled;
            break;
        }
    }

    trace.total_time = start.elapsed().as_secs_f64();
    if termination == Termination::MasterFailure {
        last = incumbent.map(|(_, s)| s);
    }
    let sol = match last {
        Some(s) => s,
        None => {
            return Err(DroError::Solver {
                status: SolveStatus::TimeLimit,
                context: " before the first master solve".into(),
            })
        }
    };
    if termination == Termination::IterationCap {
        log::warn!(
            "iteration cap {} reached; returning last master",
            engine.max_iterations
        );
    }
    Ok(EngineResult {
        lambda: sol.lambda,
        lambda_at_bound: sol.lambda_at_bound,
        coef_at_bound: sol.coef_at_bound,
        params: sol.beta,
        lower_bound: lower,
        upper_bound: upper,
        termination,
        trace,
    })
}

fn solve_empirical(
    dataset: &Dataset,
    config: &DroConfig,
    engine: &EngineConfig,
    fixed_beta: Option<&ModelParams>,
    start: Instant,
) -> Result<EngineResult> {
    let (params, value, master_time, coef_at_bound) = match fixed_beta {
        Some(p) => (p.clone(), empirical_log_loss(p, dataset), 0.0, false),
        None => {
            let baseline = BaselineConfig {
                gamma: config.lasso,
                penalize_intercept: config.lasso_intercept,
                coef_bound: config.coef_bound,
                solver: engine.solver.clone(),
            };
            let fit = fit_baseline(dataset, &baseline)?;
            (fit.params, fit.objective, fit.solve_time, fit.coef_at_bound)
        }
    };
    let record = IterationRecord {
        iteration: 1,
        lower_bound: value,
        upper_bound: value,
        master_value: value,
        plus_violation: 0.0,
        minus_violation: 0.0,
        plus_pool: dataset.len(),
        minus_pool: 0,
        cuts_added: 0,
        cuts_removed: 0,
        master_time,
        separation_time: 0.0,
    };
    Ok(EngineResult {
        params,
        lambda: 0.0,
        lower_bound: value,
        upper_bound: value,
        termination: Termination::NoViolation,
        trace: RunTrace {
            iterations: vec![record],
            total_time: start.elapsed().as_secs_f64(),
        },
        lambda_at_bound: false,
        coef_at_bound,
    })
}

/// Size of `N·|C|` up to which [`evaluate_worst_case_loss`] enumerates.
const ENUMERATION_LIMIT: u128 = 4096;

/// `sup` of the expected log-loss of `params` over the Wasserstein ball of
/// radius `ε` around the empirical distribution.
pub fn evaluate_worst_case_loss(
    params: &ModelParams,
    dataset: &Dataset,
    config: &DroConfig,
) -> Result<f64> {
    params.check_dims(dataset)?;
    if params
        .slopes()
        .chain([params.beta0])
        .any(|v| !v.is_finite())
    {
        return Err(DroError::InvalidArgument(
            "coefficients must be finite".into(),
        ));
    }
    if config.epsilon == 0.0 {
        return Ok(empirical_log_loss(params, dataset));
    }
    let size = dataset
        .category_space_size()
        .saturating_mul(dataset.len() as u128);
    if size <= ENUMERATION_LIMIT {
        let model = build_monolithic_with(dataset, config, Some(params))?;
        let result = solve(model.program(), &SolverConfig::default())?;
        if !result.is_optimal() {
            return Err(DroError::Solver {
                status: result.status,
                context: " in worst-case loss evaluation".into(),
            });
        }
        return Ok(result.objective);
    }
    let result = run_fixed(dataset, params, config, &EngineConfig::default())?;
    if !result.termination.converged() {
        log::warn!(
            "worst-case loss evaluation stopped with {:?}",
            result.termination
        );
    }
    Ok(result.upper_bound)
}
