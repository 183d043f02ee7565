//! Backend for [`ConicProgram`] instances, built on the Clarabel
//! interior-point solver.
//!
//! Clarabel solves `min qᵀx s.t. Ax + s = b, s ∈ K`. Rows are emitted in the
//! order zero cone, nonnegative orthant, second-order cones, exponential
//! cones. Clarabel orders exponential-cone slots as `(c, b, a)` with
//! `a ≥ b·exp(c/b)`.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};

use crate::conic::{AffineExpr, ConicProgram, RowSense};
use crate::error::{DroError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: u32,
    /// Seconds; `None` means no limit.
    pub time_limit: Option<f64>,
    pub verbose: bool,
    /// Hint that the dual reformulation may be easier. The Clarabel backend is
    /// primal-dual already and ignores it.
    #[serde(default)]
    pub prefer_dual: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feasibility_tol: 1e-10,
            gap_tol: 1e-10,
            max_iterations: 200,
            time_limit: None,
            verbose: false,
            prefer_dual: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tol > 0.0) || !(self.gap_tol > 0.0) {
            return Err(DroError::Config(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.time_limit.is_some_and(|t| !(t > 0.0)) {
            return Err(DroError::Config("time limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    Numerical,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal values, one per program variable.
    pub x: Vec<f64>,
    /// Objective at `x`, including the objective constant.
    pub objective: f64,
    pub solve_time: f64,
    pub iterations: u32,
    /// Converged only to Clarabel's reduced tolerances.
    pub reduced_accuracy: bool,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// The result itself when optimal, an error carrying the status otherwise.
    pub fn require_optimal(self) -> Result<SolveResult> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(DroError::Solver {
                status: self.status,
                context: String::new(),
            })
        }
    }
}

#[derive(Default)]
struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Triplets {
    /// Append the row `sign·expr` to `A` and `sign·constant` to `b` such
    /// that the corresponding slack equals `b − A x`.
    fn push(&mut self, expr: &AffineExpr, a_sign: f64, b_value: f64) {
        let r = self.b.len();
        for (v, c) in &expr.terms {
            self.rows.push(r);
            self.cols.push(v.0);
            self.vals.push(a_sign * c);
        }
        self.b.push(b_value);
    }

    /// Slack row `s = expr(x)`.
    fn push_slack(&mut self, expr: &AffineExpr) {
        self.push(expr, -1.0, expr.constant);
    }
}

/// Solve `program`. Malformed programs are an error; solver outcomes other
/// than optimality are reported through [`SolveResult::status`].
const ATTEMPTS: usize = 3;

/// Settings for the `attempt`-th try; retries take shorter steps and the
/// last one also skips equilibration.
fn attempt_settings(config: &SolverConfig, attempt: usize) -> DefaultSettings<f64> {
    let base = DefaultSettings::<f64> {
        verbose: config.verbose,
        max_iter: config.max_iterations,
        tol_feas: config.feasibility_tol,
        tol_gap_abs: config.gap_tol,
        tol_gap_rel: config.gap_tol,
        equilibrate_min_scaling: 1e-6,
        equilibrate_max_scaling: 1e6,
        ..DefaultSettings::default()
    };
    match attempt {
        0 => base,
        1 => DefaultSettings {
            max_step_fraction: 0.9,
            ..base
        },
        _ => DefaultSettings {
            max_step_fraction: 0.8,
            equilibrate_enable: false,
            ..base
        },
    }
}

pub fn solve(program: &ConicProgram, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    program.validate().map_err(DroError::InvalidArgument)?;
    let n = program.num_vars();
    let start = Instant::now();

    let mut t = Triplets::default();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    // zero cone: equality rows and fixed variables
    let mut zero = 0;
    for row in program.rows().iter().filter(|r| r.sense == RowSense::Eq) {
        t.push(&row.expr, 1.0, -row.expr.constant);
        zero += 1;
    }
    for j in 0..n {
        let (lo, hi) = program.bounds(crate::conic::Var(j));
        if lo == hi {
            t.push(&AffineExpr::term(crate::conic::Var(j), 1.0), 1.0, lo);
            zero += 1;
        }
    }
    if zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(zero));
    }

    let mut nonneg = 0;
    for row in program.rows().iter().filter(|r| r.sense == RowSense::Le) {
        t.push(&row.expr, 1.0, -row.expr.constant);
        nonneg += 1;
    }
    for j in 0..n {
        let v = crate::conic::Var(j);
        let (lo, hi) = program.bounds(v);
        if lo == hi {
            continue;
        }
        if lo.is_finite() {
            t.push(&AffineExpr::term(v, -1.0), 1.0, -lo);
            nonneg += 1;
        }
        if hi.is_finite() {
            t.push(&AffineExpr::term(v, 1.0), 1.0, hi);
            nonneg += 1;
        }
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    for soc in program.socs() {
        t.push_slack(&soc.t);
        for e in &soc.x {
            t.push_slack(e);
        }
        cones.push(SupportedConeT::SecondOrderConeT(1 + soc.x.len()));
    }

    for cone in program.exp_cones() {
        t.push_slack(&cone.c);
        t.push_slack(&cone.b);
        t.push_slack(&cone.a);
        cones.push(SupportedConeT::ExponentialConeT());
    }

    let m = t.b.len();
    let a = CscMatrix::new_from_triplets(m, n, t.rows, t.cols, t.vals);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for (v, c) in &program.objective().terms {
        q[v.0] += c;
    }

    let mut attempt = 0;
    let (status, reduced, x, iterations) = loop {
        let mut settings = attempt_settings(config, attempt);
        if let Some(limit) = config.time_limit {
            let left = limit - start.elapsed().as_secs_f64();
            if left <= 0.0 {
                break (SolveStatus::TimeLimit, false, vec![0.0; n], 0);
            }
            settings.time_limit = left;
        }
        let mut solver = DefaultSolver::new(&p, &q, &a, &t.b, &cones, settings)
            .map_err(|e| DroError::InvalidArgument(format!("solver setup failed: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let (status, reduced) = match sol.status {
            SolverStatus::Solved => (SolveStatus::Optimal, false),
            SolverStatus::AlmostSolved => (SolveStatus::Optimal, true),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                (SolveStatus::Infeasible, false)
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                (SolveStatus::Unbounded, false)
            }
            SolverStatus::MaxIterations => (SolveStatus::IterationLimit, false),
            SolverStatus::MaxTime => (SolveStatus::TimeLimit, false),
            _ => (SolveStatus::Numerical, false),
        };
        if status == SolveStatus::Numerical && attempt + 1 < ATTEMPTS {
            log::debug!(
                "solve: insufficient progress on attempt {attempt}, retrying with shorter steps"
            );
            attempt += 1;
            continue;
        }
        break (status, reduced, sol.x.clone(), sol.iterations);
    };
    let objective = program.objective_value(&x);
    if config.verbose {
        log::info!(
            "solve: {status:?} obj={objective:.10} iters={} vars={n} rows={m}",
            iterations
        );
    }
    Ok(SolveResult {
        status,
        x,
        objective,
        solve_time: start.elapsed().as_secs_f64(),
        iterations,
        reduced_accuracy: reduced,
    })
}
