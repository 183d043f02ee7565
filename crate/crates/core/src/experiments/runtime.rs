use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{quantile, task_seed};
use crate::conic::{build_monolithic, DroConfig};
use crate::cutgen::{run, EngineConfig, Termination};
use crate::data::generate_synthetic;
use crate::error::{DroError, Result};
use crate::solver::{solve, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Monolithic,
    CuttingPlane,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Monolithic => "monolithic",
            Solver::CuttingPlane => "cutting-plane",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuntimeConfig {
    pub ns: Vec<usize>,
    pub ms: Vec<usize>,
    pub repetitions: usize,
    pub epsilon: f64,
    /// Box on the coefficients; the optimal ones are small on this data.
    pub coef_bound: f64,
    /// Seconds per run; longer runs are censored.
    pub time_cap: f64,
    /// Largest number of constraint groups `2·N·2^m` the monolithic
    /// solver is given.
    pub group_cap: u64,
    pub solvers: Vec<Solver>,
    pub engine: EngineConfig,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            ns: vec![50],
            ms: vec![6, 8, 10, 12],
            repetitions: 5,
            epsilon: 0.01,
            coef_bound: 100.0,
            time_cap: 600.0,
            group_cap: 1 << 20,
            solvers: vec![Solver::Monolithic, Solver::CuttingPlane],
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeStatus {
    /// Every repetition finished.
    Ok,
    /// Some repetitions hit the time cap.
    Censored,
    /// Some repetitions ended in a solver failure.
    Failed,
    /// The instance exceeds the monolithic size cap; nothing was run.
    Cap,
}

/// Timings of one solver on one `(N, m)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub n: usize,
    pub m: usize,
    pub solver: Solver,
    pub status: RuntimeStatus,
    /// Seconds of finished runs.
    pub times: Vec<f64>,
    pub censored: usize,
    #[serde(default)]
    pub failed: usize,
    /// Optimal values of finished runs, by repetition.
    pub values: Vec<Option<f64>>,
}

impl RuntimeRow {
    pub fn median(&self) -> Option<f64> {
        (!self.times.is_empty()).then(|| quantile(&self.times, 0.5))
    }

    pub fn q10(&self) -> Option<f64> {
        (!self.times.is_empty()).then(|| quantile(&self.times, 0.1))
    }

    pub fn q90(&self) -> Option<f64> {
        (!self.times.is_empty()).then(|| quantile(&self.times, 0.9))
    }
}

/// CSV with one row per cell and solver; cells skipped for size read `CAP`,
/// cells without a finished run read `TIME`, or `FAIL` when no run was cut
/// by the time cap.
pub fn write_runtime_csv<W: Write>(rows: &[RuntimeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n", "m", "solver", "status", "finished", "censored", "failed", "median_s", "q10_s",
        "q90_s",
    ])?;
    for r in rows {
        let fmt = |v: Option<f64>| match (r.status, v) {
            (RuntimeStatus::Cap, _) => "CAP".to_string(),
            (_, Some(t)) => format!("{t:.4}"),
            (_, None) if r.censored > 0 => "TIME".to_string(),
            (_, None) => "FAIL".to_string(),
        };
        let status = match r.status {
            RuntimeStatus::Ok => "ok",
            RuntimeStatus::Censored => "censored",
            RuntimeStatus::Failed => "failed",
            RuntimeStatus::Cap => "CAP",
        };
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.solver.name().to_string(),
            status.to_string(),
            r.times.len().to_string(),
            r.censored.to_string(),
            r.failed.to_string(),
            fmt(r.median()),
            fmt(r.q10()),
            fmt(r.q90()),
        ])?;
    }
    w.flush().map_err(|e| DroError::io("<csv>", e))
}

fn time_monolithic(
    data: &crate::data::Dataset,
    dro: &DroConfig,
    engine: &EngineConfig,
    cap: f64,
) -> Result<Option<(f64, f64)>> {
    let start = Instant::now();
    let model = build_monolithic(data, dro)?;
    let mut solver = engine.solver.clone();
    let left = cap - start.elapsed().as_secs_f64();
    if left <= 0.0 {
        return Ok(None);
    }
    solver.time_limit = Some(left);
    let result = solve(model.program(), &solver)?;
    match result.status {
        SolveStatus::TimeLimit => Ok(None),
        _ => {
            let result = result.require_optimal()?;
            Ok(Some((start.elapsed().as_secs_f64(), result.objective)))
        }
    }
}

fn time_engine(
    data: &crate::data::Dataset,
    dro: &DroConfig,
    engine: &EngineConfig,
    cap: f64,
) -> Result<Option<(f64, f64)>> {
    let start = Instant::now();
    let mut engine = engine.clone();
    engine.time_limit = Some(cap);
    engine.solver.time_limit = Some(cap);
    let result = run(data, dro, &engine)?;
    let elapsed = start.elapsed().as_secs_f64();
    if result.termination == Termination::TimeLimit || elapsed > cap {
        return Ok(None);
    }
    Ok(Some((elapsed, result.objective())))
}

/// Wall time of the monolithic and cutting-plane solvers on synthetic
/// binary data. Repetitions run sequentially so that timings are not
/// distorted by sharing cores.
pub fn runtime_study(config: &RuntimeConfig, seed: u64) -> Result<Vec<RuntimeRow>> {
    if config.repetitions == 0 || !(config.time_cap > 0.0) {
        return Err(DroError::Config(
            "need repetitions >= 1 and a positive time cap".into(),
        ));
    }
    let mut rows = Vec::new();
    for (a, &n) in config.ns.iter().enumerate() {
        for (b, &m) in config.ms.iter().enumerate() {
            let cell = (a * config.ms.len() + b) as u64;
            let dro = DroConfig {
                epsilon: config.epsilon,
                coef_bound: config.coef_bound,
                enumeration_cap: u128::MAX,
                ..DroConfig::default()
            };
            for &solver in &config.solvers {
                let groups = 2u128 * n as u128 * (1u128 << m.min(127));
                let mut row = RuntimeRow {
                    n,
                    m,
                    solver,
                    status: RuntimeStatus::Ok,
                    times: Vec::new(),
                    censored: 0,
                    failed: 0,
                    values: Vec::new(),
                };
                if solver == Solver::Monolithic && groups > config.group_cap as u128 {
                    row.status = RuntimeStatus::Cap;
                    rows.push(row);
                    continue;
                }
                for rep in 0..config.repetitions {
                    let data =
                        generate_synthetic(n, m, task_seed(task_seed(seed, cell), rep as u64))?
                            .dataset;
                    let timed = match solver {
                        Solver::Monolithic => {
                            time_monolithic(&data, &dro, &config.engine, config.time_cap)
                        }
                        Solver::CuttingPlane => {
                            time_engine(&data, &dro, &config.engine, config.time_cap)
                        }
                    }
                    .map_err(|e| {
                        e.in_task(format!(
                            "{} at N={n}, m={m}, repetition {rep}",
                            solver.name()
                        ))
                    });
                    match timed {
                        Err(e) if e.is_solver_failure() => {
                            log::warn!("{e}");
                            row.failed += 1;
                            row.values.push(None);
                        }
                        Err(e) => return Err(e),
                        Ok(Some((t, v))) => {
                            row.times.push(t);
                            row.values.push(Some(v));
                        }
                        Ok(None) => {
                            row.censored += 1;
                            row.values.push(None);
                        }
                    }
                }
                if row.failed > 0 {
                    row.status = RuntimeStatus::Failed;
                } else if row.censored > 0 {
                    row.status = RuntimeStatus::Censored;
                }
                log::info!(
                    "{} N={n} m={m}: median {:?} s, {} censored, {} failed",
                    solver.name(),
                    row.median(),
                    row.censored,
                    row.failed
                );
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_study_agrees_and_marks_the_cap() {
        let cfg = RuntimeConfig {
            ns: vec![10],
            ms: vec![2, 3, 9],
            repetitions: 2,
            time_cap: 120.0,
            group_cap: 1000,
            ..RuntimeConfig::default()
        };
        let rows = runtime_study(&cfg, 3).unwrap();
        assert_eq!(rows.len(), 6);
        for pair in rows.chunks(2) {
            let (mono, cp) = (&pair[0], &pair[1]);
            assert_eq!(cp.status, RuntimeStatus::Ok);
            if mono.m == 9 {
                assert_eq!(mono.status, RuntimeStatus::Cap);
                continue;
            }
            for (a, b) in mono.values.iter().zip(&cp.values) {
                let (a, b) = (a.unwrap(), b.unwrap());
                assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
        let mut buf = Vec::new();
        write_runtime_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .lines()
            .any(|l| l.starts_with("10,9,monolithic,CAP,0,0,0,CAP")));
    }
}
