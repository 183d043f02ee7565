use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_method, median, task_seed, ExperimentConfig, Hyper, Method};
use crate::baselines::classification_error;
use crate::data::{k_folds, split, Dataset, Standardizer};
use crate::error::{DroError, Result};

/// Mean validation error of one grid value, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub hyper: Hyper,
    pub mean_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub method: Method,
    pub chosen: Hyper,
    pub scores: Vec<CvScore>,
}

fn scaled_pair(train: &Dataset, test: &Dataset, standardize: bool) -> (Dataset, Dataset) {
    if standardize && train.num_numeric() > 0 {
        let s = Standardizer::fit(train);
        (s.apply(train), s.apply(test))
    } else {
        (train.clone(), test.clone())
    }
}

/// K-fold cross-validation over the method's grid. Ties go to the smaller
/// `ε`, then the smaller `γ`; grid values whose fit fails in any fold are
/// skipped.
pub fn cross_validate(
    train: &Dataset,
    method: Method,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<CvOutcome> {
    config.validate()?;
    let candidates = method.candidates(&config.grid);
    if candidates.len() == 1 {
        return Ok(CvOutcome {
            method,
            chosen: candidates[0],
            scores: vec![CvScore {
                hyper: candidates[0],
                mean_error: None,
                failure: None,
            }],
        });
    }
    let folds: Vec<(Dataset, Dataset)> = k_folds(train, config.folds, seed)?
        .iter()
        .map(|(tr, va)| scaled_pair(tr, va, config.standardize))
        .collect();
    let k = folds.len();
    let errors: Vec<Result<f64>> = (0..candidates.len() * k)
        .into_par_iter()
        .map(|task| {
            let (tr, va) = &folds[task % k];
            let params = fit_method(method, candidates[task / k], tr, config)?;
            Ok(classification_error(&params, va))
        })
        .collect();

    let mut scores = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, Hyper)> = None;
    for (c, chunk) in candidates.iter().zip(errors.chunks(k)) {
        let mut sum = 0.0;
        let mut failure = None;
        for (f, e) in chunk.iter().enumerate() {
            match e {
                Ok(v) => sum += v,
                Err(err) => {
                    failure = Some(format!("fold {f}: {err}"));
                    break;
                }
            }
        }
        if let Some(msg) = failure {
            log::warn!(
                "{method} skips epsilon {} gamma {}: {msg}",
                c.epsilon,
                c.gamma
            );
            scores.push(CvScore {
                hyper: *c,
                mean_error: None,
                failure: Some(msg),
            });
            continue;
        }
        let mean = sum / k as f64;
        if best.is_none_or(|(b, _)| mean < b) {
            best = Some((mean, *c));
        }
        scores.push(CvScore {
            hyper: *c,
            mean_error: Some(mean),
            failure: None,
        });
    }
    match best {
        Some((_, chosen)) => Ok(CvOutcome {
            method,
            chosen,
            scores,
        }),
        None => Err(DroError::InvalidArgument(format!(
            "{method}: every grid value failed during cross-validation"
        ))),
    }
}

/// Results of one method over all splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub median_error: f64,
    pub errors: Vec<f64>,
    pub chosen: Vec<Hyper>,
    /// Wall time of tuning plus the final fit, per split.
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub splits: usize,
    pub seed: u64,
    pub rows: usize,
    pub methods: Vec<MethodReport>,
}

impl BenchmarkReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == method)
    }

    /// One row per split and method.
    pub fn write_splits_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["split", "method", "error", "epsilon", "gamma", "seconds"])?;
        for r in &self.methods {
            for s in 0..self.splits {
                w.write_record([
                    s.to_string(),
                    r.method.to_string(),
                    format!("{:.4}", r.errors[s]),
                    r.chosen[s].epsilon.to_string(),
                    r.chosen[s].gamma.to_string(),
                    format!("{:.3}", r.seconds[s]),
                ])?;
            }
        }
        w.flush().map_err(|e| DroError::io("<csv>", e))
    }

    /// Median error per method.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "median_error", "splits"])?;
        for r in &self.methods {
            w.write_record([
                r.method.to_string(),
                format!("{:.4}", r.median_error),
                self.splits.to_string(),
            ])?;
        }
        w.flush().map_err(|e| DroError::io("<csv>", e))
    }
}

struct SplitResult {
    error: f64,
    chosen: Hyper,
    seconds: f64,
}

fn run_split(
    dataset: &Dataset,
    methods: &[Method],
    config: &ExperimentConfig,
    split_seed: u64,
) -> Result<Vec<SplitResult>> {
    let (train, test) = split(dataset, config.train_fraction, split_seed)?;
    let (train, test) = scaled_pair(&train, &test, config.standardize);
    let cv_seed = task_seed(split_seed, 0);
    methods
        .par_iter()
        .map(|&method| {
            let start = Instant::now();
            let cv = cross_validate(&train, method, config, cv_seed)?;
            let params = fit_method(method, cv.chosen, &train, config)?;
            Ok(SplitResult {
                error: classification_error(&params, &test),
                chosen: cv.chosen,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Vec<Result<SplitResult>>>()
        .into_iter()
        .zip(methods)
        .map(|(r, m)| r.map_err(|e| e.in_task(format!("method {m}"))))
        .collect()
}

/// `R` random train/test splits; each method is tuned by cross-validation
/// on the training part, refitted on all of it and scored on the test part.
pub fn benchmark(
    dataset: &Dataset,
    methods: &[Method],
    splits: usize,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<BenchmarkReport> {
    config.validate()?;
    if splits == 0 {
        return Err(DroError::InvalidArgument("need at least one split".into()));
    }
    if methods.is_empty() {
        return Err(DroError::InvalidArgument("no methods to benchmark".into()));
    }
    let per_split: Vec<Vec<SplitResult>> = (0..splits)
        .into_par_iter()
        .map(|r| {
            run_split(dataset, methods, config, task_seed(seed, r as u64))
                .map_err(|e| e.in_task(format!("split {r}")))
        })
        .collect::<Result<_>>()?;
    let methods = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let errors: Vec<f64> = per_split.iter().map(|s| s[k].error).collect();
            MethodReport {
                method,
                median_error: median(&errors),
                chosen: per_split.iter().map(|s| s[k].chosen).collect(),
                seconds: per_split.iter().map(|s| s[k].seconds).collect(),
                errors,
            }
        })
        .collect();
    Ok(BenchmarkReport {
        splits,
        seed,
        rows: dataset.len(),
        methods,
    })
}
