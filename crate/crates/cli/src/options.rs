use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "dro",
    version,
    about = "Robust logistic regression with categorical features"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML or JSON file with option values; flags take precedence. A run
    /// manifest is accepted as well.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Fit one model and write it as JSON.
    Train,
    /// Print the classification error of a saved model.
    Eval,
    /// Cross-validate one method over its grid.
    Cv,
    /// Tuned train/test benchmark over random splits.
    Bench,
    /// Generate a synthetic binary-feature dataset.
    Synth,
    /// Time the monolithic and cutting-plane solvers.
    Runtime,
    /// Slope estimates on a single binary feature.
    Stylized,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Cv => "cv",
            Command::Bench => "bench",
            Command::Synth => "synth",
            Command::Runtime => "runtime",
            Command::Stylized => "stylized",
        }
    }
}

/// Every setting a command may read. Unset values fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Input CSV.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Column roles and preprocessing (TOML).
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Saved model (eval).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Wasserstein radius.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Lasso weight.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Label-flip cost.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Numeric norm: l1, l2 or linf.
    #[arg(long, global = true)]
    pub norm: Option<String>,
    /// Exponent of the categorical disagreement count.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Seconds per run.
    #[arg(long, global = true)]
    pub time_cap: Option<f64>,
    /// lr, rlr, dro or dro-continuous (train); a benchmark method name (cv).
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Comma-separated benchmark methods.
    #[arg(long, global = true, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub splits: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub points_per_decade: Option<usize>,
    /// Explicit radius grid, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Explicit lasso grid, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Rows of synthetic data.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Binary features of synthetic data.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub ms: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub repetitions: Option<usize>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// `c` in the radius `c/√N` of the stylized study.
    #[arg(long, global = true)]
    pub radius_constant: Option<f64>,
    /// Largest number of constraint groups given to the monolithic solver.
    #[arg(long, global = true)]
    pub group_cap: Option<u64>,
}

impl Options {
    /// Flags over file values.
    pub fn merged_over(&self, file: &Options) -> Result<Options, Failure> {
        let mut base = serde_json::to_value(file).map_err(Failure::config)?;
        let over = serde_json::to_value(self).map_err(Failure::config)?;
        if let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) {
            for (k, v) in o {
                if !v.is_null() {
                    b.insert(k.clone(), v.clone());
                }
            }
        }
        serde_json::from_value(base).map_err(Failure::config)
    }

    pub fn load(path: &Path) -> Result<Options, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(Failure::config)?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            serde_json::from_value(value).map_err(Failure::config)
        } else {
            toml::from_str(&text).map_err(Failure::config)
        }
    }

    pub fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
        value
            .as_ref()
            .ok_or_else(|| Failure::config(format!("missing --{flag}")))
    }
}
