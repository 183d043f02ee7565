use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{DroError, Result};

/// A synthetic instance together with the parameters that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub truth: GroundTruth,
}

/// Sidecar contents written next to an exported synthetic CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta0: f64,
    pub beta_cat: Vec<f64>,
    pub seed: u64,
}

impl GroundTruth {
    /// `P(y = +1 | z)` under the generating model.
    pub fn probability(&self, z: &[usize]) -> f64 {
        let score = self.beta0
            + self
                .beta_cat
                .iter()
                .zip(z)
                .map(|(b, &t)| b * t as f64)
                .sum::<f64>();
        1.0 / (1.0 + (-score).exp())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path.as_ref(), text).map_err(|e| DroError::io(&path, e))
    }
}

/// `N` records with `m` binary features. Coefficients are standard normal,
/// scaled to unit Euclidean norm over `(β₀, β_C)`; features are uniform on
/// `{0,1}^m` and labels follow the logistic law.
pub fn generate_synthetic(n: usize, m: usize, seed: u64) -> Result<SyntheticDataset> {
    if n == 0 || m == 0 {
        return Err(DroError::InvalidArgument(
            "synthetic data needs N >= 1 and m >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta: Vec<f64> = (0..=m).map(|_| rng.sample(StandardNormal)).collect();
    let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    beta.iter_mut().for_each(|b| *b /= norm);
    let truth = GroundTruth {
        beta0: beta[0],
        beta_cat: beta[1..].to_vec(),
        seed,
    };
    let mut z_rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<usize> = (0..m).map(|_| usize::from(rng.random::<bool>())).collect();
        let p = truth.probability(&z);
        labels.push(if rng.random::<f64>() < p { 1 } else { -1 });
        z_rows.push(z);
    }
    let dataset = Dataset::new(vec![Vec::new(); n], z_rows, vec![2; m], labels)?;
    Ok(SyntheticDataset { dataset, truth })
}

/// Labels for fixed features drawn from the logistic law; used to check the
/// generator's conditional distribution.
#[cfg(test)]
fn sample_labels(truth: &GroundTruth, z: &[usize], draws: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = truth.probability(z);
    (0..draws).filter(|_| rng.random::<f64>() < p).count()
}
