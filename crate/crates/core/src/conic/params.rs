use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{DroError, Result};

/// Logistic regression coefficients `(β₀, β_N, β_C)`.
///
/// `beta_cat[j]` holds the `k_j − 1` one-hot slopes of categorical feature
/// `j`; the reference category contributes nothing to the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta0: f64,
    pub beta_num: Vec<f64>,
    pub beta_cat: Vec<Vec<f64>>,
}

impl ModelParams {
    pub fn zeros_like(dataset: &Dataset) -> Self {
        ModelParams {
            beta0: 0.0,
            beta_num: vec![0.0; dataset.num_numeric()],
            beta_cat: dataset
                .cardinalities()
                .iter()
                .map(|&k| vec![0.0; k - 1])
                .collect(),
        }
    }

    /// Error unless the dimensions agree with `dataset`.
    pub fn check_dims(&self, dataset: &Dataset) -> Result<()> {
        let ok = self.beta_num.len() == dataset.num_numeric()
            && self.beta_cat.len() == dataset.num_categorical()
            && self
                .beta_cat
                .iter()
                .zip(dataset.cardinalities())
                .all(|(b, &k)| b.len() == k - 1);
        if ok {
            Ok(())
        } else {
            Err(DroError::DimensionMismatch(format!(
                "model has n={}, block sizes {:?}; data has n={}, cardinalities {:?}",
                self.beta_num.len(),
                self.beta_cat.iter().map(Vec::len).collect::<Vec<_>>(),
                dataset.num_numeric(),
                dataset.cardinalities()
            )))
        }
    }

    /// `β_C,j · one_hot(t)`.
    pub fn category_value(&self, feature: usize, category: usize) -> f64 {
        if category == 0 {
            0.0
        } else {
            self.beta_cat[feature][category - 1]
        }
    }

    /// `β₀ + β_N·x + β_C·z` without dimension checks.
    pub fn score(&self, x: &[f64], z: &[usize]) -> f64 {
        self.beta0
            + self.numeric_score(x)
            + z.iter()
                .enumerate()
                .map(|(j, &t)| self.category_value(j, t))
                .sum::<f64>()
    }

    pub(crate) fn numeric_score(&self, x: &[f64]) -> f64 {
        self.beta_num.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    /// All slopes `(β_N, β_C)` flattened.
    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.beta_num
            .iter()
            .chain(self.beta_cat.iter().flatten())
            .copied()
    }

    pub fn slopes_l1(&self) -> f64 {
        self.slopes().map(f64::abs).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.slopes()
            .chain(std::iter::once(self.beta0))
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> ModelParams {
        ModelParams {
            beta0: self.beta0 * c,
            beta_num: self.beta_num.iter().map(|b| b * c).collect(),
            beta_cat: self
                .beta_cat
                .iter()
                .map(|blk| blk.iter().map(|b| b * c).collect())
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &ModelParams) -> f64 {
        let a = std::iter::once(self.beta0).chain(self.slopes());
        let b = std::iter::once(other.beta0).chain(other.slopes());
        a.zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
    }

    /// Values rounded to 6 significant digits, matching the JSON output.
    pub fn rounded(&self) -> ModelParams {
        let r = |v: f64| round_sig(v, 6);
        ModelParams {
            beta0: r(self.beta0),
            beta_num: self.beta_num.iter().map(|&v| r(v)).collect(),
            beta_cat: self
                .beta_cat
                .iter()
                .map(|blk| blk.iter().map(|&v| r(v)).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("params serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json()).map_err(|e| DroError::io(&path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| DroError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Round to `digits` significant digits.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (v * factor).round() / factor
}

/// `log(1 + exp(t))`, stable for large `|t|`.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Mean log-loss `(1/N) Σ softplus(−yᵢ·scoreᵢ)`.
pub fn empirical_log_loss(params: &ModelParams, dataset: &Dataset) -> f64 {
    let total: f64 = (0..dataset.len())
        .map(|i| softplus(-dataset.y(i) * params.score(dataset.x(i), dataset.z(i))))
        .sum();
    total / dataset.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(3.0) - (1.0 + 3f64.exp()).ln()).abs() < 1e-14);
    }

    #[test]
    fn score_uses_reference_category() {
        let p = ModelParams {
            beta0: 0.5,
            beta_num: vec![2.0],
            beta_cat: vec![vec![1.0, -1.0]],
        };
        assert_eq!(p.score(&[1.0], &[0]), 2.5);
        assert_eq!(p.score(&[1.0], &[2]), 1.5);
        assert_eq!(p.slopes_l1(), 4.0);
    }

    #[test]
    fn json_round_trip_uses_documented_names() {
        let p = ModelParams {
            beta0: 0.123456789,
            beta_num: vec![1.0],
            beta_cat: vec![vec![-2.5, 3.0]],
        };
        let json = p.to_json();
        assert!(json.contains("\"beta0\": 0.123457"));
        assert!(json.contains("beta_num"));
        assert!(json.contains("beta_cat"));
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p.rounded());
    }

    #[test]
    fn round_to_significant_digits() {
        assert_eq!(round_sig(1234567.0, 6), 1234570.0);
        assert_eq!(round_sig(-0.000123456789, 6), -0.000123457);
        assert_eq!(round_sig(0.0, 6), 0.0);
    }
}
