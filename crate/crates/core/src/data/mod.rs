//! Datasets with numerical features, categorical features and binary labels.
//!
//! Categorical values are stored as category indices `0..k_j`, index 0 being
//! the reference category. The one-hot encoding of feature `j` has `k_j - 1`
//! slots; the reference category maps to the all-zero block.

mod ingest;
mod schema;
mod split;
mod synthetic;

pub use ingest::{ingest_csv, ingest_reader, write_csv, write_csv_to};
pub use schema::{DatasetSchema, MissingPolicy, PositiveClass, Role};
pub use split::{k_folds, split, Standardizer};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticDataset};

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result};

/// Names attached to the columns of a dataset. Purely descriptive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureNames {
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
    /// Ordered category dictionary per categorical feature.
    pub categories: Vec<Vec<String>>,
    pub label: String,
}

/// `N` records `(x, z, y)` with `x ∈ R^n`, `z` a tuple of category indices and
/// `y ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    numeric: Vec<f64>,
    n: usize,
    categorical: Vec<usize>,
    cardinalities: Vec<usize>,
    labels: Vec<i8>,
    names: FeatureNames,
}

impl Dataset {
    /// Build a dataset from row-major numeric and categorical matrices.
    pub fn new(
        numeric: Vec<Vec<f64>>,
        categorical: Vec<Vec<usize>>,
        cardinalities: Vec<usize>,
        labels: Vec<i8>,
    ) -> Result<Self> {
        let rows = labels.len();
        if numeric.len() != rows || categorical.len() != rows {
            return Err(DroError::DimensionMismatch(format!(
                "{} labels, {} numeric rows, {} categorical rows",
                rows,
                numeric.len(),
                categorical.len()
            )));
        }
        let n = numeric.first().map_or(0, Vec::len);
        let m = cardinalities.len();
        let mut flat_x = Vec::with_capacity(rows * n);
        let mut flat_z = Vec::with_capacity(rows * m);
        for (i, (x, z)) in numeric.iter().zip(&categorical).enumerate() {
            if x.len() != n {
                return Err(DroError::DimensionMismatch(format!(
                    "row {i} has {} numeric values, expected {n}",
                    x.len()
                )));
            }
            if z.len() != m {
                return Err(DroError::DimensionMismatch(format!(
                    "row {i} has {} categorical values, expected {m}",
                    z.len()
                )));
            }
            flat_x.extend_from_slice(x);
            flat_z.extend_from_slice(z);
        }
        Self::from_flat(flat_x, n, flat_z, cardinalities, labels)
    }

    pub(crate) fn from_flat(
        numeric: Vec<f64>,
        n: usize,
        categorical: Vec<usize>,
        cardinalities: Vec<usize>,
        labels: Vec<i8>,
    ) -> Result<Self> {
        let rows = labels.len();
        let m = cardinalities.len();
        if numeric.len() != rows * n || categorical.len() != rows * m {
            return Err(DroError::DimensionMismatch(
                "flat matrices do not match N×n / N×m".into(),
            ));
        }
        if let Some(&k) = cardinalities.iter().find(|&&k| k < 2) {
            return Err(DroError::InvalidArgument(format!(
                "categorical features need at least 2 categories, got {k}"
            )));
        }
        for (idx, &c) in categorical.iter().enumerate() {
            let k = cardinalities[idx % m];
            if c >= k {
                return Err(DroError::CategoryOutOfRange {
                    index: c,
                    cardinality: k,
                });
            }
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(DroError::InvalidArgument(format!(
                "labels must be ±1, got {y}"
            )));
        }
        if numeric.iter().any(|v| !v.is_finite()) {
            return Err(DroError::InvalidArgument(
                "numeric features must be finite".into(),
            ));
        }
        let names = FeatureNames {
            numeric: (1..=n).map(|j| format!("x{j}")).collect(),
            categorical: (1..=m).map(|j| format!("z{j}")).collect(),
            categories: cardinalities
                .iter()
                .map(|&k| (0..k).map(|t| t.to_string()).collect())
                .collect(),
            label: "y".into(),
        };
        Ok(Dataset {
            numeric,
            n,
            categorical,
            cardinalities,
            labels,
            names,
        })
    }

    pub fn with_names(mut self, names: FeatureNames) -> Result<Self> {
        if names.numeric.len() != self.n
            || names.categorical.len() != self.num_categorical()
            || names.categories.len() != self.num_categorical()
            || names
                .categories
                .iter()
                .zip(&self.cardinalities)
                .any(|(c, &k)| c.len() != k)
        {
            return Err(DroError::DimensionMismatch(
                "feature names do not match dataset shape".into(),
            ));
        }
        self.names = names;
        Ok(self)
    }

    /// Number of records `N`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Numeric dimension `n`.
    pub fn num_numeric(&self) -> usize {
        self.n
    }

    /// Number of categorical features `m`.
    pub fn num_categorical(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    /// One-hot dimension `k = Σ_j (k_j - 1)`.
    pub fn one_hot_dim(&self) -> usize {
        self.cardinalities.iter().map(|k| k - 1).sum()
    }

    /// `|C| = Π_j k_j`, saturating at `u128::MAX`.
    pub fn category_space_size(&self) -> u128 {
        self.cardinalities
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.numeric[i * self.n..(i + 1) * self.n]
    }

    pub fn z(&self, i: usize) -> &[usize] {
        let m = self.num_categorical();
        &self.categorical[i * m..(i + 1) * m]
    }

    /// Label of record `i` as `±1.0`.
    pub fn y(&self, i: usize) -> f64 {
        f64::from(self.labels[i])
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn names(&self) -> &FeatureNames {
        &self.names
    }

    /// Rows selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let m = self.num_categorical();
        let mut numeric = Vec::with_capacity(indices.len() * self.n);
        let mut categorical = Vec::with_capacity(indices.len() * m);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            numeric.extend_from_slice(self.x(i));
            categorical.extend_from_slice(self.z(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            numeric,
            n: self.n,
            categorical,
            cardinalities: self.cardinalities.clone(),
            labels,
            names: self.names.clone(),
        }
    }

    /// Copy with the numeric matrix transformed column-wise in place.
    pub(crate) fn map_numeric(&self, f: impl Fn(usize, f64) -> f64) -> Dataset {
        let mut out = self.clone();
        for (idx, v) in out.numeric.iter_mut().enumerate() {
            *v = f(idx % self.n.max(1), *v);
        }
        out
    }

    /// Re-code binary categorical features as numeric columns taking
    /// `codes[0]` for the reference category and `codes[1]` otherwise. The
    /// result has no categorical features; converted columns are appended
    /// after the existing numeric ones.
    pub fn categorical_as_numeric(&self, codes: [f64; 2]) -> Result<Dataset> {
        if self.cardinalities.iter().any(|&k| k != 2) {
            return Err(DroError::InvalidArgument(
                "numeric re-coding requires binary categorical features".into(),
            ));
        }
        let m = self.num_categorical();
        let n = self.n + m;
        let mut numeric = Vec::with_capacity(self.len() * n);
        for i in 0..self.len() {
            numeric.extend_from_slice(self.x(i));
            numeric.extend(self.z(i).iter().map(|&t| codes[t]));
        }
        let mut names = self.names.clone();
        names.numeric.extend(names.categorical.drain(..));
        names.categories.clear();
        Dataset::from_flat(numeric, n, Vec::new(), Vec::new(), self.labels.clone())?
            .with_names(names)
    }

    /// Same records with the categorical block removed.
    pub fn drop_categorical(&self) -> Dataset {
        let mut names = self.names.clone();
        names.categorical.clear();
        names.categories.clear();
        Dataset {
            numeric: self.numeric.clone(),
            n: self.n,
            categorical: Vec::new(),
            cardinalities: Vec::new(),
            labels: self.labels.clone(),
            names,
        }
    }
}

/// The block `z_j ∈ {0,1}^{k_j-1}` encoding category `index` of a feature
/// with `cardinality` categories.
pub fn one_hot(index: usize, cardinality: usize) -> Result<Vec<u8>> {
    if index >= cardinality {
        return Err(DroError::CategoryOutOfRange { index, cardinality });
    }
    let mut block = vec![0u8; cardinality - 1];
    if index > 0 {
        block[index - 1] = 1;
    }
    Ok(block)
}

/// Inverse of [`one_hot`].
pub fn decode_one_hot(block: &[u8]) -> Result<usize> {
    let mut found = None;
    for (t, &b) in block.iter().enumerate() {
        match b {
            0 => {}
            1 if found.is_none() => found = Some(t + 1),
            _ => {
                return Err(DroError::InvalidArgument(
                    "one-hot block must contain at most one 1".into(),
                ))
            }
        }
    }
    Ok(found.unwrap_or(0))
}
