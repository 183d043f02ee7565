use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{DroError, Result};

fn permutation(len: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Random train/test split. The training side receives
/// `round(N * train_fraction)` rows.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DroError::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DroError::InvalidArgument(format!(
            "train fraction {train_fraction} on {n} rows leaves one side empty"
        )));
    }
    let perm = permutation(n, seed);
    Ok((
        dataset.subset(&perm[..n_train]),
        dataset.subset(&perm[n_train..]),
    ))
}

/// `K` (train, validation) pairs. Validation folds partition the rows; the
/// first `N mod K` folds carry one extra row.
pub fn k_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let n = dataset.len();
    if k < 2 {
        return Err(DroError::InvalidArgument(format!("need K >= 2, got {k}")));
    }
    if n < k {
        return Err(DroError::InvalidArgument(format!(
            "{n} rows cannot fill {k} folds"
        )));
    }
    Ok(fold_indices(n, k, seed)
        .into_iter()
        .map(|(train, val)| (dataset.subset(&train), dataset.subset(&val)))
        .collect())
}

pub(crate) fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let perm = permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    (0..k)
        .map(|f| {
            let size = base + usize::from(f < extra);
            let val = perm[start..start + size].to_vec();
            let train = perm[..start]
                .iter()
                .chain(&perm[start + size..])
                .copied()
                .collect();
            start += size;
            (train, val)
        })
        .collect()
}

/// Per-column z-score scaling fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Self {
        let n = train.num_numeric();
        let rows = train.len().max(1) as f64;
        let mut mean = vec![0.0; n];
        for i in 0..train.len() {
            for (m, v) in mean.iter_mut().zip(train.x(i)) {
                *m += v / rows;
            }
        }
        let mut var = vec![0.0; n];
        for i in 0..train.len() {
            for ((s, v), m) in var.iter_mut().zip(train.x(i)).zip(&mean) {
                *s += (v - m).powi(2) / rows;
            }
        }
        // constant columns are centred but not scaled
        let scale = var
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        data.map_numeric(|j, v| (v - self.mean[j]) / self.scale[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n: usize) -> Dataset {
        Dataset::new(
            (0..n).map(|i| vec![i as f64]).collect(),
            vec![vec![]; n],
            vec![],
            (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect(),
        )
        .unwrap()
    }

    fn ids(d: &Dataset) -> Vec<usize> {
        (0..d.len()).map(|i| d.x(i)[0] as usize).collect()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = toy(10);
        let (a, b) = split(&d, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a2, b2) = split(&d, 0.8, 3).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        assert!(split(&toy(5), 0.99, 0).is_err());
        assert!(split(&d, 1.0, 0).is_err());
    }

    #[test]
    fn fold_sizes() {
        let sizes = |n, k| {
            let mut s: Vec<usize> = k_folds(&toy(n), k, 1)
                .unwrap()
                .iter()
                .map(|(_, v)| v.len())
                .collect();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        assert_eq!(sizes(10, 5), vec![2; 5]);
        assert_eq!(sizes(11, 5), vec![3, 2, 2, 2, 2]);
        assert!(k_folds(&toy(4), 5, 0).is_err());
        assert!(k_folds(&toy(4), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn splits_partition_rows(n in 2usize..60, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let d = toy(n);
            if let Ok((a, b)) = split(&d, frac, seed) {
                let mut all = ids(&a);
                all.extend(ids(&b));
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }

        #[test]
        fn folds_partition_rows(n in 2usize..60, k in 2usize..8, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let folds = k_folds(&toy(n), k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flat_map(|(_, v)| ids(v)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for (t, v) in &folds {
                prop_assert_eq!(t.len() + v.len(), n);
                let vs = ids(v);
                prop_assert!(ids(t).iter().all(|i| !vs.contains(i)));
            }
            let sizes: Vec<usize> = folds.iter().map(|(_, v)| v.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn standardizer_uses_training_statistics() {
        let train = toy(4); // 0,1,2,3: mean 1.5, sd sqrt(1.25)
        let st = Standardizer::fit(&train);
        let out = st.apply(&toy(1));
        assert!((out.x(0)[0] + 1.5 / 1.25f64.sqrt()).abs() < 1e-12);
    }
}
