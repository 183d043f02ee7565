//! Exact separation over the categorical space.
//!
//! For fixed `(β, λ, s)` and a data point `i`, the most violated constraint
//! of a family maximizes
//!
//! ```text
//! log v(z) = softplus(σ·score(xᵢ, z)) − sᵢ − λ·d_C(z, zᵢ) [− λκ]
//! ```
//!
//! over `z ∈ C`. Since `d_C` depends only on the number of changed
//! features, the best `z` at distance `δ` changes the `δ` features with the
//! largest individual gains, so `m + 1` candidates suffice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{softplus, Family, ModelParams};
use crate::data::Dataset;
use crate::metric::{categorical_distance_from_count, GroundMetricConfig};

/// The most violated constraint of one family for one data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub i: usize,
    pub family: Family,
    pub z: Vec<usize>,
    /// `log v`; the constraint is violated when positive.
    pub log_value: f64,
    /// Number of changed features in `z`.
    pub flips: usize,
    /// Candidates evaluated, always `m + 1`.
    pub candidates: usize,
}

impl ViolationReport {
    /// `max(0, v − 1)`.
    pub fn violation(&self) -> f64 {
        if self.log_value > 0.0 {
            self.log_value.exp_m1()
        } else {
            0.0
        }
    }

    /// `log(1 + violation)`, finite even when `v` overflows.
    pub fn log1p_violation(&self) -> f64 {
        self.log_value.max(0.0)
    }
}

/// `v(z)`, the cone sum `u + v` the constraint `(i, z)` of `family` would
/// need; the constraint holds when it is at most 1.
pub fn violation_value(
    dataset: &Dataset,
    params: &ModelParams,
    lambda: f64,
    s_i: f64,
    i: usize,
    z: &[usize],
    family: Family,
    metric: &GroundMetricConfig,
) -> f64 {
    log_violation(dataset, params, lambda, s_i, i, z, family, metric).exp()
}

/// `log v(z)`.
#[allow(clippy::too_many_arguments)]
pub fn log_violation(
    dataset: &Dataset,
    params: &ModelParams,
    lambda: f64,
    s_i: f64,
    i: usize,
    z: &[usize],
    family: Family,
    metric: &GroundMetricConfig,
) -> f64 {
    let sign = family.label_sign() * dataset.y(i);
    let count = z.iter().zip(dataset.z(i)).filter(|(a, b)| a != b).count();
    let mut penalty = categorical_distance_from_count(count, metric.p);
    if family == Family::Minus {
        penalty += metric.kappa;
    }
    softplus(sign * params.score(dataset.x(i), z)) - s_i - lambda * penalty
}

/// Most violated `z` of `family` for data point `i`.
pub fn most_violated(
    dataset: &Dataset,
    params: &ModelParams,
    lambda: f64,
    s_i: f64,
    i: usize,
    family: Family,
    metric: &GroundMetricConfig,
) -> ViolationReport {
    let sign = family.label_sign() * dataset.y(i);
    let zi = dataset.z(i);
    let m = zi.len();

    // best replacement and its gain for each feature
    let mut moves: Vec<(usize, usize, f64)> = Vec::with_capacity(m);
    for (j, &current) in zi.iter().enumerate() {
        let base = sign * params.category_value(j, current);
        let mut best: Option<(usize, f64)> = None;
        for t in 0..dataset.cardinalities()[j] {
            if t == current {
                continue;
            }
            let val = sign * params.category_value(j, t);
            if best.is_none_or(|(_, b)| val > b) {
                best = Some((t, val));
            }
        }
        let (t, val) = best.expect("every feature has at least two categories");
        moves.push((j, t, val - base));
    }
    moves.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));

    let label_cost = if family == Family::Minus {
        lambda * metric.kappa
    } else {
        0.0
    };
    let mut theta = sign * params.score(dataset.x(i), zi);
    let mut best_delta = 0;
    let mut best_value = softplus(theta) - s_i - label_cost;
    for (k, mv) in moves.iter().enumerate() {
        theta += mv.2;
        let delta = k + 1;
        let value = softplus(theta)
            - s_i
            - lambda * categorical_distance_from_count(delta, metric.p)
            - label_cost;
        if value > best_value {
            best_value = value;
            best_delta = delta;
        }
    }

    let mut z = zi.to_vec();
    for &(j, t, _) in &moves[..best_delta] {
        z[j] = t;
    }
    ViolationReport {
        i,
        family,
        z,
        log_value: best_value,
        flips: best_delta,
        candidates: m + 1,
    }
}

/// [`most_violated`] for every data point, in index order.
pub fn separate_each(
    dataset: &Dataset,
    params: &ModelParams,
    lambda: f64,
    s: &[f64],
    family: Family,
    metric: &GroundMetricConfig,
) -> Vec<ViolationReport> {
    (0..dataset.len())
        .into_par_iter()
        .map(|i| most_violated(dataset, params, lambda, s[i], i, family, metric))
        .collect()
}

/// Per-family maxima over all data points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Separation {
    pub plus: Option<ViolationReport>,
    pub minus: Option<ViolationReport>,
}

impl Separation {
    pub fn plus_violation(&self) -> f64 {
        self.plus.as_ref().map_or(0.0, ViolationReport::violation)
    }

    pub fn minus_violation(&self) -> f64 {
        self.minus.as_ref().map_or(0.0, ViolationReport::violation)
    }

    /// `log(1 + max{ϑ⁺, ϑ⁻})`.
    pub fn log1p_max_violation(&self) -> f64 {
        [&self.plus, &self.minus]
            .into_iter()
            .flatten()
            .map(ViolationReport::log1p_violation)
            .fold(0.0, f64::max)
    }
}

/// Largest `log v` first, ties to the smaller data index.
pub fn best_report(reports: &[ViolationReport]) -> Option<&ViolationReport> {
    reports.iter().reduce(|best, r| {
        if r.log_value > best.log_value {
            r
        } else {
            best
        }
    })
}

/// Most violated constraint of each family across all data points. The
/// minus family is skipped when `include_minus` is false.
pub fn separate_all(
    dataset: &Dataset,
    params: &ModelParams,
    lambda: f64,
    s: &[f64],
    metric: &GroundMetricConfig,
    include_minus: bool,
) -> Separation {
    let plus = separate_each(dataset, params, lambda, s, Family::Plus, metric);
    let minus = if include_minus {
        separate_each(dataset, params, lambda, s, Family::Minus, metric)
    } else {
        Vec::new()
    };
    Separation {
        plus: best_report(&plus).cloned(),
        minus: best_report(&minus).cloned(),
    }
}
