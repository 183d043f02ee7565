//! Ground metric on `Ξ = R^n × C × {-1, +1}`:
//!
//! `d(ξ, ξ') = ‖x − x'‖ + d_C(z, z') + κ·1[y ≠ y']`
//!
//! with `d_C(z, z') = (#{j : z_j ≠ z'_j})^{1/p}`.

use serde::{Deserialize, Serialize};

use crate::error::{DroError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = DroError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            "linf" | "inf" => Ok(Norm::Linf),
            other => Err(DroError::Config(format!("unknown norm `{other}`"))),
        }
    }
}

/// Parameters of the ground metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundMetricConfig {
    pub norm: Norm,
    /// Exponent of the categorical disagreement count.
    pub p: f64,
    /// Cost of flipping a label.
    pub kappa: f64,
    /// Optional per-coordinate weights `w` giving the norm of `(w_j x_j)_j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Default for GroundMetricConfig {
    fn default() -> Self {
        GroundMetricConfig {
            norm: Norm::L1,
            p: 1.0,
            kappa: 1.0,
            weights: None,
        }
    }
}

impl GroundMetricConfig {
    pub fn new(norm: Norm, p: f64, kappa: f64) -> Result<Self> {
        let cfg = GroundMetricConfig {
            norm,
            p,
            kappa,
            weights: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(DroError::Config(format!(
                "p must be positive, got {}",
                self.p
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(DroError::Config(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(DroError::Config("weights must be strictly positive".into()));
            }
        }
        Ok(())
    }

    fn weights_for(&self, dim: usize) -> Result<Option<&[f64]>> {
        match &self.weights {
            Some(w) if w.len() != dim => Err(DroError::DimensionMismatch(format!(
                "{} weights for {dim} numeric features",
                w.len()
            ))),
            Some(w) => Ok(Some(w)),
            None => Ok(None),
        }
    }

    /// Primal norm of a numeric difference vector.
    pub fn numeric_norm(&self, v: &[f64]) -> Result<f64> {
        let w = self.weights_for(v.len())?;
        Ok(weighted_norm(v, self.norm, w, false))
    }

    /// `‖v‖_*` for the configured norm; weights dualize reciprocally.
    pub fn dual_norm(&self, v: &[f64]) -> Result<f64> {
        let w = self.weights_for(v.len())?;
        Ok(weighted_norm(v, self.norm.dual(), w, true))
    }

    /// `d(ξ, ξ')`.
    pub fn ground_distance(&self, a: Point<'_>, b: Point<'_>) -> Result<f64> {
        if a.x.len() != b.x.len() {
            return Err(DroError::DimensionMismatch(format!(
                "numeric parts have lengths {} and {}",
                a.x.len(),
                b.x.len()
            )));
        }
        let diff: Vec<f64> = a.x.iter().zip(b.x).map(|(u, v)| u - v).collect();
        let label = if a.y == b.y { 0.0 } else { self.kappa };
        Ok(self.numeric_norm(&diff)? + d_categorical(a.z, b.z, self.p)? + label)
    }
}

/// One point `ξ = (x, z, y)`.
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub x: &'a [f64],
    pub z: &'a [usize],
    pub y: f64,
}

/// Norm of `(w_j v_j)_j`, or of `(v_j / w_j)_j` when `reciprocal`.
fn weighted_norm(v: &[f64], norm: Norm, w: Option<&[f64]>, reciprocal: bool) -> f64 {
    let scaled = v.iter().enumerate().map(|(j, &x)| match w {
        Some(w) if reciprocal => (x / w[j]).abs(),
        Some(w) => (x * w[j]).abs(),
        None => x.abs(),
    });
    match norm {
        Norm::L1 => scaled.sum(),
        Norm::L2 => scaled.map(|a| a * a).sum::<f64>().sqrt(),
        Norm::Linf => scaled.fold(0.0, f64::max),
    }
}

/// `‖v‖_*` for an unweighted primal norm.
pub fn dual_norm(v: &[f64], norm: Norm) -> f64 {
    weighted_norm(v, norm.dual(), None, false)
}

/// Number of features on which two category tuples disagree.
pub fn disagreements(z: &[usize], other: &[usize]) -> Result<usize> {
    if z.len() != other.len() {
        return Err(DroError::DimensionMismatch(format!(
            "categorical tuples have lengths {} and {}",
            z.len(),
            other.len()
        )));
    }
    Ok(z.iter().zip(other).filter(|(a, b)| a != b).count())
}

/// `d_C` as a function of the disagreement count.
pub fn categorical_distance_from_count(count: usize, p: f64) -> f64 {
    match count {
        0 => 0.0,
        _ if p == 1.0 => count as f64,
        _ => (count as f64).powf(1.0 / p),
    }
}

/// `d_C(z, z') = (#disagreements)^{1/p}`.
pub fn d_categorical(z: &[usize], other: &[usize], p: f64) -> Result<f64> {
    Ok(categorical_distance_from_count(disagreements(z, other)?, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt<'a>(x: &'a [f64], z: &'a [usize], y: f64) -> Point<'a> {
        Point { x, z, y }
    }

    #[test]
    fn categorical_examples() {
        let z = [0, 1, 2, 0, 1, 0, 0, 1, 1];
        assert_eq!(d_categorical(&z, &z, 1.0).unwrap(), 0.0);
        let mut w = z;
        w[0] = 1;
        w[3] = 2;
        w[8] = 0;
        assert_eq!(d_categorical(&z, &w, 1.0).unwrap(), 3.0);
        assert_eq!(
            d_categorical(&[0, 0, 0, 0], &[1, 1, 1, 1], 2.0).unwrap(),
            2.0
        );
        assert!(d_categorical(&[0], &[0, 1], 1.0).is_err());
    }

    #[test]
    fn ground_distance_examples() {
        let cfg = GroundMetricConfig::new(Norm::L2, 1.0, 2.5).unwrap();
        let x = [1.0, 2.0];
        assert_eq!(
            cfg.ground_distance(pt(&x, &[1], 1.0), pt(&x, &[1], 1.0))
                .unwrap(),
            0.0
        );
        assert_eq!(
            cfg.ground_distance(pt(&x, &[1], 1.0), pt(&x, &[1], -1.0))
                .unwrap(),
            2.5
        );
        let d = cfg
            .ground_distance(pt(&[3.0, 4.0], &[0], 1.0), pt(&[0.0, 0.0], &[0], 1.0))
            .unwrap();
        assert!((d - 5.0).abs() < 1e-15);
        assert!(cfg
            .ground_distance(pt(&[1.0], &[0], 1.0), pt(&x, &[0], 1.0))
            .is_err());
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(dual_norm(&[1.0, -2.0, 3.0], Norm::L1), 3.0);
        assert_eq!(dual_norm(&[3.0, 4.0], Norm::L2), 5.0);
        assert_eq!(dual_norm(&[1.0, -2.0, 3.0], Norm::Linf), 6.0);
        assert_eq!(dual_norm(&[0.0, 0.0], Norm::L1), 0.0);
        // weight 1/2 on a single coordinate: ‖x‖ = |x|/2, dual = 2|v|
        let cfg = GroundMetricConfig::default()
            .with_weights(vec![0.5])
            .unwrap();
        assert_eq!(cfg.dual_norm(&[-1.5]).unwrap(), 3.0);
    }

    #[test]
    fn dual_of_dual_is_identity() {
        for n in [Norm::L1, Norm::L2, Norm::Linf] {
            assert_eq!(n.dual().dual(), n);
        }
    }

    #[test]
    fn config_validation() {
        assert!(GroundMetricConfig::new(Norm::L1, 0.0, 1.0).is_err());
        assert!(GroundMetricConfig::new(Norm::L1, 1.0, 0.0).is_err());
        assert!(GroundMetricConfig::default()
            .with_weights(vec![1.0, -1.0])
            .is_err());
        let cfg = GroundMetricConfig::default()
            .with_weights(vec![1.0])
            .unwrap();
        assert!(cfg.dual_norm(&[1.0, 2.0]).is_err());
    }

    fn arb_point(n: usize, m: usize) -> impl Strategy<Value = (Vec<f64>, Vec<usize>, f64)> {
        (
            proptest::collection::vec(-5.0f64..5.0, n),
            proptest::collection::vec(0usize..3, m),
            prop_oneof![Just(1.0), Just(-1.0)],
        )
    }

    fn arb_norm() -> impl Strategy<Value = Norm> {
        prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::Linf)]
    }

    proptest! {
        #[test]
        fn metric_axioms(
            a in arb_point(3, 4), b in arb_point(3, 4), c in arb_point(3, 4),
            norm in arb_norm(), p in prop_oneof![Just(1.0), Just(2.0), Just(3.0)],
            kappa in 0.1f64..10.0,
        ) {
            let cfg = GroundMetricConfig::new(norm, p, kappa).unwrap();
            let (pa, pb, pc) = (pt(&a.0, &a.1, a.2), pt(&b.0, &b.1, b.2), pt(&c.0, &c.1, c.2));
            let dab = cfg.ground_distance(pa, pb).unwrap();
            let dba = cfg.ground_distance(pb, pa).unwrap();
            let dac = cfg.ground_distance(pa, pc).unwrap();
            let dcb = cfg.ground_distance(pc, pb).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert_eq!(dab, dba);
            prop_assert!(dab <= dac + dcb + 1e-12);
            prop_assert_eq!(cfg.ground_distance(pa, pa).unwrap(), 0.0);
            let same = a.0 == b.0 && a.1 == b.1 && a.2 == b.2;
            prop_assert_eq!(dab == 0.0, same);
        }

        #[test]
        fn holder_inequality(
            v in proptest::collection::vec(-10.0f64..10.0, 1..6),
            w_seed in proptest::collection::vec(-10.0f64..10.0, 6),
            weights in proptest::collection::vec(0.1f64..4.0, 6),
            norm in arb_norm(),
        ) {
            let w = &w_seed[..v.len()];
            let cfg = GroundMetricConfig::new(norm, 1.0, 1.0).unwrap()
                .with_weights(weights[..v.len()].to_vec()).unwrap();
            let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            let bound = cfg.dual_norm(&v).unwrap() * cfg.numeric_norm(w).unwrap();
            prop_assert!(dot <= bound + 1e-12 * (1.0 + bound.abs()));
        }
    }
}
