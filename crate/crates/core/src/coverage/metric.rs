use super::{CoverageError, Result};

/// Distance between parameter vectors in normalized space.
pub trait DistanceMetric: Send + Sync + std::fmt::Debug {
    /// Registry spelling, e.g. `euclidean`.
    fn label(&self) -> String;

    fn distance(&self, a: &[f64], b: &[f64]) -> f64;

    /// Any strictly increasing transform of [`distance`](Self::distance);
    /// rank computations compare these instead.
    fn ordering_key(&self, a: &[f64], b: &[f64]) -> f64 {
        self.distance(a, b)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl DistanceMetric for Euclidean {
    fn label(&self) -> String {
        "euclidean".into()
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.ordering_key(a, b).sqrt()
    }

    fn ordering_key(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// `sqrt(Σ w_d (a_d - b_d)²)` with strictly positive weights.
#[derive(Debug, Clone)]
pub struct WeightedEuclidean {
    weights: Vec<f64>,
}

impl WeightedEuclidean {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(CoverageError::InvalidArgument("weighted metric needs weights".into()));
        }
        if let Some((d, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(CoverageError::InvalidArgument(format!(
                "metric weight {d} must be finite and > 0, got {w}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl DistanceMetric for WeightedEuclidean {
    fn label(&self) -> String {
        "weighted".into()
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.ordering_key(a, b).sqrt()
    }

    fn ordering_key(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.weights.len());
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| w * (x - y) * (x - y))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weights_must_be_positive() {
        assert!(WeightedEuclidean::new(vec![1.0, 0.0]).is_err());
        assert!(WeightedEuclidean::new(vec![-1.0]).is_err());
        assert!(WeightedEuclidean::new(vec![]).is_err());
        assert!(WeightedEuclidean::new(vec![0.5, 2.0]).is_ok());
    }

    #[test]
    fn euclidean_345() {
        assert_eq!(Euclidean.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    proptest! {
        #[test]
        fn metric_axioms(
            a in prop::collection::vec(-1.0f64..2.0, 3),
            b in prop::collection::vec(-1.0f64..2.0, 3),
            w in prop::collection::vec(0.01f64..10.0, 3),
        ) {
            let weighted = WeightedEuclidean::new(w).unwrap();
            let metrics: [&dyn DistanceMetric; 2] = [&Euclidean, &weighted];
            for m in metrics {
                prop_assert_eq!(m.distance(&a, &a), 0.0);
                prop_assert_eq!(m.distance(&a, &b), m.distance(&b, &a));
                prop_assert!(m.distance(&a, &b) >= 0.0);
            }
        }
    }
}
