use super::{CoverageError, Result};

/// One draw `(theta, x)` from the joint distribution.
///
/// `x` is an opaque observation payload; the benchmarks document what they
/// store in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub sim_id: usize,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
}

/// Validation set of simulations with dense ids `0..n_sims`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSampleSet {
    dim_theta: usize,
    sims: Vec<Simulation>,
}

impl JointSampleSet {
    pub fn new(dim_theta: usize, sims: Vec<Simulation>) -> Result<Self> {
        if sims.is_empty() {
            return Err(CoverageError::InvalidDataset("no simulations".into()));
        }
        if dim_theta == 0 {
            return Err(CoverageError::InvalidDataset("zero-dimensional parameters".into()));
        }
        let n = sims.len();
        let mut seen = vec![false; n];
        for sim in &sims {
            if sim.sim_id >= n || std::mem::replace(&mut seen[sim.sim_id], true) {
                return Err(CoverageError::InvalidDataset(format!(
                    "sim ids must be a permutation of 0..{n}; offending id {}",
                    sim.sim_id
                )));
            }
            if sim.theta.len() != dim_theta {
                return Err(CoverageError::InvalidDataset(format!(
                    "sim {} has {} parameters, expected {dim_theta}",
                    sim.sim_id,
                    sim.theta.len()
                )));
            }
            if sim.theta.iter().any(|v| !v.is_finite()) {
                return Err(CoverageError::InvalidDataset(format!(
                    "sim {} has a non-finite parameter",
                    sim.sim_id
                )));
            }
        }
        Ok(Self { dim_theta, sims })
    }

    pub fn dim_theta(&self) -> usize {
        self.dim_theta
    }

    pub fn n_sims(&self) -> usize {
        self.sims.len()
    }

    pub fn sims(&self) -> &[Simulation] {
        &self.sims
    }

    pub fn iter(&self) -> impl Iterator<Item = &Simulation> {
        self.sims.iter()
    }

    /// Same simulations, stored in the given order (`order` indexes `sims()`).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.sims.len() {
            return Err(CoverageError::InvalidArgument("permutation length mismatch".into()));
        }
        let sims = order
            .iter()
            .map(|&i| {
                self.sims
                    .get(i)
                    .cloned()
                    .ok_or_else(|| CoverageError::InvalidArgument(format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim_theta, sims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(id: usize, theta: Vec<f64>) -> Simulation {
        Simulation {
            sim_id: id,
            theta,
            x: vec![],
        }
    }

    #[test]
    fn rejects_bad_ids_and_values() {
        assert!(JointSampleSet::new(1, vec![]).is_err());
        assert!(JointSampleSet::new(1, vec![sim(1, vec![0.0])]).is_err());
        assert!(JointSampleSet::new(1, vec![sim(0, vec![0.0]), sim(0, vec![1.0])]).is_err());
        assert!(JointSampleSet::new(2, vec![sim(0, vec![0.0])]).is_err());
        assert!(JointSampleSet::new(1, vec![sim(0, vec![f64::NAN])]).is_err());
        let ok = JointSampleSet::new(1, vec![sim(1, vec![0.0]), sim(0, vec![1.0])]).unwrap();
        assert_eq!(ok.n_sims(), 2);
        let back = ok.reordered(&[1, 0]).unwrap();
        assert_eq!(back.sims()[0].sim_id, 0);
    }
}
