//! Domain types shared by every learner: the arm set with per-arm ranges,
//! probability vectors on the simplex, and log-domain weight vectors.

use crate::{Error, Result};

/// Sum-to-one tolerance for probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// The arm set: per-arm reward ranges `c_i` (currency units) and an optional
/// prior distribution over arms.
///
/// When no prior is supplied, operations that need one fall back to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    ranges: Vec<f64>,
    prior: Option<Vec<f64>>,
}

impl ActionSpace {
    /// Arm set with ranges `c_i` and no explicit prior.
    pub fn new(ranges: Vec<f64>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::EmptyActionSpace);
        }
        for (arm, &c) in ranges.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::NonPositiveRange { arm, value: c });
            }
        }
        Ok(Self { ranges, prior: None })
    }

    /// Arm set with an explicit prior π over arms.
    pub fn with_prior(ranges: Vec<f64>, prior: Vec<f64>) -> Result<Self> {
        let mut space = Self::new(ranges)?;
        if prior.len() != space.k() {
            return Err(Error::DimensionMismatch {
                expected: space.k(),
                got: prior.len(),
            });
        }
        if prior.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidPrior {
                reason: "negative or non-finite entry".into(),
            });
        }
        let sum: f64 = prior.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidPrior {
                reason: format!("entries sum to {sum}, expected 1"),
            });
        }
        space.prior = Some(prior);
        Ok(space)
    }

    pub fn k(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn range(&self, arm: usize) -> f64 {
        self.ranges[arm]
    }

    pub fn c_min(&self) -> f64 {
        self.ranges.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn c_max(&self) -> f64 {
        self.ranges.iter().copied().fold(0.0, f64::max)
    }

    /// Arm with the minimum range; ties broken by lowest index.
    pub fn i_min(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.ranges.iter().enumerate() {
            if c < self.ranges[best] {
                best = i;
            }
        }
        best
    }

    pub fn prior(&self) -> Option<&[f64]> {
        self.prior.as_deref()
    }

    /// The declared prior, or uniform when none was given.
    pub fn prior_or_uniform(&self) -> Vec<f64> {
        match &self.prior {
            Some(p) => p.clone(),
            None => vec![1.0 / self.k() as f64; self.k()],
        }
    }
}

/// A probability distribution over arms.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSimplexPoint {
                reason: "empty vector".into(),
            });
        }
        if let Some((i, &p)) = probs
            .iter()
            .enumerate()
            .find(|(_, &p)| p < 0.0 || !p.is_finite())
        {
            return Err(Error::InvalidSimplexPoint {
                reason: format!("entry {i} is {p}"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidSimplexPoint {
                reason: format!("entries sum to {sum}, expected 1"),
            });
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// Point mass on one arm.
    pub fn point_mass(k: usize, arm: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[arm] = 1.0;
        Self { probs }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

/// Log-domain weights `ln w_i`. Weights themselves are strictly positive by
/// construction; entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    logw: Vec<f64>,
}

impl WeightVector {
    pub fn from_log(logw: Vec<f64>) -> Result<Self> {
        if let Some((arm, _)) = logw.iter().enumerate().find(|(_, &w)| !w.is_finite()) {
            return Err(Error::NonFiniteWeight { arm });
        }
        Ok(Self { logw })
    }

    /// From linear-domain weights; all entries must be strictly positive.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        for (arm, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonFiniteWeight { arm });
            }
        }
        Ok(Self {
            logw: weights.iter().map(|&w| w.ln()).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.logw.len()
    }

    pub fn logs(&self) -> &[f64] {
        &self.logw
    }

    pub fn weights(&self) -> Vec<f64> {
        self.logw.iter().map(|&l| l.exp()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_space_rejects_bad_ranges() {
        assert!(ActionSpace::new(vec![]).is_err());
        assert!(ActionSpace::new(vec![1.0, 0.0]).is_err());
        assert!(ActionSpace::new(vec![1.0, -2.0]).is_err());
        let s = ActionSpace::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.c_min(), 1.0);
        assert_eq!(s.c_max(), 3.0);
        assert_eq!(s.i_min(), 1);
    }

    #[test]
    fn i_min_breaks_ties_low() {
        let s = ActionSpace::new(vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.i_min(), 1);
    }

    #[test]
    fn prior_must_be_a_distribution() {
        let err = ActionSpace::with_prior(vec![1.0, 2.0], vec![0.6, 0.5]);
        assert!(err.is_err());
        let ok = ActionSpace::with_prior(vec![1.0, 2.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(ok.prior().unwrap(), &[0.25, 0.75]);
        let none = ActionSpace::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(none.prior_or_uniform(), vec![0.5, 0.5]);
    }

    #[test]
    fn simplex_point_validates() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![0.5, 0.4]).is_err());
        assert!(SimplexPoint::new(vec![1.1, -0.1]).is_err());
        // within tolerance
        assert!(SimplexPoint::new(vec![0.5, 0.5 + 5e-13]).is_ok());
    }

    #[test]
    fn weight_vector_round_trips() {
        let w = WeightVector::from_weights(&[0.5, 2.0]).unwrap();
        let back = w.weights();
        assert!((back[0] - 0.5).abs() < 1e-15);
        assert!((back[1] - 2.0).abs() < 1e-15);
        assert!(WeightVector::from_weights(&[0.0, 1.0]).is_err());
        assert!(WeightVector::from_log(vec![f64::INFINITY]).is_err());
    }
}
