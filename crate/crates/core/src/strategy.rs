use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest simplex violation that construction will repair by clamping and
/// renormalizing. Anything worse is rejected.
pub const STRATEGY_TOL: f64 = 1e-6;

/// A probability vector over a player's pure actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -STRATEGY_TOL) {
            return Err(Error::InvalidStrategy(format!("entry {p} is not a probability")));
        }
        let mut probs: Vec<f64> = probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STRATEGY_TOL {
            return Err(Error::InvalidStrategy(format!("entries sum to {sum}")));
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    pub fn pure(len: usize, action: usize) -> Self {
        assert!(action < len, "action {action} out of range for {len} actions");
        let mut probs = vec![0.0; len];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        MixedStrategy::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Self {
        s.probs
    }
}

impl AsRef<[f64]> for MixedStrategy {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_drift_is_renormalized() {
        let s = MixedStrategy::new(vec![0.5 + 4e-7, 0.5, -1e-8]).unwrap();
        assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(s.probs()[2], 0.0);
    }

    #[test]
    fn large_violations_rejected() {
        assert!(MixedStrategy::new(vec![0.6, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![1.1, -0.1]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        assert!(MixedStrategy::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn try_from_validates() {
        assert!(MixedStrategy::try_from(vec![0.9, 0.9]).is_err());
        assert_eq!(
            MixedStrategy::try_from(vec![0.0, 1.0]).unwrap(),
            MixedStrategy::pure(2, 1)
        );
    }
}
