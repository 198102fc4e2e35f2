use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular velocity profile of a synthetic rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant,
    ExpRise { rate: f64 },
    ExpFall { rate: f64 },
}

impl Profile {
    /// Fraction of the total angle reached at normalized time `s`.
    pub fn fraction(&self, s: f64) -> f64 {
        match *self {
            Profile::Constant => s,
            Profile::ExpRise { rate } => (rate * s).exp_m1() / rate.exp_m1(),
            Profile::ExpFall { rate } => (-rate * s).exp_m1() / (-rate).exp_m1(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Profile::Constant => Ok(()),
            Profile::ExpRise { rate } | Profile::ExpFall { rate } => {
                if rate.is_finite() && rate > 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("profile rate must be positive, got {rate}")))
                }
            }
        }
    }
}

/// Ground-truth angular positions of a synthetic sequence.
///
/// `profile` is `None` when the angles were loaded from a table rather
/// than generated.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    theta: Vec<f64>,
    profile: Option<Profile>,
}

impl SyntheticTruth {
    pub fn new(theta: Vec<f64>, profile: Option<Profile>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::domain("synthetic truth needs at least 2 frames"));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("synthetic angles must be finite"));
        }
        if theta.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("synthetic angles must be nondecreasing"));
        }
        if theta[theta.len() - 1] - theta[0] > PI {
            return Err(Error::domain("synthetic rotation may not exceed pi"));
        }
        Ok(SyntheticTruth { theta, profile })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn profile(&self) -> Option<Profile> {
        self.profile
    }

    pub fn frame_count(&self) -> usize {
        self.theta.len()
    }

    /// `(theta - theta_0) / (theta_last - theta_0)`, or `None` for a constant truth.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let first = self.theta[0];
        let range = self.theta[self.theta.len() - 1] - first;
        if range <= 0.0 {
            return None;
        }
        Some(self.theta.iter().map(|t| (t - first) / range).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_invariants() {
        assert!(SyntheticTruth::new(vec![0.0, 1.0], None).is_ok());
        assert!(SyntheticTruth::new(vec![1.0, 0.0], None).is_err());
        assert!(SyntheticTruth::new(vec![0.0, 3.5], None).is_err());
        assert!(SyntheticTruth::new(vec![0.0, 0.0], None).unwrap().normalized().is_none());
    }
}
