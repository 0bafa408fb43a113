use serde::{Deserialize, Serialize};

use crate::model::State;

/// Scalar progress variable used to rank replicas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionCoordinate {
    /// Discrete magnetization `(1/N) Σ x_i`.
    #[default]
    MeanMagnetization,
}

impl ReactionCoordinate {
    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            ReactionCoordinate::MeanMagnetization => compensated_sum(x) / x.len() as f64,
        }
    }
}

/// Neumaier summation.
fn compensated_sum(x: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in x {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn xi(rc: &ReactionCoordinate, x: &State) -> f64 {
    rc.evaluate(x)
}
