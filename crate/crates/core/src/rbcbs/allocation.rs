use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the global bound is split at the root of the constraint tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationStrategy {
    /// `Δ / N` each.
    #[default]
    Uniform,
    /// Proportional to the utility (by default the initial path's risk).
    Utility,
    /// Inversely proportional to the utility (by default the initial
    /// path's length).
    InverseUtility,
}

impl AllocationStrategy {
    pub const ALL: [AllocationStrategy; 3] = [
        AllocationStrategy::Uniform,
        AllocationStrategy::Utility,
        AllocationStrategy::InverseUtility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AllocationStrategy::Uniform => "uniform",
            AllocationStrategy::Utility => "utility",
            AllocationStrategy::InverseUtility => "inverse",
        }
    }
}

impl fmt::Display for AllocationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllocationStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(AllocationStrategy::Uniform),
            "utility" => Ok(AllocationStrategy::Utility),
            "inverse" | "inverse_utility" | "inverse-utility" => {
                Ok(AllocationStrategy::InverseUtility)
            }
            other => Err(format!("unknown allocation strategy `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("need at least one agent")]
    NoAgents,
    #[error("expected {expected} utilities, got {got}")]
    UtilityCount { expected: usize, got: usize },
    #[error("utility of agent {agent} must be positive and finite, got {value}")]
    InvalidUtility { agent: usize, value: f64 },
    #[error("global risk bound must be finite and non-negative, got {0}")]
    InvalidBound(f64),
}

/// Per-agent risk budgets `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAllocation(pub Vec<f64>);

impl RiskAllocation {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for RiskAllocation {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Splits `delta` across `n` agents. The shares sum to `delta` exactly: the
/// last agent takes whatever the others left.
pub fn initial_allocation(
    strategy: AllocationStrategy,
    delta: f64,
    utilities: &[f64],
    n: usize,
) -> Result<RiskAllocation, AllocationError> {
    if n == 0 {
        return Err(AllocationError::NoAgents);
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(AllocationError::InvalidBound(delta));
    }
    let weights: Vec<f64> = match strategy {
        AllocationStrategy::Uniform => vec![1.0; n],
        AllocationStrategy::Utility | AllocationStrategy::InverseUtility => {
            if utilities.len() != n {
                return Err(AllocationError::UtilityCount {
                    expected: n,
                    got: utilities.len(),
                });
            }
            for (agent, &value) in utilities.iter().enumerate() {
                if !(value.is_finite() && value > 0.0) {
                    return Err(AllocationError::InvalidUtility { agent, value });
                }
            }
            if strategy == AllocationStrategy::Utility {
                utilities.to_vec()
            } else {
                utilities.iter().map(|u| 1.0 / u).collect()
            }
        }
    };
    let norm: f64 = weights.iter().sum();
    let mut shares: Vec<f64> = weights.iter().map(|w| delta * w / norm).collect();
    let head: f64 = shares[..n - 1].iter().sum();
    shares[n - 1] = (delta - head).max(0.0);
    Ok(RiskAllocation(shares))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_split() {
        let a = initial_allocation(AllocationStrategy::Uniform, 10.0, &[], 5).unwrap();
        assert_eq!(a.0, vec![2.0; 5]);
    }

    #[test]
    fn utility_split() {
        let a = initial_allocation(AllocationStrategy::Utility, 4.0, &[1.0, 3.0], 2).unwrap();
        assert_eq!(a.0, vec![1.0, 3.0]);
    }

    #[test]
    fn inverse_utility_split() {
        let a =
            initial_allocation(AllocationStrategy::InverseUtility, 4.0, &[1.0, 3.0], 2).unwrap();
        assert_eq!(a.0, vec![3.0, 1.0]);
    }

    #[test]
    fn rejects_bad_utilities() {
        assert_eq!(
            initial_allocation(AllocationStrategy::Utility, 4.0, &[1.0, 0.0], 2),
            Err(AllocationError::InvalidUtility {
                agent: 1,
                value: 0.0
            })
        );
        assert!(initial_allocation(AllocationStrategy::Uniform, 4.0, &[], 0).is_err());
        assert!(initial_allocation(AllocationStrategy::Uniform, f64::NAN, &[], 1).is_err());
    }

    #[test]
    fn parses_names() {
        for s in AllocationStrategy::ALL {
            assert_eq!(s.name().parse::<AllocationStrategy>().unwrap(), s);
        }
    }
}
