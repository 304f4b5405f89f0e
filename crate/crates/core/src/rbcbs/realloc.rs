use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("not enough surplus budget: need {required}, available {available}")]
pub struct ReallocationFailed {
    pub required: f64,
    pub available: f64,
}

/// Moves budget from passing agents to failing ones.
///
/// `min_risk[i]` is the least risk agent `i` can get away with under the
/// node's constraints. Failing agents are lifted to exactly that value;
/// the shortfall is taken greedily from passing agents in index order,
/// each giving at most its surplus over its own minimum.
pub fn reallocate(
    budgets: &[f64],
    min_risk: &[f64],
    failing: &[bool],
) -> Result<Vec<f64>, ReallocationFailed> {
    assert_eq!(budgets.len(), min_risk.len());
    assert_eq!(budgets.len(), failing.len());

    let mut required = 0.0;
    let mut available = 0.0;
    for i in 0..budgets.len() {
        if failing[i] {
            required += min_risk[i] - budgets[i];
        } else {
            available += budgets[i] - min_risk[i];
        }
    }
    if required > available {
        return Err(ReallocationFailed {
            required,
            available,
        });
    }

    let mut out = budgets.to_vec();
    for i in 0..budgets.len() {
        if failing[i] {
            out[i] = min_risk[i];
        }
    }
    let mut remaining = required;
    if remaining > 0.0 {
        for j in 0..budgets.len() {
            if failing[j] {
                continue;
            }
            let surplus = (budgets[j] - min_risk[j]).max(0.0);
            let take = surplus.min(remaining);
            out[j] -= take;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
    }
    Ok(out)
}
