//! The independent-markets median rule with moving phantoms.

use super::{NormalizedProfile, SimplexShare};
use crate::error::{Error, Result};

/// Median of a column together with the phantoms `min(k t, 1)` for `k = 0..=n`.
///
/// With `n` users there are `2n + 1` values, so the median is the `(n + 1)`-th smallest.
pub fn phantom_median(column: &[f64], t: f64) -> f64 {
    let n = column.len();
    let mut values: Vec<f64> = column.to_vec();
    values.extend((0..=n).map(|k| (k as f64 * t).min(1.0)));
    let (_, median, _) = values.select_nth_unstable_by(n, f64::total_cmp);
    *median
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketsSolution {
    pub t_star: f64,
    pub medians: Vec<f64>,
    pub shares: Vec<f64>,
}

const BISECTION_STEPS: usize = 200;

/// Finds the phantom position at which the medians sum to one.
pub fn independent_markets_solution(profile: &NormalizedProfile) -> Result<MarketsSolution> {
    let columns: Vec<Vec<f64>> = (0..profile.n_artists).map(|j| profile.column(j)).collect();
    let lhs = |t: f64| columns.iter().map(|c| phantom_median(c, t)).sum::<f64>();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if lhs(hi) < 1.0 - 1e-12 {
        return Err(Error::SolverFailure("phantom medians never reach one".into()));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = hi;
    let medians: Vec<f64> = columns.iter().map(|c| phantom_median(c, t_star)).collect();
    let total: f64 = medians.iter().sum();
    if total <= 0.0 {
        return Err(Error::SolverFailure("phantom medians vanish at the solved position".into()));
    }
    let shares = medians.iter().map(|m| m / total).collect();
    Ok(MarketsSolution { t_star, medians, shares })
}

pub fn independent_markets(profile: &NormalizedProfile) -> Result<SimplexShare> {
    Ok(SimplexShare { shares: independent_markets_solution(profile)?.shares })
}
