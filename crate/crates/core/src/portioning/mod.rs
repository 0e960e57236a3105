//! Portioning rules lifted to payment rules.
//!
//! Each user row is normalized onto the simplex, the normalized profile is aggregated into
//! one share vector, and shares are scaled by `alpha * n`.

pub mod lp;
mod markets;
mod welfare;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, PaymentVector};

pub use markets::{independent_markets, independent_markets_solution, phantom_median, MarketsSolution};
pub use welfare::{egal_rule, max_entropy_on_box, util_interval, util_objective, util_rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortioningId {
    Avg,
    Max,
    Min,
    Med,
    Geo,
    Util,
    Egal,
    IndependentMarkets,
}

impl PortioningId {
    pub const ALL: [PortioningId; 8] = [
        PortioningId::Avg,
        PortioningId::Max,
        PortioningId::Min,
        PortioningId::Med,
        PortioningId::Geo,
        PortioningId::Util,
        PortioningId::Egal,
        PortioningId::IndependentMarkets,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PortioningId::Avg => "avg",
            PortioningId::Max => "max",
            PortioningId::Min => "min",
            PortioningId::Med => "med",
            PortioningId::Geo => "geo",
            PortioningId::Util => "util",
            PortioningId::Egal => "egal",
            PortioningId::IndependentMarkets => "indmkt",
        }
    }
}

impl fmt::Display for PortioningId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PortioningId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PortioningId::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown portioning rule '{s}'")))
    }
}

/// A distribution over artists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexShare {
    pub shares: Vec<f64>,
}

/// Rows of an instance divided by their totals.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedProfile {
    pub n_users: usize,
    pub n_artists: usize,
    /// Row-major, every row sums to one.
    pub rows: Vec<f64>,
}

impl NormalizedProfile {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n_artists..(i + 1) * self.n_artists]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_users).map(|i| self.rows[i * self.n_artists + j]).collect()
    }
}

pub fn normalize(instance: &Instance) -> NormalizedProfile {
    let rows = instance
        .rows()
        .flat_map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(move |w| w / s)
        })
        .collect();
    NormalizedProfile { n_users: instance.n_users(), n_artists: instance.n_artists(), rows }
}

/// Column aggregators for the coordinate-wise rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Avg,
    Max,
    Min,
    Med,
    Geo,
}

impl Aggregate {
    pub fn apply(self, column: &[f64]) -> f64 {
        let n = column.len() as f64;
        match self {
            Aggregate::Avg => column.iter().sum::<f64>() / n,
            Aggregate::Max => column.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Min => column.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregate::Med => {
                let mut v = column.to_vec();
                v.sort_by(f64::total_cmp);
                let k = v.len();
                if k % 2 == 1 {
                    v[k / 2]
                } else {
                    0.5 * (v[k / 2 - 1] + v[k / 2])
                }
            }
            Aggregate::Geo => {
                if column.iter().any(|&x| x <= 0.0) {
                    0.0
                } else {
                    (column.iter().map(|x| x.ln()).sum::<f64>() / n).exp()
                }
            }
        }
    }
}

/// Aggregates every column with `f` and renormalizes.
pub fn coordinatewise(f: Aggregate, profile: &NormalizedProfile) -> Result<SimplexShare> {
    let raw: Vec<f64> = (0..profile.n_artists).map(|j| f.apply(&profile.column(j))).collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateAggregate);
    }
    Ok(SimplexShare { shares: raw.iter().map(|x| x / total).collect() })
}

/// The share vector chosen by a portioning rule.
pub fn portioning_shares(id: PortioningId, instance: &Instance) -> Result<SimplexShare> {
    let profile = normalize(instance);
    match id {
        PortioningId::Avg => coordinatewise(Aggregate::Avg, &profile),
        PortioningId::Max => coordinatewise(Aggregate::Max, &profile),
        PortioningId::Min => coordinatewise(Aggregate::Min, &profile),
        PortioningId::Med => coordinatewise(Aggregate::Med, &profile),
        PortioningId::Geo => coordinatewise(Aggregate::Geo, &profile),
        PortioningId::Util => util_rule(&profile),
        PortioningId::Egal => egal_rule(&profile),
        PortioningId::IndependentMarkets => independent_markets(&profile),
    }
}

/// Shares scaled by the budget `alpha * n`.
pub fn portioning_payment(id: PortioningId, instance: &Instance) -> Result<PaymentVector> {
    let share = portioning_shares(id, instance)?;
    let budget = instance.budget();
    Ok(PaymentVector::new(share.shares.iter().map(|s| s * budget).collect()))
}
