//! Pay-per-stream and envy summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::rules::{PaymentRule, RuleId};

/// Per-artist payment divided by streams. Artists nobody streams have no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpsVector {
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
}

impl PpsVector {
    /// Values of the defined artists, in artist order.
    pub fn defined_values(&self) -> Vec<f64> {
        self.values.iter().zip(&self.defined).filter(|(_, &d)| d).map(|(&v, _)| v).collect()
    }

    pub fn get(&self, artist: usize) -> Option<f64> {
        self.defined[artist].then(|| self.values[artist])
    }
}

pub fn pps(rule: &dyn PaymentRule, instance: &Instance) -> Result<PpsVector> {
    let payments = rule.pay(instance)?;
    let totals = instance.artist_totals();
    let defined: Vec<bool> = totals.iter().map(|&t| t > 0.0).collect();
    let values = payments
        .payments
        .iter()
        .zip(&totals)
        .map(|(&p, &t)| if t > 0.0 { p / t } else { 0.0 })
        .collect();
    Ok(PpsVector { values, defined })
}

/// Largest over smallest defined pay-per-stream.
pub fn envy_of(pps: &PpsVector) -> Result<f64> {
    let vals = pps.defined_values();
    if vals.is_empty() {
        return Err(Error::EmptyInstance);
    }
    if let Some(j) = (0..pps.values.len()).find(|&j| pps.defined[j] && pps.values[j] <= 0.0) {
        return Err(Error::DegenerateEnvy(j));
    }
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

pub fn max_envy(rule: &dyn PaymentRule, instance: &Instance) -> Result<f64> {
    envy_of(&pps(rule, instance)?)
}

/// Like [`max_envy`] but an unpaid streamed artist gives `+inf` instead of an error.
pub fn max_envy_or_inf(rule: &dyn PaymentRule, instance: &Instance) -> Result<f64> {
    match max_envy(rule, instance) {
        Err(Error::DegenerateEnvy(_)) => Ok(f64::INFINITY),
        r => r,
    }
}

/// Each defined artist's pay-per-stream relative to pro-rata's.
pub fn relative_pps(rule: &dyn PaymentRule, instance: &Instance) -> Result<Vec<f64>> {
    let own = pps(rule, instance)?;
    let base = pps(&RuleId::GlobalProp, instance)?;
    Ok(own
        .values
        .iter()
        .zip(&base.values)
        .zip(&own.defined)
        .filter(|(_, &d)| d)
        .map(|((&a, &b), _)| a / b)
        .collect())
}

/// Means of the `k` largest and `k` smallest relative pay-per-stream values.
pub fn topk_bottomk_relative_pps(rule: &dyn PaymentRule, instance: &Instance, k: usize) -> Result<(f64, f64)> {
    let mut ratios = relative_pps(rule, instance)?;
    if k == 0 || k > ratios.len() {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={} defined artists", ratios.len())));
    }
    ratios.sort_by(f64::total_cmp);
    let bottom = ratios[..k].iter().sum::<f64>() / k as f64;
    let top = ratios[ratios.len() - k..].iter().sum::<f64>() / k as f64;
    Ok((top, bottom))
}

/// The two-artist family on which a rule with envy bounded by `k` must be manipulable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvyDemo {
    pub k: f64,
    pub alpha: f64,
    pub base: Instance,
    pub extended: Instance,
    pub envy_base: f64,
    pub envy_extended: f64,
    /// The larger of the two user-centric envies.
    pub max_envy: f64,
}

/// Artist 0 has `1 / (4k)` streams and artist 1 has one stream spread over the other users;
/// the extended instance adds a user streaming artist 0 `3k` times.
pub fn envy_bound_demo(k: f64, alpha: f64) -> Result<EnvyDemo> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Parameter(format!("k must be at least 1, got {k}")));
    }
    let n = (2.0 / alpha).ceil() as usize + 1;
    let mut rows = vec![vec![1.0 / (4.0 * k), 0.0]];
    rows.extend(vec![vec![0.0, 1.0 / (n - 1) as f64]; n - 1]);
    let base = Instance::new(rows, alpha)?;
    let extended = base.add_user(&vec![3.0 * k, 0.0].into())?;
    let envy_base = max_envy_or_inf(&RuleId::UserProp, &base)?;
    let envy_extended = max_envy_or_inf(&RuleId::UserProp, &extended)?;
    Ok(EnvyDemo { k, alpha, base, extended, envy_base, envy_extended, max_envy: envy_base.max(envy_extended) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pps_examples() {
        let sym = Instance::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], 1.0).unwrap();
        assert_eq!(pps(&RuleId::GlobalProp, &sym).unwrap().values, vec![0.5, 0.5]);
        assert_eq!(max_envy(&RuleId::GlobalProp, &sym).unwrap(), 1.0);

        let i = Instance::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]], 1.0).unwrap();
        let p = pps(&RuleId::UserProp, &i).unwrap();
        assert!((p.values[0] - 0.75).abs() < 1e-12 && (p.values[1] - 0.5).abs() < 1e-12);
        assert!((max_envy(&RuleId::UserProp, &i).unwrap() - 1.5).abs() < 1e-12);
        let (top, bottom) = topk_bottomk_relative_pps(&RuleId::UserProp, &i, 1).unwrap();
        assert!((top - 1.125).abs() < 1e-12 && (bottom - 0.75).abs() < 1e-12);
        assert!(topk_bottomk_relative_pps(&RuleId::UserProp, &i, 3).is_err());
    }

    #[test]
    fn unstreamed_artists_are_masked() {
        let i = Instance::new(vec![vec![1.0, 0.0, 2.0], vec![1.0, 0.0, 1.0]], 0.6).unwrap();
        for rule in [RuleId::GlobalProp, RuleId::UserProp, RuleId::UserEq] {
            let p = pps(&rule, &i).unwrap();
            assert_eq!(p.get(1), None);
            assert_eq!(p.defined_values().len(), 2);
        }
        let (top, bottom) = topk_bottomk_relative_pps(&RuleId::GlobalProp, &i, 2).unwrap();
        assert!((top - 1.0).abs() < 1e-12 && (bottom - 1.0).abs() < 1e-12);
    }

    #[test]
    fn envy_demo_exceeds_k() {
        let mut last = 0.0;
        for k in [1.0, 10.0, 100.0] {
            let d = envy_bound_demo(k, 1.0).unwrap();
            assert!(d.max_envy > k, "{k}: {}", d.max_envy);
            assert!(d.max_envy > last);
            last = d.max_envy;
        }
    }
}
