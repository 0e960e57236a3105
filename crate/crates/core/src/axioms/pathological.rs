//! Two artificial two-artist rules that separate fraud-proofness from bribery-proofness.
//!
//! [`ThresholdRule`] resists bribery but not fake users; [`SurrogateRule`] resists fake
//! users but not bribery. They exist to exercise the axiom checkers on rules whose
//! verdicts are known.

use crate::error::{Error, Result};
use crate::model::{Instance, PaymentVector};
use crate::rules::PaymentRule;

fn two_artists(instance: &Instance) -> Result<()> {
    if instance.n_artists() != 2 {
        return Err(Error::Domain { expected: 2, got: instance.n_artists() });
    }
    Ok(())
}

/// Number of users with positive engagement per artist.
fn supporters(instance: &Instance) -> [f64; 2] {
    let mut a = [0.0; 2];
    for row in instance.rows() {
        for (j, &w) in row.iter().enumerate() {
            if w > 0.0 {
                a[j] += 1.0;
            }
        }
    }
    a
}

/// Pays user-centric shares unless the weaker artist falls below a threshold growing with
/// `n`, in which case the weaker artist is paid by head count capped at the threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThresholdRule;

impl ThresholdRule {
    /// `2 * floor(n * alpha / 20)`.
    pub fn beta(n_users: usize, alpha: f64) -> f64 {
        2.0 * (n_users as f64 * alpha / 20.0 + 1e-9).floor()
    }
}

impl PaymentRule for ThresholdRule {
    fn name(&self) -> String {
        "threshold".into()
    }

    fn pay(&self, instance: &Instance) -> Result<PaymentVector> {
        two_artists(instance)?;
        let p = crate::rules::user_prop(instance).payments;
        let beta = Self::beta(instance.n_users(), instance.alpha());
        if p[0].min(p[1]) >= beta {
            return Ok(PaymentVector::new(p));
        }
        let weak = if p[0] < p[1] { 0 } else { 1 };
        let a = supporters(instance);
        let mut out = vec![0.0; 2];
        out[weak] = a[weak].min(beta);
        out[1 - weak] = instance.budget() - out[weak];
        Ok(PaymentVector::new(out))
    }
}

/// Pays by which artist more users engage with, clipped so head counts bound payments.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateRule {
    pub epsilon: f64,
}

impl SurrogateRule {
    pub fn new(epsilon: f64) -> Self {
        SurrogateRule { epsilon }
    }

    /// Below this many users both artists split the budget evenly.
    ///
    /// The smallest `k` with `k * alpha > 1 + epsilon`, which keeps the trailing artist's
    /// surrogate share positive.
    pub fn min_users(&self, alpha: f64) -> usize {
        let mut k = 1;
        while (k as f64) * alpha <= 1.0 + self.epsilon {
            k += 1;
        }
        k
    }

    /// The unclipped split.
    pub fn surrogate(&self, instance: &Instance) -> Result<[f64; 2]> {
        two_artists(instance)?;
        let alpha = instance.alpha();
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 - alpha) {
            return Err(Error::Parameter(format!(
                "epsilon must lie in (0, 1 - alpha) = (0, {}), got {}",
                1.0 - alpha,
                self.epsilon
            )));
        }
        let budget = instance.budget();
        let a = supporters(instance);
        if instance.n_users() <= self.min_users(alpha) || a[0] == a[1] {
            return Ok([budget / 2.0; 2]);
        }
        let lead = (budget + 1.0 + self.epsilon) / 2.0;
        let trail = (budget - 1.0 - self.epsilon) / 2.0;
        Ok(if a[0] > a[1] { [lead, trail] } else { [trail, lead] })
    }
}

impl PaymentRule for SurrogateRule {
    fn name(&self) -> String {
        "surrogate".into()
    }

    fn pay(&self, instance: &Instance) -> Result<PaymentVector> {
        let psi = self.surrogate(instance)?;
        let a = supporters(instance);
        let budget = instance.budget();
        let phi = [
            psi[0].min(a[0]).max(budget - a[1]),
            psi[1].min(a[1]).max(budget - a[0]),
        ];
        Ok(PaymentVector::new(phi.to_vec()))
    }
}

/// Both rules as trait objects, the surrogate with the given `epsilon`.
pub fn pathological_rules(epsilon: f64) -> Vec<Box<dyn PaymentRule>> {
    vec![Box::new(ThresholdRule), Box::new(SurrogateRule::new(epsilon))]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{verify_bribery_pair, verify_fraud_pair};

    #[test]
    fn threshold_fraud_example() {
        let alpha: f64 = 1.0;
        let n = (40.0 / alpha - 1.0).ceil() as usize;
        let base = Instance::new(vec![vec![0.01, 0.99]; n], alpha).unwrap();
        let fake = base.add_user(&vec![0.01, 0.99].into()).unwrap();
        assert_eq!(ThresholdRule::beta(n, alpha), 2.0);
        assert_eq!(ThresholdRule.pay(&base).unwrap().payments[0], 2.0);
        assert_eq!(ThresholdRule.pay(&fake).unwrap().payments[0], 4.0);
        let r = verify_fraud_pair(&ThresholdRule, &base, &fake, &[0]).unwrap();
        assert!((r.gain - 2.0).abs() < 1e-12 && r.violated);
    }

    #[test]
    fn surrogate_bribery_example() {
        let rule = SurrogateRule::new(0.25);
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let base = Instance::new(rows, 0.5).unwrap();
        let bribed = base.replace_user(2, &vec![0.0, 1.0].into()).unwrap();
        assert!((rule.pay(&base).unwrap().payments[1] - 5.0 / 8.0).abs() < 1e-12);
        assert!((rule.pay(&bribed).unwrap().payments[1] - 15.0 / 8.0).abs() < 1e-12);
        let r = verify_bribery_pair(&rule, &base, &bribed, &[1]).unwrap();
        assert!((r.gain - 10.0 / 8.0).abs() < 1e-12 && r.violated);
    }

    #[test]
    fn budget_and_domain() {
        let rule = SurrogateRule::new(0.1);
        let i = Instance::new(vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 0.0], vec![1.0, 0.0]], 0.7).unwrap();
        for p in [rule.pay(&i).unwrap(), ThresholdRule.pay(&i).unwrap()] {
            assert!((p.total() - i.budget()).abs() < 1e-12);
            assert!(p.payments.iter().all(|&x| x >= 0.0));
        }
        let three = Instance::new(vec![vec![1.0, 0.0, 1.0]], 0.5).unwrap();
        assert_eq!(ThresholdRule.pay(&three), Err(Error::Domain { expected: 2, got: 3 }));
        assert!(matches!(SurrogateRule::new(0.5).pay(&i), Err(Error::Parameter(_))));
    }
}
