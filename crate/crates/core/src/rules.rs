//! The main payment rules and uniform rule dispatch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, PaymentVector};
use crate::portioning::{self, PortioningId};

/// Anything that maps an instance to per-artist payments.
pub trait PaymentRule: Sync {
    fn name(&self) -> String;
    fn pay(&self, instance: &Instance) -> Result<PaymentVector>;
}

/// Every named rule the library evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleId {
    GlobalProp,
    UserProp,
    UserEq,
    ScaledUserProp,
    Portioning(PortioningId),
}

impl RuleId {
    /// The four main rules followed by the eight portioning rules.
    pub const ALL: [RuleId; 12] = [
        RuleId::GlobalProp,
        RuleId::UserProp,
        RuleId::UserEq,
        RuleId::ScaledUserProp,
        RuleId::Portioning(PortioningId::Avg),
        RuleId::Portioning(PortioningId::Max),
        RuleId::Portioning(PortioningId::Min),
        RuleId::Portioning(PortioningId::Med),
        RuleId::Portioning(PortioningId::Geo),
        RuleId::Portioning(PortioningId::Util),
        RuleId::Portioning(PortioningId::Egal),
        RuleId::Portioning(PortioningId::IndependentMarkets),
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RuleId::GlobalProp => "globalprop",
            RuleId::UserProp => "userprop",
            RuleId::UserEq => "usereq",
            RuleId::ScaledUserProp => "scaleduserprop",
            RuleId::Portioning(p) => p.as_str(),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str().replace('-', "") == key)
            .or(match key.as_str() {
                "prorata" => Some(RuleId::GlobalProp),
                "usercentric" => Some(RuleId::UserProp),
                "scaledup" => Some(RuleId::ScaledUserProp),
                "independentmarkets" => Some(RuleId::Portioning(PortioningId::IndependentMarkets)),
                _ => None,
            })
            .ok_or_else(|| Error::Parameter(format!("unknown rule '{s}'")))
    }
}

impl PaymentRule for RuleId {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn pay(&self, instance: &Instance) -> Result<PaymentVector> {
        evaluate(*self, instance)
    }
}

/// Dispatches to the evaluator for `rule`.
pub fn evaluate(rule: RuleId, instance: &Instance) -> Result<PaymentVector> {
    match rule {
        RuleId::GlobalProp => Ok(global_prop(instance)),
        RuleId::UserProp => Ok(user_prop(instance)),
        RuleId::UserEq => Ok(user_eq(instance)),
        RuleId::ScaledUserProp => Ok(scaled_user_prop(instance)),
        RuleId::Portioning(id) => portioning::portioning_payment(id, instance),
    }
}

/// Pro-rata division: each artist gets its share of all engagement times `alpha * n`.
pub fn global_prop(instance: &Instance) -> PaymentVector {
    let totals = instance.artist_totals();
    let grand: f64 = totals.iter().sum();
    let budget = instance.budget();
    PaymentVector::new(totals.iter().map(|t| t / grand * budget).collect())
}

/// User-centric division: each user's `alpha` is split in proportion to their own engagement.
pub fn user_prop(instance: &Instance) -> PaymentVector {
    let alpha = instance.alpha();
    let mut payments = vec![0.0; instance.n_artists()];
    for row in instance.rows() {
        let s: f64 = row.iter().sum();
        for (p, &w) in payments.iter_mut().zip(row) {
            *p += alpha * w / s;
        }
    }
    PaymentVector::new(payments)
}

/// Each user's `alpha` is split equally among the artists they engaged with at all.
pub fn user_eq(instance: &Instance) -> PaymentVector {
    let alpha = instance.alpha();
    let mut payments = vec![0.0; instance.n_artists()];
    for row in instance.rows() {
        let support = row.iter().filter(|&&w| w > 0.0).count() as f64;
        for (p, &w) in payments.iter_mut().zip(row) {
            if w > 0.0 {
                *p += alpha / support;
            }
        }
    }
    PaymentVector::new(payments)
}

/// Scaling constant for [`scaled_user_prop`].
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSolution {
    pub gamma: f64,
    /// Users with `gamma * S_i >= 1 - 1e-12`; they contribute their full fee.
    pub capped_users: Vec<usize>,
    pub residual: f64,
}

impl GammaSolution {
    /// The fraction of a user's fee passed on to artists.
    pub fn factor(&self, total: f64) -> f64 {
        cap_factor(self.gamma, total)
    }
}

const CAP_TOL: f64 = 1e-12;

fn cap_factor(gamma: f64, total: f64) -> f64 {
    let g = gamma * total;
    if g >= 1.0 - CAP_TOL {
        1.0
    } else {
        g
    }
}

/// Solves `sum_i min(gamma * S_i, 1) = alpha * n` for `gamma`.
///
/// The left side is piecewise linear in `gamma` with breakpoints `1 / S_i`. Users are
/// capped in decreasing order of total, so the sweep walks `k = 0, 1, ..` capped users and
/// solves the linear segment in closed form.
pub fn solve_gamma(user_totals: &[f64], alpha: f64) -> Result<GammaSolution> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    if user_totals.is_empty() {
        return Err(Error::EmptyInstance);
    }
    if let Some(i) = user_totals.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::ZeroRow(i));
    }
    let n = user_totals.len();
    let target = alpha * n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| user_totals[b].total_cmp(&user_totals[a]));

    let gamma = if alpha >= 1.0 {
        1.0 / user_totals[order[n - 1]]
    } else {
        // suffix[k] = sum of totals of users order[k..]
        let mut suffix = vec![0.0; n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] + user_totals[order[k]];
        }
        let mut found = None;
        for k in 0..n {
            let g = (target - k as f64) / suffix[k];
            if g * user_totals[order[k]] <= 1.0 + CAP_TOL {
                found = Some(g);
                break;
            }
        }
        found.ok_or_else(|| Error::SolverFailure("no segment of the gamma equation contains the budget".into()))?
    };

    let capped_users: Vec<usize> = (0..n).filter(|&i| gamma * user_totals[i] >= 1.0 - CAP_TOL).collect();
    let lhs: f64 = user_totals.iter().map(|&s| cap_factor(gamma, s)).sum();
    Ok(GammaSolution { gamma, capped_users, residual: (lhs - target).abs() })
}

/// User-centric division after the platform keeps a larger cut from light users.
pub fn scaled_user_prop(instance: &Instance) -> PaymentVector {
    let totals = instance.user_totals();
    let sol = solve_gamma(&totals, instance.alpha()).expect("valid instance has a gamma solution");
    let mut payments = vec![0.0; instance.n_artists()];
    for (row, &s) in instance.rows().zip(&totals) {
        let f = cap_factor(sol.gamma, s);
        for (p, &w) in payments.iter_mut().zip(row) {
            *p += f * w / s;
        }
    }
    PaymentVector::new(payments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(rows: &[&[f64]], alpha: f64) -> Instance {
        Instance::new(rows.iter().map(|r| r.to_vec()).collect(), alpha).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn global_prop_examples() {
        // 500 users, artist 0 holds a quarter of all streams.
        let mut rows = vec![vec![1.0, 0.0]; 125];
        rows.extend(vec![vec![0.0, 1.0]; 375]);
        let p = global_prop(&Instance::new(rows, 1.0).unwrap());
        assert!((p.payments[0] - 125.0).abs() < 1e-9);

        assert_eq!(global_prop(&inst(&[&[1.0, 1.0], &[1.0, 1.0]], 1.0)).payments, vec![1.0, 1.0]);

        let mut rows = vec![vec![1.0, 0.0]; 5];
        rows.push(vec![0.0, 5.0]);
        let p = global_prop(&Instance::new(rows, 1.0).unwrap());
        assert!((p.payments[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn user_prop_examples() {
        let a = 0.7;
        let p = user_prop(&inst(&[&[2.0, 1.0, 1.0]], a));
        assert!(close(&p.payments, &[a / 2.0, a / 4.0, a / 4.0], 1e-15));
        assert_eq!(user_prop(&inst(&[&[1.0, 0.0], &[1.0, 0.0]], 1.0)).payments, vec![2.0, 0.0]);

        let i = inst(&[&[1.0, 1.0], &[3.0, 1.0]], 0.5);
        let p = user_prop(&i);
        assert!(close(&p.payments, &[0.625, 0.375], 1e-15));
        // independent route: sum single-user sub-instances
        let mut oracle = [0.0; 2];
        for u in 0..i.n_users() {
            let s: f64 = i.row(u).iter().sum();
            for j in 0..2 {
                oracle[j] += 0.5 * i.get(u, j) / s;
            }
        }
        assert!(close(&p.payments, &oracle, 1e-15));
    }

    #[test]
    fn user_eq_examples() {
        let a = 0.9;
        let p = user_eq(&inst(&[&[80.0, 19.0, 1.0, 0.0]], a));
        assert!(close(&p.payments, &[a / 3.0, a / 3.0, a / 3.0, 0.0], 1e-15));
        assert_eq!(user_eq(&inst(&[&[7.0, 0.0]], 1.0)).payments, vec![1.0, 0.0]);
        assert_eq!(user_eq(&inst(&[&[1.0, 1.0], &[0.0, 3.0]], 1.0)).payments, vec![0.5, 1.5]);
    }

    #[test]
    fn gamma_examples() {
        let g = solve_gamma(&[1.0, 3.0], 0.5).unwrap();
        assert!((g.gamma - 0.25).abs() < 1e-15);
        assert!(0.25 * 3.0 < 1.0);
        assert!(g.capped_users.is_empty());

        let g = solve_gamma(&[1.0, 100.0], 0.6).unwrap();
        assert!((g.gamma - 0.2).abs() < 1e-15);
        assert_eq!(g.capped_users, vec![1]);

        let g = solve_gamma(&[1.0, 3.0], 1.0).unwrap();
        assert_eq!(g.gamma, 1.0);
        assert_eq!(g.capped_users, vec![0, 1]);

        assert!(solve_gamma(&[1.0], 0.0).is_err());
        assert!(solve_gamma(&[0.0], 0.5).is_err());
    }

    #[test]
    fn gamma_matches_bisection() {
        // bisection oracle on the monotone left-hand side
        let totals = [0.3, 7.0, 2.5, 2.5, 11.0, 0.01];
        for &alpha in &[0.05, 0.2, 0.5, 0.77, 0.95] {
            let target = alpha * totals.len() as f64;
            let lhs = |g: f64| totals.iter().map(|s| (g * s).min(1.0)).sum::<f64>();
            let (mut lo, mut hi) = (0.0, 1.0 / 0.01);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if lhs(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let g = solve_gamma(&totals, alpha).unwrap();
            assert!((g.gamma - hi).abs() < 1e-9 * hi.max(1.0), "alpha {alpha}: {} vs {hi}", g.gamma);
            assert!(g.residual < 1e-12 * totals.len() as f64);
        }
    }

    #[test]
    fn scaled_user_prop_examples() {
        let p = scaled_user_prop(&inst(&[&[1.0, 0.0], &[0.0, 3.0]], 0.5));
        assert!(close(&p.payments, &[0.25, 0.75], 1e-15));

        let i = inst(&[&[1.0, 2.0, 0.0], &[0.0, 5.0, 5.0], &[0.1, 0.0, 0.0]], 1.0);
        assert!(close(&scaled_user_prop(&i).payments, &user_prop(&i).payments, 1e-12));

        // equal totals satisfy the equivalence hypothesis for every alpha
        let i = inst(&[&[1.0, 2.0, 0.0], &[0.0, 1.5, 1.5], &[3.0, 0.0, 0.0]], 0.4);
        assert!(close(&scaled_user_prop(&i).payments, &global_prop(&i).payments, 1e-12));
    }

    #[test]
    fn evaluate_dispatch() {
        let sym = inst(&[&[1.0, 1.0], &[1.0, 1.0]], 1.0);
        assert_eq!(evaluate(RuleId::GlobalProp, &sym).unwrap().payments, vec![1.0, 1.0]);
        let one = inst(&[&[2.0, 1.0, 1.0]], 1.0);
        assert_eq!(evaluate(RuleId::UserProp, &one).unwrap().payments, vec![0.5, 0.25, 0.25]);
        assert_eq!(
            evaluate(RuleId::ScaledUserProp, &one).unwrap(),
            evaluate(RuleId::UserProp, &one).unwrap()
        );
    }

    #[test]
    fn rule_names_round_trip() {
        for r in RuleId::ALL {
            assert_eq!(r.as_str().parse::<RuleId>().unwrap(), r);
        }
        assert_eq!("Global-Prop".parse::<RuleId>().unwrap(), RuleId::GlobalProp);
        assert!("nope".parse::<RuleId>().is_err());
    }

    #[test]
    fn row_scaling_influence() {
        let base = inst(&[&[1.0, 0.0], &[1.0, 3.0]], 0.5);
        let scaled = base.replace_user(1, &vec![10.0, 30.0].into()).unwrap();
        assert!(close(&user_prop(&base).payments, &user_prop(&scaled).payments, 1e-15));
        assert!(close(&user_eq(&base).payments, &user_eq(&scaled).payments, 1e-15));
        assert!(!close(&global_prop(&base).payments, &global_prop(&scaled).payments, 1e-6));
        assert!(!close(&scaled_user_prop(&base).payments, &scaled_user_prop(&scaled).payments, 1e-6));
    }
}
