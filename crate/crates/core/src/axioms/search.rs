//! Randomized witness searches.
//!
//! Each trial owns a ChaCha8 stream derived from `(seed, trial)`, so results do not depend
//! on thread scheduling. Fraud and bribery searches only try one added or changed user per
//! trial, since a rule that resists single-user manipulation resists all of them. For a fixed
//! pair of instances the gain-maximizing target set is exactly the set of artists whose
//! payment rose, so target sets are never enumerated explicitly.

use std::ops::RangeInclusive;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    best_target, verify_anonymity, verify_bribery_pair, verify_click_fraud, verify_engagement_monotone,
    verify_fraud_pair, verify_neutrality, verify_no_free_ridership, verify_pigou_dalton, verify_strong_sybil,
    verify_sybil_pair, verify_user_addition_monotone, AxiomId, GainReport, Transfer, ViolationWitness,
};
use crate::error::{Error, Result};
use crate::model::{Instance, UserProfile};
use crate::rules::PaymentRule;

/// Number of random candidate rows tried per trial, next to the point masses.
pub const RANDOM_CANDIDATES: usize = 64;

/// Draws random valid instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSampler {
    pub users: RangeInclusive<usize>,
    pub artists: RangeInclusive<usize>,
    pub alphas: Vec<f64>,
    /// Probability that an entry is zero.
    pub zero_prob: f64,
}

impl Default for InstanceSampler {
    fn default() -> Self {
        InstanceSampler { users: 1..=8, artists: 2..=5, alphas: vec![0.3, 0.7, 1.0], zero_prob: 0.4 }
    }
}

impl InstanceSampler {
    /// Two-artist instances with up to `max_users` users.
    pub fn two_artists(max_users: usize, alphas: Vec<f64>) -> Self {
        InstanceSampler { users: 1..=max_users, artists: 2..=2, alphas, zero_prob: 0.3 }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Instance {
        let n = rng.random_range(self.users.clone());
        let m = rng.random_range(self.artists.clone());
        let alpha = *self.alphas.choose(rng).expect("sampler needs at least one alpha");
        let rows = (0..n).map(|_| random_row(rng, m, self.zero_prob)).collect();
        Instance::new(rows, alpha).expect("sampled rows are valid")
    }
}

fn random_weight(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..3) {
        0 => rng.random_range(1..=10) as f64,
        1 => rng.random_range(0.01..5.0),
        _ => 10f64.powf(rng.random_range(-2.0..3.0)),
    }
}

/// A nonzero row with each entry zero with probability `zero_prob`.
pub fn random_row(rng: &mut impl Rng, m: usize, zero_prob: f64) -> Vec<f64> {
    let mut row: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(zero_prob) { 0.0 } else { random_weight(rng) })
        .collect();
    if row.iter().all(|&w| w == 0.0) {
        row[rng.random_range(0..m)] = random_weight(rng);
    }
    row
}

/// Fake or bribed profiles to try against `base`.
///
/// Point masses `c * e_j` for `c` in `{1, n, n * max_weight, n^2}` on every artist, then
/// [`RANDOM_CANDIDATES`] random rows at the same magnitudes.
pub fn candidate_profiles(base: &Instance, rng: &mut impl Rng) -> Vec<UserProfile> {
    let m = base.n_artists();
    let n = base.n_users() as f64;
    let max_w = base.weights().iter().cloned().fold(0.0, f64::max);
    let scales = [1.0, n, n * max_w, n * n];
    let mut out = Vec::with_capacity(m * scales.len() + RANDOM_CANDIDATES);
    for j in 0..m {
        for &c in &scales {
            out.push(UserProfile::point_mass(m, j, c));
        }
    }
    for _ in 0..RANDOM_CANDIDATES {
        let row = random_row(rng, m, 0.5);
        let total: f64 = row.iter().sum();
        let c = scales[rng.random_range(0..scales.len())] * rng.random_range(0.5..1.5);
        out.push(row.iter().map(|w| w / total * c).collect::<Vec<f64>>().into());
    }
    out
}

/// A manipulated instance together with its report.
#[derive(Debug, Clone, PartialEq)]
pub struct Found {
    pub report: GainReport,
    pub manipulated: Instance,
    pub target: Vec<usize>,
}

fn keep_best(best: &mut Option<Found>, cand: Found) {
    if best.as_ref().is_none_or(|b| cand.report.margin > b.report.margin) {
        *best = Some(cand);
    }
}

/// Best single added user from `candidates`. Candidates the rule cannot evaluate are skipped.
pub fn search_fraud(rule: &dyn PaymentRule, base: &Instance, candidates: &[UserProfile]) -> Result<Option<Found>> {
    let before = rule.pay(base)?;
    let mut best = None;
    for c in candidates {
        let manipulated = base.add_user(c)?;
        let Ok(after) = rule.pay(&manipulated) else { continue };
        let target = best_target(&before, &after);
        if target.is_empty() {
            continue;
        }
        let report = verify_fraud_pair(rule, base, &manipulated, &target)?;
        keep_best(&mut best, Found { report, manipulated, target });
    }
    Ok(best)
}

/// Best single bribed user, trying every candidate on each user in `users`.
pub fn search_bribery(
    rule: &dyn PaymentRule,
    base: &Instance,
    users: &[usize],
    candidates: &[UserProfile],
) -> Result<Option<Found>> {
    let before = rule.pay(base)?;
    let mut best = None;
    for &i in users {
        for c in candidates {
            if c.weights.as_slice() == base.row(i) {
                continue;
            }
            let manipulated = base.replace_user(i, c)?;
            let Ok(after) = rule.pay(&manipulated) else { continue };
            let target = best_target(&before, &after);
            if target.is_empty() {
                continue;
            }
            let report = verify_bribery_pair(rule, base, &manipulated, &target)?;
            keep_best(&mut best, Found { report, manipulated, target });
        }
    }
    Ok(best)
}

/// Users to bribe in one trial: everyone for small instances, else a random sample.
fn bribe_targets(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    const MAX_BRIBED: usize = 8;
    let mut users: Vec<usize> = (0..n).collect();
    if n > MAX_BRIBED {
        users.shuffle(rng);
        users.truncate(MAX_BRIBED);
    }
    users
}

/// Random Sybil manipulation: a random fixed set `C*`, and each user's mass on the rest is
/// spread anew over the rest plus up to two new identities.
pub fn random_sybil_pair(base: &Instance, rng: &mut impl Rng) -> (Instance, Vec<usize>) {
    let m = base.n_artists();
    let cstar: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.4)).collect();
    let cstar = if cstar.len() == m { cstar[..m - 1].to_vec() } else { cstar };
    let extra = rng.random_range(0..=2);
    let group: Vec<usize> = (0..m + extra).filter(|j| !cstar.contains(j)).collect();
    let rows = base
        .rows()
        .map(|row| {
            let mut out = row.to_vec();
            out.resize(m + extra, 0.0);
            let mass: f64 = group.iter().filter(|&&j| j < m).map(|&j| row[j]).sum();
            if mass > 0.0 {
                let shares = random_row(rng, group.len(), 0.5);
                let total: f64 = shares.iter().sum();
                for (&j, s) in group.iter().zip(&shares) {
                    out[j] = mass * s / total;
                }
            }
            out
        })
        .collect();
    (Instance::new(rows, base.alpha()).expect("mass is preserved"), cstar)
}

/// Random strong-Sybil manipulation: column totals of `C*` and the total mass of the other
/// artists are kept, while who streams what is redrawn.
pub fn random_strong_sybil_pair(base: &Instance, rng: &mut impl Rng) -> Option<(Instance, Vec<usize>)> {
    let (n, m) = (base.n_users(), base.n_artists());
    let cstar: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.4)).collect();
    let cstar = if cstar.len() == m { cstar[..m - 1].to_vec() } else { cstar };
    let extra = rng.random_range(0..=2);
    let width = m + extra;
    let group: Vec<usize> = (0..width).filter(|j| !cstar.contains(j)).collect();
    let totals = base.artist_totals();
    let group_mass: f64 = group.iter().filter(|&&j| j < m).map(|&j| totals[j]).sum();
    for _ in 0..20 {
        let mut rows = vec![vec![0.0; width]; n];
        for &j in &cstar {
            let shares = random_row(rng, n, 0.5);
            let s: f64 = shares.iter().sum();
            for (row, w) in rows.iter_mut().zip(&shares) {
                row[j] = totals[j] * w / s;
            }
        }
        if group_mass > 0.0 {
            // every user gets at least one group cell so rows stay nonzero
            let cells: Vec<Vec<f64>> = (0..n).map(|_| random_row(rng, group.len(), 0.6)).collect();
            let s: f64 = cells.iter().flatten().sum();
            for (row, cell) in rows.iter_mut().zip(&cells) {
                for (&j, w) in group.iter().zip(cell) {
                    row[j] = group_mass * w / s;
                }
            }
        }
        if let Ok(inst) = Instance::new(rows, base.alpha()) {
            return Some((inst, cstar));
        }
    }
    None
}

/// Artist `jstar` gains engagement from some users while others lose some.
pub fn random_monotone_pair(base: &Instance, rng: &mut impl Rng) -> (Instance, usize) {
    let jstar = rng.random_range(0..base.n_artists());
    let rows = base
        .rows()
        .map(|row| {
            let mut out = row.to_vec();
            for (j, w) in out.iter_mut().enumerate() {
                if j == jstar {
                    if rng.random_bool(0.5) {
                        *w += random_weight(rng);
                    }
                } else if rng.random_bool(0.5) {
                    *w *= rng.random_range(0.0..1.0);
                }
            }
            if out.iter().all(|&w| w == 0.0) {
                row.to_vec()
            } else {
                out
            }
        })
        .collect();
    (Instance::new(rows, base.alpha()).expect("rows stay nonzero"), jstar)
}

/// A random transfer satisfying the Pigou-Dalton premises, if the instance admits one.
pub fn random_transfer(base: &Instance, rng: &mut impl Rng) -> Option<Transfer> {
    let (n, m) = (base.n_users(), base.n_artists());
    let mut options = Vec::new();
    for j in 0..m {
        for d in 0..n {
            for r in 0..n {
                if d != r && base.get(d, j) > base.get(r, j) {
                    options.push((d, r, j));
                }
            }
        }
    }
    let &(donor, recipient, artist) = options.choose(rng)?;
    let gap = base.get(donor, artist) - base.get(recipient, artist);
    let delta = gap / 2.0 * rng.random_range(0.01..=1.0);
    Some(Transfer { donor, recipient, artist, delta })
}

fn with_empty_artist(base: &Instance, rng: &mut impl Rng) -> Instance {
    let m = base.n_artists();
    let empty = rng.random_range(0..m);
    let rows = base
        .rows()
        .map(|row| {
            let mut out = row.to_vec();
            out[empty] = 0.0;
            if out.iter().all(|&w| w == 0.0) {
                out[(empty + 1) % m] = random_weight(rng);
            }
            out
        })
        .collect();
    Instance::new(rows, base.alpha()).expect("rows stay nonzero")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub trials: usize,
    pub seed: u64,
    pub sampler: InstanceSampler,
}

impl SearchConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        SearchConfig { trials, seed, sampler: InstanceSampler::default() }
    }

    pub fn with_sampler(mut self, sampler: InstanceSampler) -> Self {
        self.sampler = sampler;
        self
    }
}

/// Summary of a randomized suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub axiom: AxiomId,
    pub rule: String,
    pub trials: usize,
    /// Trials where a premise-satisfying manipulation was evaluated.
    pub evaluated: usize,
    /// Largest margin seen, witness or not.
    pub max_margin: f64,
    pub witness: Option<ViolationWitness>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// The trial's rng stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

struct Outcome {
    base: Instance,
    manipulated: Instance,
    target: Vec<usize>,
    report: GainReport,
}

fn single(base: Instance, manipulated: Instance, target: Vec<usize>, report: Result<GainReport>) -> Option<Outcome> {
    report.ok().map(|report| Outcome { base, manipulated, target, report })
}

fn run_trial(axiom: AxiomId, rule: &dyn PaymentRule, sampler: &InstanceSampler, rng: &mut ChaCha8Rng) -> Option<Outcome> {
    let base = sampler.sample(rng);
    match axiom {
        AxiomId::FraudProof => {
            let cands = candidate_profiles(&base, rng);
            let f = search_fraud(rule, &base, &cands).ok()??;
            Some(Outcome { base, manipulated: f.manipulated, target: f.target, report: f.report })
        }
        AxiomId::BriberyProof => {
            let users = bribe_targets(base.n_users(), rng);
            let cands = candidate_profiles(&base, rng);
            let f = search_bribery(rule, &base, &users, &cands).ok()??;
            Some(Outcome { base, manipulated: f.manipulated, target: f.target, report: f.report })
        }
        AxiomId::ClickFraudProof => {
            let users = bribe_targets(base.n_users(), rng);
            let cands = candidate_profiles(&base, rng);
            let mut best: Option<Outcome> = None;
            for &i in &users {
                for c in &cands {
                    let Ok(manipulated) = base.replace_user(i, c) else { continue };
                    let Ok(report) = verify_click_fraud(rule, &base, &manipulated) else { continue };
                    if best.as_ref().is_none_or(|b| report.margin > b.report.margin) {
                        best = Some(Outcome { base: base.clone(), manipulated, target: vec![], report });
                    }
                }
            }
            best
        }
        AxiomId::SybilProof => {
            let (manipulated, cstar) = random_sybil_pair(&base, rng);
            let target = (0..base.n_artists()).filter(|j| !cstar.contains(j)).collect();
            let report = verify_sybil_pair(rule, &base, &manipulated, &cstar);
            single(base, manipulated, target, report)
        }
        AxiomId::StrongSybilProof => {
            let (manipulated, cstar) = random_strong_sybil_pair(&base, rng)?;
            let target = (0..base.n_artists()).filter(|j| !cstar.contains(j)).collect();
            let report = verify_strong_sybil(rule, &base, &manipulated, &cstar);
            single(base, manipulated, target, report)
        }
        AxiomId::NoFreeRidership => {
            let inst = with_empty_artist(&base, rng);
            let report = verify_no_free_ridership(rule, &inst);
            single(inst.clone(), inst, vec![], report)
        }
        AxiomId::Anonymity => {
            let mut perm: Vec<usize> = (0..base.n_users()).collect();
            perm.shuffle(rng);
            let report = verify_anonymity(rule, &base, &perm);
            let manipulated = base.permute_users(&perm).ok()?;
            single(base, manipulated, vec![], report)
        }
        AxiomId::Neutrality => {
            let mut perm: Vec<usize> = (0..base.n_artists()).collect();
            perm.shuffle(rng);
            let report = verify_neutrality(rule, &base, &perm);
            let manipulated = base.permute_artists(&perm).ok()?;
            single(base, manipulated, vec![], report)
        }
        AxiomId::EngagementMonotone => {
            let (manipulated, jstar) = random_monotone_pair(&base, rng);
            let report = verify_engagement_monotone(rule, &base, &manipulated, jstar);
            single(base, manipulated, vec![jstar], report)
        }
        AxiomId::PigouDalton => {
            let t = random_transfer(&base, rng)?;
            let manipulated = t.apply(&base).ok()?;
            let report = verify_pigou_dalton(rule, &base, &t);
            single(base, manipulated, vec![t.artist], report)
        }
        AxiomId::UserAdditionMonotone => {
            let cands = candidate_profiles(&base, rng);
            let profile = cands.choose(rng)?.clone();
            let manipulated = base.add_user(&profile).ok()?;
            let report = verify_user_addition_monotone(rule, &base, &profile);
            single(base, manipulated, vec![], report)
        }
    }
}

fn encoding(w: &ViolationWitness) -> String {
    serde_json::to_string(w).unwrap_or_default()
}

/// Runs `config.trials` independent trials of `axiom` against `rule`.
///
/// The reported witness has the largest margin; ties go to the smallest serialized witness.
pub fn run_suite(axiom: AxiomId, rule: &dyn PaymentRule, config: &SearchConfig) -> Result<SuiteReport> {
    if config.trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let name = rule.name();
    let results: Vec<(u64, Outcome)> = (0..config.trials as u64)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = trial_rng(config.seed, t);
            run_trial(axiom, rule, &config.sampler, &mut rng).map(|o| (t, o))
        })
        .collect();
    let evaluated = results.len();
    let max_margin = results.iter().map(|(_, o)| o.report.margin).fold(f64::NEG_INFINITY, f64::max);
    let mut witness: Option<ViolationWitness> = None;
    for (t, o) in results {
        let source = format!("seed={} trial={t}", config.seed);
        let Some(w) = ViolationWitness::certify(axiom, &name, o.base, o.manipulated, o.target, o.report, source) else {
            continue;
        };
        let better = match &witness {
            None => true,
            Some(b) => w.margin > b.margin || (w.margin == b.margin && encoding(&w) < encoding(b)),
        };
        if better {
            witness = Some(w);
        }
    }
    Ok(SuiteReport { axiom, rule: name, trials: config.trials, evaluated, max_margin, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleId;

    #[test]
    fn finds_global_prop_fraud() {
        let base = Instance::new(vec![vec![1.0, 0.0]; 5], 1.0).unwrap();
        let mut rng = trial_rng(7, 0);
        let cands = candidate_profiles(&base, &mut rng);
        let f = search_fraud(&RuleId::GlobalProp, &base, &cands).unwrap().unwrap();
        // a point mass of n^2 on artist 1 gives 25/30 of the budget, (25/30)*6 - 0 = 5
        assert!(f.report.gain >= 3.0 - 1e-12);
        assert!(f.report.violated);
        assert_eq!(f.target, vec![1]);
    }

    #[test]
    fn user_prop_suites_are_clean() {
        let cfg = SearchConfig::new(300, 3);
        for axiom in [AxiomId::FraudProof, AxiomId::BriberyProof, AxiomId::SybilProof, AxiomId::ClickFraudProof] {
            let r = run_suite(axiom, &RuleId::UserProp, &cfg).unwrap();
            assert!(r.passed(), "{axiom}: {:?}", r.witness.map(|w| w.report_line()));
            assert!(r.evaluated > 0);
        }
    }

    #[test]
    fn strong_sybil_search_refutes_user_prop() {
        let cfg = SearchConfig::new(200, 11);
        let r = run_suite(AxiomId::StrongSybilProof, &RuleId::UserProp, &cfg).unwrap();
        assert!(!r.passed());
        let gp = run_suite(AxiomId::StrongSybilProof, &RuleId::GlobalProp, &cfg).unwrap();
        assert!(gp.passed(), "{:?}", gp.witness.map(|w| w.report_line()));
    }

    #[test]
    fn generators_satisfy_premises() {
        for t in 0..200 {
            let mut rng = trial_rng(5, t);
            let base = InstanceSampler::default().sample(&mut rng);
            let (s, cstar) = random_sybil_pair(&base, &mut rng);
            verify_sybil_pair(&RuleId::GlobalProp, &base, &s, &cstar).unwrap();
            if let Some((s, cstar)) = random_strong_sybil_pair(&base, &mut rng) {
                verify_strong_sybil(&RuleId::GlobalProp, &base, &s, &cstar).unwrap();
            }
            let (e, j) = random_monotone_pair(&base, &mut rng);
            verify_engagement_monotone(&RuleId::GlobalProp, &base, &e, j).unwrap();
            if let Some(tr) = random_transfer(&base, &mut rng) {
                tr.apply(&base).unwrap();
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = SearchConfig::new(100, 99);
        let a = run_suite(AxiomId::FraudProof, &RuleId::GlobalProp, &cfg).unwrap();
        let b = run_suite(AxiomId::FraudProof, &RuleId::GlobalProp, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.passed());
    }
}
