//! Named counterexample instances with their expected verdicts.
//!
//! Every fixture records the construction it encodes and, where it has one, the closed
//! form of the gain so tests can compare the verifier output with hand arithmetic.

use serde::{Deserialize, Serialize};

use super::pathological::{SurrogateRule, ThresholdRule};
use super::{
    best_target, verify_bribery_pair, verify_fraud_pair, verify_pigou_dalton, verify_strong_sybil,
    verify_sybil_pair, verify_user_addition_monotone, AxiomId, GainReport, SybilSplitSpec, Transfer,
    ViolationWitness,
};
use crate::error::Result;
use crate::model::{Instance, PaymentVector, UserProfile};
use crate::portioning::PortioningId;
use crate::rules::{PaymentRule, RuleId};

/// The rule a fixture targets, including the two pathological rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FixtureRule {
    Rule(RuleId),
    Threshold,
    Surrogate { epsilon: f64 },
}

impl PaymentRule for FixtureRule {
    fn name(&self) -> String {
        match self {
            FixtureRule::Rule(r) => r.name(),
            FixtureRule::Threshold => ThresholdRule.name(),
            FixtureRule::Surrogate { epsilon } => SurrogateRule::new(*epsilon).name(),
        }
    }

    fn pay(&self, instance: &Instance) -> Result<PaymentVector> {
        match self {
            FixtureRule::Rule(r) => r.pay(instance),
            FixtureRule::Threshold => ThresholdRule.pay(instance),
            FixtureRule::Surrogate { epsilon } => SurrogateRule::new(*epsilon).pay(instance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FixtureCase {
    Fraud { base: Instance, manipulated: Instance, target: Vec<usize> },
    Bribery { base: Instance, manipulated: Instance, target: Vec<usize> },
    Sybil { base: Instance, manipulated: Instance, cstar: Vec<usize> },
    StrongSybil { base: Instance, manipulated: Instance, cstar: Vec<usize> },
    PigouDalton { base: Instance, transfer: Transfer },
    UserAddition { base: Instance, profile: UserProfile },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub rule: FixtureRule,
    pub axiom: AxiomId,
    pub case: FixtureCase,
    pub expect_violation: bool,
    /// Closed-form value of the reported gain.
    pub expected_gain: Option<f64>,
    pub construction: String,
}

impl Fixture {
    pub fn base(&self) -> &Instance {
        match &self.case {
            FixtureCase::Fraud { base, .. }
            | FixtureCase::Bribery { base, .. }
            | FixtureCase::Sybil { base, .. }
            | FixtureCase::StrongSybil { base, .. }
            | FixtureCase::PigouDalton { base, .. }
            | FixtureCase::UserAddition { base, .. } => base,
        }
    }

    pub fn manipulated(&self) -> Result<Instance> {
        match &self.case {
            FixtureCase::Fraud { manipulated, .. }
            | FixtureCase::Bribery { manipulated, .. }
            | FixtureCase::Sybil { manipulated, .. }
            | FixtureCase::StrongSybil { manipulated, .. } => Ok(manipulated.clone()),
            FixtureCase::PigouDalton { base, transfer } => transfer.apply(base),
            FixtureCase::UserAddition { base, profile } => base.add_user(profile),
        }
    }

    /// Runs the matching verifier.
    pub fn verify(&self) -> Result<GainReport> {
        let rule = &self.rule;
        match &self.case {
            FixtureCase::Fraud { base, manipulated, target } => verify_fraud_pair(rule, base, manipulated, target),
            FixtureCase::Bribery { base, manipulated, target } => verify_bribery_pair(rule, base, manipulated, target),
            FixtureCase::Sybil { base, manipulated, cstar } => verify_sybil_pair(rule, base, manipulated, cstar),
            FixtureCase::StrongSybil { base, manipulated, cstar } => verify_strong_sybil(rule, base, manipulated, cstar),
            FixtureCase::PigouDalton { base, transfer } => verify_pigou_dalton(rule, base, transfer),
            FixtureCase::UserAddition { base, profile } => verify_user_addition_monotone(rule, base, profile),
        }
    }

    fn target_set(&self) -> Result<Vec<usize>> {
        Ok(match &self.case {
            FixtureCase::Fraud { target, .. } | FixtureCase::Bribery { target, .. } => target.clone(),
            FixtureCase::Sybil { base, cstar, .. } | FixtureCase::StrongSybil { base, cstar, .. } => {
                (0..base.n_artists()).filter(|j| !cstar.contains(j)).collect()
            }
            FixtureCase::PigouDalton { transfer, .. } => vec![transfer.artist],
            FixtureCase::UserAddition { base, .. } => {
                let after = self.rule.pay(&self.manipulated()?)?;
                best_target(&after, &PaymentVector::new(self.rule.pay(base)?.payments.to_vec()))
            }
        })
    }

    /// The certified witness, if the verifier reports a violation.
    pub fn witness(&self) -> Result<Option<ViolationWitness>> {
        let report = self.verify()?;
        Ok(ViolationWitness::certify(
            self.axiom,
            &self.rule.name(),
            self.base().clone(),
            self.manipulated()?,
            self.target_set()?,
            report,
            format!("fixture:{}", self.name),
        ))
    }
}

fn inst(rows: Vec<Vec<f64>>, alpha: f64) -> Instance {
    Instance::new(rows, alpha).expect("fixture instances are valid")
}

fn repeat(row: &[f64], count: usize) -> Vec<Vec<f64>> {
    vec![row.to_vec(); count]
}

fn concat(mut a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    a.extend(b);
    a
}

struct Builder {
    out: Vec<Fixture>,
}

impl Builder {
    fn push(
        &mut self,
        name: &str,
        rule: FixtureRule,
        axiom: AxiomId,
        case: FixtureCase,
        expected_gain: Option<f64>,
        construction: &str,
    ) {
        self.out.push(Fixture {
            name: name.to_string(),
            rule,
            axiom,
            case,
            expect_violation: true,
            expected_gain,
            construction: construction.to_string(),
        });
    }

    fn fraud(&mut self, name: &str, rule: FixtureRule, base: Instance, fake: &[f64], target: Vec<usize>, gain: f64, text: &str) {
        let manipulated = base.add_user(&fake.to_vec().into()).expect("valid fake profile");
        self.push(name, rule, AxiomId::FraudProof, FixtureCase::Fraud { base, manipulated, target }, Some(gain), text);
    }

    #[allow(clippy::too_many_arguments)]
    fn bribery(
        &mut self,
        name: &str,
        rule: FixtureRule,
        base: Instance,
        user: usize,
        profile: &[f64],
        target: Vec<usize>,
        gain: f64,
        text: &str,
    ) {
        let manipulated = base.replace_user(user, &profile.to_vec().into()).expect("valid bribed profile");
        self.push(name, rule, AxiomId::BriberyProof, FixtureCase::Bribery { base, manipulated, target }, Some(gain), text);
    }

    fn sybil(&mut self, name: &str, rule: FixtureRule, base: Instance, manipulated: Instance, cstar: Vec<usize>, gain: Option<f64>, text: &str) {
        self.push(name, rule, AxiomId::SybilProof, FixtureCase::Sybil { base, manipulated, cstar }, gain, text);
    }
}

const PORTIONING_ALPHA: f64 = 0.5;

fn p(id: PortioningId) -> FixtureRule {
    FixtureRule::Rule(RuleId::Portioning(id))
}

/// Every named counterexample.
pub fn fixtures() -> Vec<Fixture> {
    let mut b = Builder { out: Vec::new() };
    main_rule_fixtures(&mut b);
    coordinatewise_fixtures(&mut b);
    welfare_fixtures(&mut b);
    markets_fixtures(&mut b);
    pathological_fixtures(&mut b);
    b.out
}

/// Looks up a fixture by name.
pub fn fixture(name: &str) -> Option<Fixture> {
    fixtures().into_iter().find(|f| f.name == name)
}

fn main_rule_fixtures(b: &mut Builder) {
    let gp = FixtureRule::Rule(RuleId::GlobalProp);
    let listeners = inst(repeat(&[1.0, 0.0], 5), 1.0);
    b.fraud(
        "globalprop-fraud",
        gp,
        listeners.clone(),
        &[0.0, 5.0],
        vec![1],
        3.0,
        "five users stream only artist 0; one fake user streams artist 1 five times",
    );
    b.bribery(
        "globalprop-bribery",
        gp,
        listeners.clone(),
        4,
        &[1.0, 5.0],
        vec![1],
        2.5,
        "five users stream only artist 0; the last one is bribed to also stream artist 1 five times",
    );
    b.push(
        "globalprop-user-addition",
        gp,
        AxiomId::UserAdditionMonotone,
        FixtureCase::UserAddition { base: listeners, profile: vec![0.0, 5.0].into() },
        Some(2.0),
        "a heavy user of artist 1 dilutes artist 0 from 5 to 3",
    );

    let a = PORTIONING_ALPHA;
    let one = inst(vec![vec![1.0, 1.0]], a);
    let split = SybilSplitSpec::even(&one, 1, 2).apply(&one).expect("valid split");
    b.sybil(
        "usereq-sybil",
        FixtureRule::Rule(RuleId::UserEq),
        one,
        split,
        vec![0],
        Some(a / 6.0),
        "one user streams two artists; the second splits into two identities",
    );

    b.push(
        "userprop-pigoudalton",
        FixtureRule::Rule(RuleId::UserProp),
        AxiomId::PigouDalton,
        FixtureCase::PigouDalton {
            base: inst(vec![vec![1.0, 2.0], vec![9.0, 0.0]], a),
            transfer: Transfer { donor: 0, recipient: 1, artist: 1, delta: 1.0 },
        },
        Some(2.0 * a / 3.0 - 3.0 * a / 5.0),
        "a light user moves one stream of artist 1 to a heavy user who never streamed it",
    );

    // n = ceil(1/alpha) + 1 users; the heavy last user donates half a stream to the first.
    let n = (1.0 / a).ceil() as usize + 1;
    let m_big = (n as f64 - 1.0) / (n as f64 * a - 1.0);
    let mut rows = vec![vec![0.5, 0.0]];
    rows.extend(repeat(&[1.0, 0.0], n - 2));
    rows.push(vec![(m_big + 1.0) / 2.0, m_big / 2.0]);
    b.push(
        "scaledup-pigoudalton",
        FixtureRule::Rule(RuleId::ScaledUserProp),
        AxiomId::PigouDalton,
        FixtureCase::PigouDalton {
            base: inst(rows, a),
            transfer: Transfer { donor: n - 1, recipient: 0, artist: 0, delta: 0.5 },
        },
        Some((m_big + 1.0) / (2.0 * m_big + 1.0) - 0.5),
        "light users are scaled down; a heavy user gives half a stream to the lightest user",
    );

    let sa = 0.8;
    let base = inst(vec![vec![1.0, 0.0], vec![0.0, 9.0]], sa);
    let moved = inst(vec![vec![0.0, 1.0], vec![1.0, 8.0]], sa);
    let cases = [
        ("userprop-strong-sybil", RuleId::UserProp, sa * 8.0 / 9.0),
        ("usereq-strong-sybil", RuleId::UserEq, sa / 2.0),
        ("scaledup-strong-sybil", RuleId::ScaledUserProp, 0.6 + 8.0 / 9.0 - 1.0),
    ];
    for (name, rule, gain) in cases {
        b.push(
            name,
            FixtureRule::Rule(rule),
            AxiomId::StrongSybilProof,
            FixtureCase::StrongSybil { base: base.clone(), manipulated: moved.clone(), cstar: vec![0] },
            Some(gain),
            "column totals kept while one stream of artist 0 moves from the light user to the heavy one",
        );
    }
}

fn coordinatewise_fixtures(b: &mut Builder) {
    let a = PORTIONING_ALPHA;
    let half = [0.5, 0.5];

    let n = (6.0 / a).ceil() as usize + 1;
    let nf = n as f64;
    b.fraud("max-fraud", p(PortioningId::Max), inst(repeat(&half, n), a), &[1.0, 0.0], vec![0], (nf + 4.0) * a / 6.0,
        "users split evenly; a fake user streams only artist 0");
    b.bribery("max-bribery", p(PortioningId::Max), inst(repeat(&half, n), a), n - 1, &[1.0, 0.0], vec![0], nf * a / 6.0,
        "users split evenly; one is bribed to stream only artist 0");

    let n = 2 * (1.0 / a).ceil() as usize;
    let nf = n as f64;
    for (id, tag) in [(PortioningId::Min, "min"), (PortioningId::Geo, "geo")] {
        b.fraud(&format!("{tag}-fraud"), p(id), inst(repeat(&half, n), a), &[1.0, 0.0], vec![0], (nf + 2.0) * a / 2.0,
            "users split evenly; a fake user zeroes artist 1's aggregate");
    }
    let n = (2.0 / a).floor() as usize + 1;
    let nf = n as f64;
    for (id, tag) in [(PortioningId::Min, "min"), (PortioningId::Geo, "geo")] {
        b.bribery(&format!("{tag}-bribery"), p(id), inst(repeat(&half, n), a), n - 1, &[1.0, 0.0], vec![0], nf * a / 2.0,
            "users split evenly; a bribed user zeroes artist 1's aggregate");
    }

    // n odd and at least 2 / alpha
    let mut n = (2.0 / a).ceil() as usize;
    if n % 2 == 0 {
        n += 1;
    }
    let k = (n - 1) / 2;
    let nf = n as f64;
    let med_base = inst(concat(repeat(&[1.0, 0.0], k), repeat(&[0.0, 1.0], k + 1)), a);
    b.fraud("med-fraud", p(PortioningId::Med), med_base.clone(), &[1.0, 0.0], vec![0], (nf + 1.0) * a / 2.0,
        "a one-vote minority for artist 0 becomes a tie after one fake user");
    b.bribery("med-bribery", p(PortioningId::Med), med_base, n - 1, &[1.0, 0.0], vec![0], nf * a,
        "a one-vote minority for artist 0 becomes a majority after one bribe");

    // Sybil counterexamples
    b.sybil(
        "max-sybil",
        p(PortioningId::Max),
        inst(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]], a),
        inst(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], a),
        vec![0],
        Some(2.0 * a - 1.5 * a),
        "artist 1 splits into two identities, each with one dedicated user",
    );
    let third = 1.0 / 3.0;
    let min_base = inst(vec![vec![third, 0.0, 2.0 * third], vec![third, 2.0 * third, 0.0]], a);
    let min_moved = inst(vec![vec![third, 0.0, 2.0 * third], vec![third, third, third]], a);
    b.sybil("min-sybil", p(PortioningId::Min), min_base.clone(), min_moved.clone(), vec![0], Some(a),
        "artists 1 and 2 rearrange the second user's engagement between them");
    b.sybil("geo-sybil", p(PortioningId::Geo), min_base, min_moved, vec![0], Some(a * (4.0 - 2.0 * 2f64.sqrt())),
        "artists 1 and 2 rearrange the second user's engagement between them");
    b.sybil(
        "med-sybil",
        p(PortioningId::Med),
        inst(vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0], vec![0.5, 0.0, 0.5]], a),
        inst(vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.25, 0.25], vec![0.5, 0.25, 0.25]], a),
        vec![0],
        Some(1.5 * a),
        "artists 1 and 2 spread each user's engagement across both of them",
    );
}

fn welfare_fixtures(b: &mut Builder) {
    let a = PORTIONING_ALPHA;
    let k = (1.0 / a).ceil() as usize;
    let n = 2 * k + 1;
    let nf = n as f64;
    let util_base = inst(concat(repeat(&[1.0, 0.0], k + 1), repeat(&[0.0, 1.0], k)), a);
    b.fraud("util-fraud", p(PortioningId::Util), util_base.clone(), &[0.0, 1.0], vec![1], (nf + 1.0) * a / 2.0,
        "a one-vote majority for artist 0 becomes a tie after one fake user");
    b.bribery("util-bribery", p(PortioningId::Util), util_base, 0, &[0.0, 1.0], vec![1], nf * a,
        "a one-vote majority for artist 0 flips after one bribe");

    let half = [0.5, 0.5];
    let n = (4.0 / a).ceil() as usize;
    let nf = n as f64;
    b.fraud("egal-fraud", p(PortioningId::Egal), inst(repeat(&half, n), a), &[1.0, 0.0], vec![0], (nf + 3.0) * a / 4.0,
        "users split evenly; a fake user for artist 0 pulls the minimax point to 3/4");
    let n = (4.0 / a).floor() as usize + 1;
    let nf = n as f64;
    b.bribery("egal-bribery", p(PortioningId::Egal), inst(repeat(&half, n), a), n - 1, &[1.0, 0.0], vec![0], nf * a / 4.0,
        "users split evenly; a bribed user for artist 0 pulls the minimax point to 3/4");

    b.sybil(
        "util-sybil",
        p(PortioningId::Util),
        inst(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], a),
        inst(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 0.5]], a),
        vec![0],
        Some(a),
        "artists 1 and 2 each split their dedicated user between them",
    );
    let third = 1.0 / 3.0;
    b.sybil(
        "egal-sybil",
        p(PortioningId::Egal),
        inst(vec![vec![third; 3], vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 0.5]], a),
        inst(vec![vec![third; 3], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], a),
        vec![0],
        Some(a / 2.0),
        "artists 1 and 2 concentrate their two shared users on one identity each",
    );
}

fn markets_fixtures(b: &mut Builder) {
    let a = PORTIONING_ALPHA;
    let rule = p(PortioningId::IndependentMarkets);
    let n = 4;
    let nf = n as f64;
    let mut first = vec![0.0; n + 1];
    first[0] = 1.0;
    let mut spread = vec![1.0 / nf; n + 1];
    spread[0] = 0.0;
    let unanimous = inst(repeat(&first, n), a);
    let others: Vec<usize> = (1..=n).collect();
    b.fraud("indmkt-fraud", rule, unanimous.clone(), &spread, others.clone(), (nf + 1.0) * a / 2.0,
        "unanimous users for artist 0; a fake user spreads over the other artists");
    b.bribery("indmkt-bribery", rule, unanimous, n - 1, &spread, others, nf * nf * a / (2.0 * nf - 1.0),
        "unanimous users for artist 0; one is bribed to spread over the other artists");

    let base = inst(concat(repeat(&[1.0, 0.0], n), vec![vec![0.0, 1.0]]), a);
    let split = SybilSplitSpec::even(&base, 1, n).apply(&base).expect("valid split");
    b.sybil("indmkt-sybil", rule, base, split, vec![0], Some((nf + 1.0) * a / 2.0 - a),
        "artist 1 with a single user splits into n identities");
}

fn pathological_fixtures(b: &mut Builder) {
    let alpha: f64 = 1.0;
    let n = (40.0 / alpha - 1.0).ceil() as usize;
    b.fraud(
        "threshold-fraud",
        FixtureRule::Threshold,
        inst(repeat(&[0.01, 0.99], n), alpha),
        &[0.01, 0.99],
        vec![0],
        2.0,
        "one more identical user doubles the head-count threshold",
    );
    let rows = concat(repeat(&[1.0, 0.0], 3), repeat(&[0.0, 1.0], 2));
    b.bribery(
        "surrogate-bribery",
        FixtureRule::Surrogate { epsilon: 0.25 },
        inst(rows, 0.5),
        2,
        &[0.0, 1.0],
        vec![1],
        10.0 / 8.0,
        "one bribe flips which artist more users engage with",
    );
}
