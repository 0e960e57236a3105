//! Potentially suspicious profit under pro-rata division.
//!
//! For an artist set `U` and a user set `V`, the profit is what `U` earns with `V` on the
//! platform, less what it would earn without them, less one subscription per user in `V`.
//! `PSP(U)` maximizes this over `V`. Removing every user leaves no platform to compare
//! against, so `V = N` is never considered.
//!
//! [`psp_exact`] evaluates the definition literally on sub-instances. [`psp_symmetric`] uses
//! the fact that the objective only depends on how many users are removed and how much total
//! and `U`-engagement they carry, which makes instances with many identical users tractable.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::rules::global_prop;

/// Objective values this close are treated as ties.
const TIE_TOL: f64 = 1e-12;
/// Largest user count [`psp_exact`] enumerates.
pub const EXACT_USER_CAP: usize = 22;
/// Limits for exact [`find_suspicious`].
pub const EXACT_FIND_USERS: usize = 18;
pub const EXACT_FIND_ARTISTS: usize = 12;
/// Largest number of class-count combinations the symmetric evaluator will try.
pub const SYMMETRIC_BUDGET: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PspResult {
    pub artist_set: Vec<usize>,
    pub user_set: Vec<usize>,
    pub profit: f64,
}

fn check_artists(instance: &Instance, artists: &[usize]) -> Result<()> {
    if artists.is_empty() {
        return Err(Error::Parameter("the artist set must be nonempty".into()));
    }
    if let Some(&j) = artists.iter().find(|&&j| j >= instance.n_artists()) {
        return Err(Error::Index { index: j, len: instance.n_artists() });
    }
    Ok(())
}

/// The profit of `artists` from `users`, evaluated by re-running pro-rata without them.
pub fn psp_value(instance: &Instance, artists: &[usize], users: &[usize]) -> Result<f64> {
    check_artists(instance, artists)?;
    let n = instance.n_users();
    if let Some(&i) = users.iter().find(|&&i| i >= n) {
        return Err(Error::Index { index: i, len: n });
    }
    let mut removed = vec![false; n];
    for &i in users {
        removed[i] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
    if kept.is_empty() {
        return Err(Error::Parameter("removing every user is excluded".into()));
    }
    let with = global_prop(instance).subset_payment(artists)?;
    let without = global_prop(&instance.select_users(&kept)?).subset_payment(artists)?;
    Ok(with - without - (n - kept.len()) as f64)
}

fn mask_users(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Picks the best `(profit, V)` with ties inside [`TIE_TOL`] going to the lexicographically
/// smallest `V`.
fn pick_best(cands: Vec<(f64, Vec<usize>)>) -> (f64, Vec<usize>) {
    let max = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    cands
        .into_iter()
        .filter(|c| c.0 >= max - TIE_TOL)
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("at least the empty set is a candidate")
}

/// Enumerates every `V` except the full user set.
pub fn psp_exact(instance: &Instance, artists: &[usize]) -> Result<PspResult> {
    check_artists(instance, artists)?;
    let n = instance.n_users();
    if n > EXACT_USER_CAP {
        return Err(Error::TooLarge(format!("{n} users exceed the exact cap of {EXACT_USER_CAP}")));
    }
    let full = (1u64 << n) - 1;
    let cands: Vec<(f64, Vec<usize>)> = (0..full)
        .into_par_iter()
        .map(|mask| {
            let v = mask_users(mask, n);
            let p = if v.is_empty() { 0.0 } else { psp_value(instance, artists, &v).expect("valid subset") };
            (p, v)
        })
        .collect();
    let (profit, user_set) = pick_best(cands);
    Ok(PspResult { artist_set: artists.to_vec(), user_set, profit })
}

/// Aggregate form of the objective.
#[derive(Debug, Clone, Copy)]
struct Aggregates {
    n: f64,
    alpha: f64,
    /// engagement with `U`
    a: f64,
    /// total engagement
    s: f64,
}

impl Aggregates {
    fn of(instance: &Instance, artists: &[usize]) -> (Self, Vec<f64>, Vec<f64>) {
        Self::with_totals(instance, artists, instance.user_totals())
    }

    fn with_totals(instance: &Instance, artists: &[usize], s_i: Vec<f64>) -> (Self, Vec<f64>, Vec<f64>) {
        let a_i: Vec<f64> = instance.rows().map(|r| artists.iter().map(|&j| r[j]).sum()).collect();
        let agg = Aggregates {
            n: instance.n_users() as f64,
            alpha: instance.alpha(),
            a: a_i.iter().sum(),
            s: s_i.iter().sum(),
        };
        (agg, a_i, s_i)
    }

    /// Profit from removing `r` users carrying `a_v` engagement with `U` and `s_v` in total.
    fn profit(&self, r: f64, a_v: f64, s_v: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let with = self.alpha * self.n * self.a / self.s;
        let without = self.alpha * (self.n - r) * (self.a - a_v) / (self.s - s_v);
        with - without - r
    }
}

/// Removes one user at a time while that raises the profit.
pub fn psp_greedy(instance: &Instance, artists: &[usize]) -> Result<PspResult> {
    check_artists(instance, artists)?;
    let n = instance.n_users();
    let (agg, a_i, s_i) = Aggregates::of(instance, artists);
    let mut removed = vec![false; n];
    let (mut r, mut a_v, mut s_v, mut current) = (0usize, 0.0, 0.0, 0.0);
    while r + 1 < n {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !removed[i]) {
            let p = agg.profit((r + 1) as f64, a_v + a_i[i], s_v + s_i[i]);
            if best.is_none_or(|(_, b)| p > b + TIE_TOL) {
                best = Some((i, p));
            }
        }
        match best {
            Some((i, p)) if p > current + TIE_TOL => {
                removed[i] = true;
                r += 1;
                a_v += a_i[i];
                s_v += s_i[i];
                current = p;
            }
            _ => break,
        }
    }
    let user_set: Vec<usize> = (0..n).filter(|&i| removed[i]).collect();
    Ok(PspResult { artist_set: artists.to_vec(), user_set, profit: current })
}

/// Users with identical `(a_i, s_i)` in first-appearance order.
fn user_classes(a_i: &[f64], s_i: &[f64]) -> Vec<(f64, f64, Vec<usize>)> {
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut classes: Vec<(f64, f64, Vec<usize>)> = Vec::new();
    for (i, (&a, &s)) in a_i.iter().zip(s_i).enumerate() {
        let k = *index.entry((a.to_bits(), s.to_bits())).or_insert_with(|| {
            classes.push((a, s, Vec::new()));
            classes.len() - 1
        });
        classes[k].2.push(i);
    }
    classes
}

/// Integer candidates for the count removed from one class, all others fixed.
///
/// With `r0, a0, s0` removed elsewhere and `k` more users of engagement `(a, s)`, the profit
/// is a rational function of `k` whose derivative vanishes where a quadratic does, so the
/// integer maximum sits at an endpoint or next to a real root.
fn class_candidates(agg: &Aggregates, r0: f64, a0: f64, s0: f64, a: f64, s: f64, count: usize) -> Vec<usize> {
    let big_n = agg.n - r0;
    let big_a = agg.a - a0;
    let big_s = agg.s - s0;
    let q2 = s * s - agg.alpha * a * s;
    let q1 = 2.0 * agg.alpha * a * big_s - 2.0 * big_s * s;
    let q0 = agg.alpha * (s * big_n * big_a - big_a * big_s - a * big_n * big_s) + big_s * big_s;
    let mut roots = Vec::new();
    if q2.abs() > 1e-300 {
        let disc = q1 * q1 - 4.0 * q2 * q0;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push((-q1 + sq) / (2.0 * q2));
            roots.push((-q1 - sq) / (2.0 * q2));
        }
    } else if q1.abs() > 1e-300 {
        roots.push(-q0 / q1);
    }
    let mut out = vec![0, count];
    for x in roots {
        if x.is_finite() && x > -1.0 && x < count as f64 + 1.0 {
            let f = x.floor().max(0.0) as usize;
            for c in [f.saturating_sub(1), f, f + 1, f + 2] {
                if c <= count {
                    out.push(c);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact `PSP(U)` through user classes; agrees with [`psp_exact`] but scales with the
/// number of distinct users rather than the number of users.
pub fn psp_symmetric(instance: &Instance, artists: &[usize]) -> Result<PspResult> {
    psp_symmetric_with(instance, &instance.user_totals(), artists)
}

fn psp_symmetric_with(instance: &Instance, totals: &[f64], artists: &[usize]) -> Result<PspResult> {
    check_artists(instance, artists)?;
    let n = instance.n_users();
    let (agg, a_i, s_i) = Aggregates::with_totals(instance, artists, totals.to_vec());
    let mut classes = user_classes(&a_i, &s_i);
    // the largest class is optimized in closed form
    let big = (0..classes.len()).max_by_key(|&k| (classes[k].2.len(), std::cmp::Reverse(k))).expect("n >= 1");
    let last = classes.len() - 1;
    classes.swap(big, last);
    let (ba, bs, ref big_members) = classes[last];
    let big_count = big_members.len();
    let small = &classes[..last];
    let combos: u128 = small.iter().map(|c| c.2.len() as u128 + 1).product();
    if combos > SYMMETRIC_BUDGET {
        return Err(Error::TooLarge(format!("{combos} class combinations exceed the budget")));
    }

    let mut counts = vec![0usize; small.len()];
    let mut cands: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut best = 0.0_f64;
    loop {
        let r0: usize = counts.iter().sum();
        let a0: f64 = small.iter().zip(&counts).map(|(c, &k)| c.0 * k as f64).sum();
        let s0: f64 = small.iter().zip(&counts).map(|(c, &k)| c.1 * k as f64).sum();
        for k in class_candidates(&agg, r0 as f64, a0, s0, ba, bs, big_count) {
            let r = r0 + k;
            if r == n {
                continue;
            }
            let p = agg.profit(r as f64, a0 + ba * k as f64, s0 + bs * k as f64);
            if p >= best - TIE_TOL {
                best = best.max(p);
                let mut v: Vec<usize> = small.iter().zip(&counts).flat_map(|(c, &k)| c.2[..k].iter().copied()).collect();
                v.extend_from_slice(&big_members[..k]);
                v.sort_unstable();
                cands.push((p, v));
            }
        }
        // odometer over the small classes
        let mut pos = 0;
        while pos < counts.len() {
            if counts[pos] < small[pos].2.len() {
                counts[pos] += 1;
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
        if pos == counts.len() {
            break;
        }
    }
    cands.push((0.0, Vec::new()));
    let (profit, user_set) = pick_best(cands);
    Ok(PspResult { artist_set: artists.to_vec(), user_set, profit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// Literal enumeration of artist and user sets.
    Exact,
    Greedy,
    /// Exact, enumerating artist and user sets up to interchangeable members.
    Symmetric,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Exact => "exact",
            SearchMode::Greedy => "greedy",
            SearchMode::Symmetric => "symmetric",
        })
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(SearchMode::Exact),
            "greedy" => Ok(SearchMode::Greedy),
            "symmetric" => Ok(SearchMode::Symmetric),
            _ => Err(Error::Parameter(format!("unknown mode '{s}', expected exact, greedy or symmetric"))),
        }
    }
}

fn subsets_up_to(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for j in start..m {
            cur.push(j);
            out.push(cur.clone());
            if cur.len() < k {
                rec(j + 1, m, k, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(0, m, k, &mut Vec::new(), &mut out);
    }
    out
}

fn pick_best_result(results: Vec<PspResult>) -> PspResult {
    let max = results.iter().map(|r| r.profit).fold(f64::NEG_INFINITY, f64::max);
    results
        .into_iter()
        .filter(|r| r.profit >= max - TIE_TOL)
        .min_by(|a, b| a.artist_set.cmp(&b.artist_set).then_with(|| a.user_set.cmp(&b.user_set)))
        .expect("nonempty")
}

/// Artists that can be swapped without changing the instance up to relabeling users.
///
/// Two artists are interchangeable when their columns are identical, or when every listener
/// of each listens to nobody else and the multisets of their weights agree.
pub fn artist_classes(instance: &Instance) -> Vec<Vec<usize>> {
    let (n, m) = (instance.n_users(), instance.n_artists());
    let support: Vec<usize> = instance.rows().map(|r| r.iter().filter(|&&w| w > 0.0).count()).collect();
    let mut index: HashMap<(bool, Vec<u64>), usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for j in 0..m {
        let column: Vec<f64> = (0..n).map(|i| instance.get(i, j)).collect();
        let private = column.iter().zip(&support).all(|(&w, &s)| w == 0.0 || s == 1);
        let key = if private {
            let mut vals: Vec<u64> = column.iter().filter(|&&w| w > 0.0).map(|w| w.to_bits()).collect();
            vals.sort_unstable();
            (true, vals)
        } else {
            (false, column.iter().map(|w| w.to_bits()).collect())
        };
        let k = *index.entry(key).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[k].push(j);
    }
    classes
}

/// Artist sets of size `1..=k`, one per orbit under [`artist_classes`].
fn symmetric_artist_sets(instance: &Instance, k: usize) -> Vec<Vec<usize>> {
    let classes = artist_classes(instance);
    let mut out = Vec::new();
    let mut counts = vec![0usize; classes.len()];
    loop {
        let total: usize = counts.iter().sum();
        if (1..=k).contains(&total) {
            let mut u: Vec<usize> = classes.iter().zip(&counts).flat_map(|(c, &r)| c[..r].iter().copied()).collect();
            u.sort_unstable();
            out.push(u);
        }
        let mut pos = 0;
        while pos < counts.len() {
            if counts[pos] < classes[pos].len().min(k) && counts.iter().sum::<usize>() < k {
                counts[pos] += 1;
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
        if pos == counts.len() {
            break;
        }
    }
    out
}

/// The artist set of size at most `k` with the largest `PSP`.
pub fn find_suspicious(instance: &Instance, k: usize, mode: SearchMode) -> Result<PspResult> {
    let (n, m) = (instance.n_users(), instance.n_artists());
    if k > m {
        return Err(Error::Parameter(format!("k = {k} exceeds the {m} artists")));
    }
    if k == 0 {
        return Ok(PspResult { artist_set: vec![], user_set: vec![], profit: 0.0 });
    }
    match mode {
        SearchMode::Exact => {
            if n > EXACT_FIND_USERS || m > EXACT_FIND_ARTISTS {
                return Err(Error::TooLarge(format!(
                    "exact search needs at most {EXACT_FIND_USERS} users and {EXACT_FIND_ARTISTS} artists, got {n} and {m}"
                )));
            }
            let results = subsets_up_to(m, k)
                .into_par_iter()
                .map(|u| psp_exact(instance, &u))
                .collect::<Result<Vec<_>>>()?;
            Ok(pick_best_result(results))
        }
        SearchMode::Symmetric => {
            let totals = instance.user_totals();
            let results = symmetric_artist_sets(instance, k)
                .into_par_iter()
                .map(|u| psp_symmetric_with(instance, &totals, &u))
                .collect::<Result<Vec<_>>>()?;
            Ok(pick_best_result(results))
        }
        SearchMode::Greedy => {
            let mut current: Vec<usize> = Vec::new();
            let mut best: Option<PspResult> = None;
            for _ in 0..k {
                let step = (0..m)
                    .filter(|j| !current.contains(j))
                    .map(|j| {
                        let mut u = current.clone();
                        u.push(j);
                        u.sort_unstable();
                        psp_greedy(instance, &u)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let chosen = pick_best_result(step);
                current = chosen.artist_set.clone();
                if best.as_ref().is_none_or(|b| chosen.profit > b.profit + TIE_TOL) {
                    best = Some(chosen);
                }
            }
            Ok(best.expect("k >= 1"))
        }
    }
}

/// A bipartite graph with left vertices `0..left_count` and right vertices `0..right_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    pub left_count: usize,
    pub right_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(left_count: usize, right_count: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if left_count == 0 || right_count == 0 {
            return Err(Error::Parameter("both sides need at least one vertex".into()));
        }
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= left_count || v >= right_count) {
            return Err(Error::Parameter(format!("edge ({u}, {v}) is out of range")));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("duplicate edge".into()));
        }
        Ok(BipartiteGraph { left_count, right_count, edges })
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.0 == u).map(|e| e.1).collect()
    }

    pub fn max_left_degree(&self) -> usize {
        (0..self.left_count).map(|u| self.neighbors(u).len()).max().unwrap_or(0)
    }

    /// Size of the neighborhood of a set of left vertices.
    pub fn neighborhood_size(&self, left: &[usize]) -> usize {
        let mut hit = vec![false; self.right_count];
        for &(u, v) in &self.edges {
            if left.contains(&u) {
                hit[v] = true;
            }
        }
        hit.iter().filter(|&&h| h).count()
    }

    /// Every graph with the given side sizes.
    pub fn all(left_count: usize, right_count: usize) -> impl Iterator<Item = BipartiteGraph> {
        let cells: Vec<(usize, usize)> =
            (0..left_count).flat_map(|u| (0..right_count).map(move |v| (u, v))).collect();
        (0u64..1 << cells.len()).map(move |mask| BipartiteGraph {
            left_count,
            right_count,
            edges: cells.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect(),
        })
    }
}

/// Output of [`ssbve_reduction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub instance: Instance,
    /// Maximum artist-set size.
    pub k: usize,
    /// The graph has a small expanding set iff some artist set reaches this profit.
    pub threshold: f64,
    pub t: usize,
    pub epsilon: f64,
    pub d: usize,
}

impl Reduction {
    /// Whether a profit meets the threshold, with `1e-9` slack.
    pub fn meets(&self, profit: f64) -> bool {
        profit >= self.threshold - 1e-9
    }
}

/// Encodes a small-set vertex expansion question as a suspicious-artist question.
///
/// Users `0..t` are dummies streaming `alpha * d` from their own dummy artist. User `t + u`
/// streams each right neighbor of `u` once and pads the last artist so every such user
/// streams `d + 1` in total.
pub fn ssbve_reduction(graph: &BipartiteGraph, ell: usize, delta: usize, alpha: f64) -> Result<Reduction> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    if ell > graph.left_count || delta > graph.right_count {
        return Err(Error::Parameter(format!(
            "need ell <= {} and delta <= {}, got ell = {ell}, delta = {delta}",
            graph.left_count, graph.right_count
        )));
    }
    let d = graph.max_left_degree();
    if d == 0 {
        return Err(Error::Parameter("the graph has no edges, so the maximum left degree is 0".into()));
    }
    let (lu, lv) = (graph.left_count, graph.right_count);
    let (df, uf) = (d as f64, lu as f64);
    let epsilon = 0.5 / (df * uf * (df * (delta as f64 + 1.0) + 1.0));
    let t = ((df + 1.0) * uf / (alpha * df * epsilon)).ceil() as usize;
    let m = t + lv + 1;
    let mut weights = vec![0.0; (t + lu) * m];
    for i in 0..t {
        weights[i * m + i] = alpha * df;
    }
    for u in 0..lu {
        let row = (t + u) * m;
        let nb = graph.neighbors(u);
        for &v in &nb {
            weights[row + t + v] = 1.0;
        }
        weights[row + m - 1] = (d + 1 - nb.len()) as f64;
    }
    let instance = Instance::from_flat(t + lu, m, weights, alpha)?;
    Ok(Reduction { instance, k: delta + 1, threshold: (ell as f64 - 1.0) / df, t, epsilon, d })
}

/// A left set of size at least `ell` with at most `delta` neighbors, by enumeration.
pub fn ssbve_brute_force(graph: &BipartiteGraph, ell: usize, delta: usize) -> Option<Vec<usize>> {
    (0u64..1 << graph.left_count)
        .map(|mask| mask_users(mask, graph.left_count))
        .filter(|s| s.len() >= ell)
        .find(|s| graph.neighborhood_size(s) <= delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fraud_fixture() -> Instance {
        let mut rows = vec![vec![1.0, 0.0]; 5];
        rows.push(vec![0.0, 5.0]);
        Instance::new(rows, 1.0).unwrap()
    }

    #[test]
    fn exact_on_fraud_fixture() {
        let r = psp_exact(&fraud_fixture(), &[1]).unwrap();
        assert!((r.profit - 2.0).abs() < 1e-12);
        assert_eq!(r.user_set, vec![5]);
        assert!((psp_value(&fraud_fixture(), &[1], &[5]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_unstreamed_sets() {
        let i = Instance::new(vec![vec![1.0, 0.0, 0.0], vec![2.0, 1.0, 0.0]], 0.5).unwrap();
        let r = psp_exact(&i, &[2]).unwrap();
        assert_eq!((r.profit, r.user_set.len()), (0.0, 0));
        let all = psp_exact(&i, &[0, 1, 2]).unwrap();
        assert_eq!((all.profit, all.user_set.len()), (0.0, 0));
    }

    #[test]
    fn greedy_and_symmetric_agree_on_fixture() {
        let g = psp_greedy(&fraud_fixture(), &[1]).unwrap();
        assert!((g.profit - 2.0).abs() < 1e-12 && g.user_set == vec![5]);
        let s = psp_symmetric(&fraud_fixture(), &[1]).unwrap();
        assert!((s.profit - 2.0).abs() < 1e-12 && s.user_set == vec![5]);
        let identical = Instance::new(vec![vec![1.0, 2.0]; 4], 0.8).unwrap();
        assert_eq!(psp_greedy(&identical, &[0]).unwrap().profit, 0.0);
        assert_eq!(psp_exact(&identical, &[0]).unwrap().profit, 0.0);
    }

    #[test]
    fn find_suspicious_modes() {
        for mode in [SearchMode::Exact, SearchMode::Greedy, SearchMode::Symmetric] {
            let r = find_suspicious(&fraud_fixture(), 1, mode).unwrap();
            assert_eq!(r.artist_set, vec![1], "{mode}");
            assert!((r.profit - 2.0).abs() < 1e-9);
        }
        let r = find_suspicious(&fraud_fixture(), 0, SearchMode::Exact).unwrap();
        assert!(r.artist_set.is_empty() && r.profit == 0.0);
    }

    #[test]
    fn symmetric_matches_exact_on_small_instances() {
        use crate::axioms::search::{trial_rng, InstanceSampler};
        let sampler = InstanceSampler { users: 1..=9, artists: 1..=4, alphas: vec![0.3, 0.7, 1.0], zero_prob: 0.5 };
        for t in 0..150 {
            let mut rng = trial_rng(17, t);
            let mut inst = sampler.sample(&mut rng);
            if t % 3 == 0 {
                // duplicate rows so classes have several members
                let mut rows = inst.to_rows();
                rows.extend(rows.clone());
                inst = Instance::new(rows, inst.alpha()).unwrap();
            }
            for j in 0..inst.n_artists() {
                let e = psp_exact(&inst, &[j]).unwrap();
                let s = psp_symmetric(&inst, &[j]).unwrap();
                assert!((e.profit - s.profit).abs() < 1e-9, "trial {t} artist {j}: {e:?} vs {s:?}");
            }
        }
    }

    #[test]
    fn artist_classes_of_reduction() {
        let g = BipartiteGraph::new(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let red = ssbve_reduction(&g, 1, 1, 0.5).unwrap();
        let classes = artist_classes(&red.instance);
        assert_eq!(classes[0].len(), red.t);
    }

    #[test]
    fn reduction_parameters() {
        let g = BipartiteGraph::new(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let red = ssbve_reduction(&g, 1, 1, 0.5).unwrap();
        assert_eq!(red.d, 1);
        assert_eq!(red.k, 2);
        assert_eq!(red.threshold, 0.0);
        assert!(red.epsilon < 1.0 / (2.0 * 3.0));
        assert_eq!(red.instance.n_users(), red.t + 2);
        assert_eq!(red.instance.n_artists(), red.t + 3);
        for row in red.instance.rows().skip(red.t) {
            assert_eq!(row.iter().sum::<f64>(), 2.0);
        }
        let r = find_suspicious(&red.instance, red.k, SearchMode::Symmetric).unwrap();
        assert!(red.meets(r.profit));
        assert!(ssbve_brute_force(&g, 1, 1).is_some());

        let empty = BipartiteGraph::new(2, 2, vec![]).unwrap();
        assert!(matches!(ssbve_reduction(&empty, 1, 1, 0.5), Err(Error::Parameter(_))));
        assert!(matches!(ssbve_reduction(&g, 3, 1, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn complete_graph_is_a_no_instance() {
        let g = BipartiteGraph::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert!(ssbve_brute_force(&g, 2, 1).is_none());
        let red = ssbve_reduction(&g, 2, 1, 0.5).unwrap();
        let r = find_suspicious(&red.instance, red.k, SearchMode::Symmetric).unwrap();
        assert!(!red.meets(r.profit), "{r:?} threshold {}", red.threshold);
    }
}
