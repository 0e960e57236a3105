//! Synthetic listening data and the revenue-share sweep.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{max_envy_or_inf, topk_bottomk_relative_pps};
use crate::model::Instance;
use crate::rules::RuleId;

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_artists: usize,
    /// Each user streams a uniform number of distinct artists from this range.
    pub artist_count_range: (usize, usize),
    /// Mean of the Poisson stream count per chosen artist.
    pub stream_lambda: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Desk scale: 1,000 users, 100 artists, 1 to 10 artists per user.
    fn default() -> Self {
        SynthConfig { n_users: 1000, n_artists: 100, artist_count_range: (1, 10), stream_lambda: 1.0, seed: 0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.artist_count_range;
        if self.n_users == 0 || self.n_artists == 0 {
            return Err(Error::Parameter("need at least one user and one artist".into()));
        }
        if lo < 1 || lo > hi || hi > self.n_artists {
            return Err(Error::Parameter(format!(
                "artist count range [{lo}, {hi}] must lie within [1, {}]",
                self.n_artists
            )));
        }
        if !(self.stream_lambda > 0.0 && self.stream_lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda must be positive, got {}", self.stream_lambda)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SynthConfig { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub instance: Instance,
    /// Rows redrawn because every sampled count was zero.
    pub resamples: usize,
}

/// Draws an instance with `alpha = 1`. Rows whose counts are all zero are redrawn whole.
pub fn gen_synthetic(config: &SynthConfig) -> Result<Synthetic> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let poisson = Poisson::new(config.stream_lambda).map_err(|e| Error::Parameter(e.to_string()))?;
    let (lo, hi) = config.artist_count_range;
    let m = config.n_artists;
    let mut weights = vec![0.0; config.n_users * m];
    let mut resamples = 0;
    for row in weights.chunks_mut(m) {
        loop {
            let count = rng.random_range(lo..=hi);
            let artists = sample(&mut rng, m, count);
            let mut total = 0.0;
            for j in artists.iter() {
                let w: f64 = poisson.sample(&mut rng);
                row[j] = w;
                total += w;
            }
            if total > 0.0 {
                break;
            }
            row.fill(0.0);
            resamples += 1;
        }
    }
    Ok(Synthetic { instance: Instance::from_flat(config.n_users, m, weights, 1.0)?, resamples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub rule: String,
    pub alpha: f64,
    pub seed: u64,
    pub k: usize,
    pub top_mean: f64,
    pub bottom_mean: f64,
    pub max_envy: f64,
    pub runtime_ms: f64,
}

fn measure(rule: RuleId, instance: &Instance, k: usize, seed: u64) -> ExperimentRow {
    let start = Instant::now();
    let (top_mean, bottom_mean, max_envy) = match topk_bottomk_relative_pps(&rule, instance, k) {
        Ok((top, bottom)) => (top, bottom, max_envy_or_inf(&rule, instance).unwrap_or(f64::INFINITY)),
        Err(_) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
    };
    ExperimentRow {
        rule: rule.to_string(),
        alpha: instance.alpha(),
        seed,
        k,
        top_mean,
        bottom_mean,
        max_envy,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Whether the rule's relative pay-per-stream is the same at every revenue share.
fn alpha_invariant(rule: RuleId) -> bool {
    rule != RuleId::ScaledUserProp
}

/// One row per `(rule, alpha)`. Rules that scale linearly with `alpha` are evaluated once.
pub fn alpha_sweep(instance: &Instance, rules: &[RuleId], alphas: &[f64], k: usize, seed: u64) -> Result<Vec<ExperimentRow>> {
    if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::BadAlpha(a));
    }
    let mut rows = Vec::with_capacity(rules.len() * alphas.len());
    for &rule in rules {
        if alpha_invariant(rule) {
            let Some(&first) = alphas.first() else { continue };
            let once = measure(rule, &instance.with_alpha(first)?, k, seed);
            for &a in alphas {
                rows.push(ExperimentRow { alpha: a, ..once.clone() });
            }
        } else {
            for &a in alphas {
                rows.push(measure(rule, &instance.with_alpha(a)?, k, seed));
            }
        }
    }
    Ok(rows)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

/// Median and quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Spread { median: quantile(&v, 0.5), q1: quantile(&v, 0.25), q3: quantile(&v, 0.75) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub rule: String,
    pub alpha: f64,
    pub k: usize,
    pub seeds: usize,
    pub top_mean: Spread,
    pub bottom_mean: Spread,
    pub max_envy: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    /// Per-seed rows ordered by seed, then rule, then alpha.
    pub rows: Vec<ExperimentRow>,
    pub summary: Vec<AggregateRow>,
    pub resamples: usize,
}

/// Runs [`alpha_sweep`] on `n_seeds` generated instances with seeds `config.seed + s`.
pub fn replicate(config: &SynthConfig, rules: &[RuleId], alphas: &[f64], k: usize, n_seeds: usize) -> Result<Replication> {
    if n_seeds == 0 {
        return Err(Error::Parameter("need at least one seed".into()));
    }
    let per_seed = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let seed = config.seed.wrapping_add(s);
            let synth = gen_synthetic(&config.with_seed(seed))?;
            Ok((alpha_sweep(&synth.instance, rules, alphas, k, seed)?, synth.resamples))
        })
        .collect::<Result<Vec<_>>>()?;
    let resamples = per_seed.iter().map(|p| p.1).sum();
    let rows: Vec<ExperimentRow> = per_seed.into_iter().flat_map(|p| p.0).collect();
    let mut summary = Vec::new();
    for &rule in rules {
        let name = rule.to_string();
        for &a in alphas {
            let cell: Vec<&ExperimentRow> = rows.iter().filter(|r| r.rule == name && r.alpha == a).collect();
            let col = |f: fn(&ExperimentRow) -> f64| Spread::of(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            summary.push(AggregateRow {
                rule: name.clone(),
                alpha: a,
                k,
                seeds: cell.len(),
                top_mean: col(|r| r.top_mean),
                bottom_mean: col(|r| r.bottom_mean),
                max_envy: col(|r| r.max_envy),
            });
        }
    }
    Ok(Replication { rows, summary, resamples })
}

pub const ROW_HEADER: [&str; 8] = ["rule", "alpha", "seed", "k", "top_mean", "bottom_mean", "max_envy", "runtime_ms"];

impl ExperimentRow {
    pub fn record(&self) -> Vec<String> {
        use crate::io::format_g12 as g;
        vec![
            self.rule.clone(),
            g(self.alpha),
            self.seed.to_string(),
            self.k.to_string(),
            g(self.top_mean),
            g(self.bottom_mean),
            g(self.max_envy),
            g(self.runtime_ms),
        ]
    }
}
