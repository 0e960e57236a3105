use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use revshare_core::axioms::fixtures::{fixtures, FixtureRule};
use revshare_core::axioms::search::{run_suite, InstanceSampler, SearchConfig};
use revshare_core::experiments::{replicate, SynthConfig, ROW_HEADER};
use revshare_core::io::{
    format_g12, ingest_triples, load_document, parse_triples, payments_csv, save_document, write_csv, IngestOptions,
    InstanceDocument,
};
use revshare_core::metrics::{max_envy_or_inf, pps, topk_bottomk_relative_pps};
use revshare_core::psp::{find_suspicious, psp_exact, psp_greedy, psp_symmetric, ssbve_reduction, BipartiteGraph, SearchMode};
use revshare_core::{AxiomId, Error, Instance, PaymentRule, RuleId};

const EXIT_VIOLATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "revshare", version, about = "Divide subscription revenue among artists and audit the rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print each artist's payment as CSV.
    Divide {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        instance: PathBuf,
        /// Overrides the document's revenue share.
        #[arg(long, env = "REVSHARE_ALPHA")]
        alpha: Option<f64>,
    },
    /// Pay-per-stream, maximum envy and top/bottom relative pay-per-stream.
    Pps {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, env = "REVSHARE_ALPHA")]
        alpha: Option<f64>,
        /// Also print the per-artist table.
        #[arg(long)]
        table: bool,
    },
    /// Look for a violation of an axiom using stored counterexamples or random trials.
    Check {
        #[arg(long)]
        axiom: String,
        /// A rule name, `threshold` or `surrogate`.
        #[arg(long)]
        rule: String,
        #[arg(long, conflicts_with = "random_trials")]
        fixtures: bool,
        #[arg(long)]
        random_trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Parameter of the surrogate rule.
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
    /// Potentially suspicious profit of the best artist set of size at most k.
    Psp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Evaluate this comma-separated artist set instead of searching.
        #[arg(long, value_delimiter = ',')]
        artists: Option<Vec<usize>>,
    },
    /// Write a synthetic instance.
    Gen {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        artists: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_artists: usize,
        #[arg(long)]
        max_artists: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, env = "REVSHARE_ALPHA", default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Relative pay-per-stream over many seeds and revenue shares, as CSV.
    Sweep {
        /// `key = value` file with users, artists, min_artists, max_artists, lambda, seed,
        /// alphas, k, seeds and rules; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        rules: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
        /// Per-(rule, alpha) medians and quartiles.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Encode a small-set expansion question as a suspicious-artist instance.
    ReduceSsbve {
        /// JSON with left_count, right_count and edges.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        delta: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate `user, artist, count` triples into an instance document.
    Ingest {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long, env = "REVSHARE_ALPHA", default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        top_artists: Option<usize>,
        #[arg(long)]
        min_user_total: Option<f64>,
        #[arg(long)]
        max_cells: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::SolverFailure(_) | Error::DegenerateAggregate | Error::DegenerateEnvy(_)) => EXIT_NUMERIC,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Divide { rule, instance, alpha } => {
            let rule: RuleId = rule.parse()?;
            let (doc, inst) = load(&instance, alpha)?;
            let p = rule.pay(&inst)?;
            out.write_all(payments_csv(&doc.artist_names(), &p.payments)?.as_bytes())?;
        }
        Command::Pps { rule, instance, k, alpha, table } => {
            let rule: RuleId = rule.parse()?;
            let (doc, inst) = load(&instance, alpha)?;
            let v = pps(&rule, &inst)?;
            let me = max_envy_or_inf(&rule, &inst)?;
            let k = k.min(v.defined_values().len());
            let (top, bottom) = topk_bottomk_relative_pps(&rule, &inst, k)?;
            writeln!(out, "rule={rule} alpha={} k={k} aggregation=mean-of-ratios", format_g12(inst.alpha()))?;
            writeln!(out, "max_envy={} top_mean={} bottom_mean={}", format_g12(me), format_g12(top), format_g12(bottom))?;
            if table {
                let names = doc.artist_names();
                let totals = inst.artist_totals();
                let rows: Vec<Vec<String>> = (0..inst.n_artists())
                    .map(|j| {
                        let p = v.get(j).map_or_else(String::new, format_g12);
                        vec![names[j].clone(), format_g12(totals[j]), p]
                    })
                    .collect();
                write_csv(&mut out, &["artist_id", "streams", "pps"], &rows)?;
            }
        }
        Command::Check { axiom, rule, fixtures: use_fixtures, random_trials, seed, epsilon } => {
            let axiom: AxiomId = axiom.parse()?;
            let rule = parse_fixture_rule(&rule, epsilon)?;
            return if use_fixtures {
                check_fixtures(&mut out, axiom, rule)
            } else {
                let trials = random_trials.ok_or_else(|| anyhow!("pass --fixtures or --random-trials"))?;
                check_random(&mut out, axiom, rule, trials, seed)
            };
        }
        Command::Psp { instance, k, mode, artists } => {
            let mode: SearchMode = mode.parse()?;
            let (_, inst) = load(&instance, None)?;
            let start = Instant::now();
            let r = match artists {
                Some(u) => match mode {
                    SearchMode::Exact => psp_exact(&inst, &u)?,
                    SearchMode::Greedy => psp_greedy(&inst, &u)?,
                    SearchMode::Symmetric => psp_symmetric(&inst, &u)?,
                },
                None => find_suspicious(&inst, k, mode)?,
            };
            writeln!(
                out,
                "artists={} users={} profit={} mode={mode} runtime_ms={} full_user_set=excluded",
                join(&r.artist_set),
                join(&r.user_set),
                format_g12(r.profit),
                format_g12(start.elapsed().as_secs_f64() * 1e3)
            )?;
        }
        Command::Gen { users, artists, seed, min_artists, max_artists, lambda, alpha, out: path } => {
            let cfg = SynthConfig {
                n_users: users,
                n_artists: artists,
                artist_count_range: (min_artists, max_artists.unwrap_or(artists.min(100))),
                stream_lambda: lambda,
                seed,
            };
            let synth = revshare_core::experiments::gen_synthetic(&cfg)?;
            let inst = synth.instance.with_alpha(alpha)?;
            let mut doc = InstanceDocument::from_instance(&inst, None, None);
            doc.metadata = Some(serde_json::json!({
                "generator": cfg,
                "zero_rows": "redrawn",
                "resamples": synth.resamples,
            }));
            save_document(&path, &doc)?;
            writeln!(out, "wrote {} users x {} artists to {}", users, artists, path.display())?;
        }
        Command::Sweep { config, alphas, k, seeds, rules, out: path, summary } => {
            sweep(&mut out, config.as_deref(), alphas, k, seeds, rules, &path, summary.as_deref())?;
        }
        Command::ReduceSsbve { graph, ell, delta, alpha, out: path } => {
            let text = fs::read_to_string(&graph).with_context(|| format!("reading {}", graph.display()))?;
            let g: BipartiteGraph = serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
            let g = BipartiteGraph::new(g.left_count, g.right_count, g.edges)?;
            let red = ssbve_reduction(&g, ell, delta, alpha)?;
            let mut doc = InstanceDocument::from_instance(&red.instance, None, None);
            doc.metadata = Some(serde_json::json!({
                "k": red.k, "threshold": red.threshold, "t": red.t, "epsilon": red.epsilon, "d": red.d,
                "ell": ell, "delta": delta,
            }));
            save_document(&path, &doc)?;
            writeln!(
                out,
                "users={} artists={} k={} threshold={} t={} epsilon={} d={}",
                red.instance.n_users(),
                red.instance.n_artists(),
                red.k,
                format_g12(red.threshold),
                red.t,
                format_g12(red.epsilon),
                red.d
            )?;
        }
        Command::Ingest { triples, alpha, top_artists, min_user_total, max_cells, out: path } => {
            let file = fs::File::open(&triples).with_context(|| format!("opening {}", triples.display()))?;
            let records = parse_triples(std::io::BufReader::new(file))?;
            let mut opts = IngestOptions::new(alpha);
            opts.top_artists = top_artists;
            opts.min_user_total = min_user_total;
            if let Some(c) = max_cells {
                opts.max_cells = c;
            }
            let ing = ingest_triples(records, &opts)?;
            let mut doc = ing.to_document();
            doc.metadata = Some(serde_json::json!({ "options": opts, "stats": ing.stats }));
            save_document(&path, &doc)?;
            writeln!(
                out,
                "users={} artists={} records={} merged_duplicates={} users_dropped={} artists_dropped={}",
                ing.instance.n_users(),
                ing.instance.n_artists(),
                ing.stats.records,
                ing.stats.merged_duplicates,
                ing.stats.users_dropped,
                ing.stats.artists_dropped
            )?;
        }
    }
    Ok(0)
}

fn join(v: &[usize]) -> String {
    format!("{{{}}}", v.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
}

fn load(path: &Path, alpha: Option<f64>) -> Result<(InstanceDocument, Instance)> {
    let doc = load_document(path).with_context(|| format!("loading {}", path.display()))?;
    let inst = doc.to_instance()?;
    let inst = match alpha {
        Some(a) => inst.with_alpha(a)?,
        None => inst,
    };
    Ok((doc, inst))
}

fn parse_fixture_rule(name: &str, epsilon: f64) -> Result<FixtureRule> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "threshold" => FixtureRule::Threshold,
        "surrogate" => FixtureRule::Surrogate { epsilon },
        _ => FixtureRule::Rule(name.parse()?),
    })
}

fn check_fixtures(out: &mut impl Write, axiom: AxiomId, rule: FixtureRule) -> Result<u8> {
    let name = rule.name();
    let matching: Vec<_> = fixtures().into_iter().filter(|f| f.axiom == axiom && f.rule.name() == name).collect();
    if matching.is_empty() {
        writeln!(out, "axiom={axiom} rule={name} result=no-fixture")?;
        return Ok(0);
    }
    let mut found = false;
    for f in matching {
        match f.witness()? {
            Some(w) => {
                found = true;
                writeln!(out, "{}", w.report_line())?;
            }
            None => writeln!(out, "axiom={axiom} rule={name} result=pass source=fixture:{}", f.name)?,
        }
    }
    Ok(if found { EXIT_VIOLATION } else { 0 })
}

fn sampler_for(rule: FixtureRule) -> InstanceSampler {
    match rule {
        FixtureRule::Threshold => InstanceSampler::two_artists(120, vec![0.3, 0.7, 1.0]),
        FixtureRule::Surrogate { epsilon } => {
            // the rule needs alpha < 1 - epsilon
            let alpha = ((1.0 - epsilon) / 2.0).min(0.5);
            InstanceSampler::two_artists(30, vec![alpha])
        }
        FixtureRule::Rule(_) => InstanceSampler::default(),
    }
}

fn check_random(out: &mut impl Write, axiom: AxiomId, rule: FixtureRule, trials: usize, seed: u64) -> Result<u8> {
    let cfg = SearchConfig::new(trials, seed).with_sampler(sampler_for(rule));
    let report = run_suite(axiom, &rule, &cfg)?;
    match &report.witness {
        Some(w) => {
            writeln!(out, "{}", w.report_line())?;
            Ok(EXIT_VIOLATION)
        }
        None => {
            writeln!(
                out,
                "axiom={axiom} rule={} result=pass trials={} evaluated={} max_margin={} seed={seed}",
                report.rule,
                report.trials,
                report.evaluated,
                format_g12(report.max_margin)
            )?;
            Ok(0)
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment.
fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), n + 1))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',').map(|s| s.trim().parse::<T>().map_err(|e| anyhow!("bad list item '{s}': {e}"))).collect()
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    out: &mut impl Write,
    config: Option<&Path>,
    alphas: Option<Vec<f64>>,
    k: Option<usize>,
    seeds: Option<usize>,
    rules: Option<Vec<String>>,
    path: &Path,
    summary: Option<&Path>,
) -> Result<()> {
    let mut cfg = SynthConfig::default();
    let mut c_alphas = vec![0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
    let mut c_k = 10;
    let mut c_seeds = 20;
    let mut c_rules = vec!["globalprop".to_string(), "userprop".into(), "usereq".into(), "scaleduserprop".into()];
    if let Some(p) = config {
        for (key, v) in read_config(p)? {
            match key.as_str() {
                "users" => cfg.n_users = v.parse()?,
                "artists" => cfg.n_artists = v.parse()?,
                "min_artists" => cfg.artist_count_range.0 = v.parse()?,
                "max_artists" => cfg.artist_count_range.1 = v.parse()?,
                "lambda" => cfg.stream_lambda = v.parse()?,
                "seed" => cfg.seed = v.parse()?,
                "alphas" => c_alphas = list(&v)?,
                "k" => c_k = v.parse()?,
                "seeds" => c_seeds = v.parse()?,
                "rules" => c_rules = list(&v)?,
                other => bail!("unknown config key '{other}'"),
            }
        }
    }
    let alphas = alphas.unwrap_or(c_alphas);
    let k = k.unwrap_or(c_k);
    let seeds = seeds.unwrap_or(c_seeds);
    let rules: Vec<RuleId> = rules.unwrap_or(c_rules).iter().map(|r| r.parse()).collect::<Result<_, _>>()?;
    let rep = replicate(&cfg, &rules, &alphas, k, seeds)?;

    let rows: Vec<Vec<String>> = rep.rows.iter().map(|r| r.record()).collect();
    write_csv(fs::File::create(path)?, &ROW_HEADER, &rows)?;
    if let Some(sp) = summary {
        let header = [
            "rule", "alpha", "k", "seeds", "top_median", "top_q1", "top_q3", "bottom_median", "bottom_q1", "bottom_q3",
            "envy_median", "envy_q1", "envy_q3",
        ];
        let g = format_g12;
        let rows: Vec<Vec<String>> = rep
            .summary
            .iter()
            .map(|a| {
                vec![
                    a.rule.clone(),
                    g(a.alpha),
                    a.k.to_string(),
                    a.seeds.to_string(),
                    g(a.top_mean.median),
                    g(a.top_mean.q1),
                    g(a.top_mean.q3),
                    g(a.bottom_mean.median),
                    g(a.bottom_mean.q1),
                    g(a.bottom_mean.q3),
                    g(a.max_envy.median),
                    g(a.max_envy.q1),
                    g(a.max_envy.q3),
                ]
            })
            .collect();
        write_csv(fs::File::create(sp)?, &header, &rows)?;
    }
    let meta = serde_json::json!({
        "config": cfg, "alphas": alphas, "k": k, "seeds": seeds,
        "aggregation": "mean of per-artist ratios to pro-rata pay-per-stream",
        "zero_rows": "redrawn", "resamples": rep.resamples,
    });
    let meta_path = PathBuf::from(format!("{}.meta.json", path.display()));
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    writeln!(out, "wrote {} rows to {} (metadata in {})", rep.rows.len(), path.display(), meta_path.display())?;
    Ok(())
}
