//! Latency benchmark over synthetic databases.
//!
//! CSV columns: `mode,D,T,t,k,N,median_ms,mean_ms,stage_breakdown_json`.
//! `T` is the transaction length, `N` the modulus size (private modes),
//! and the last column maps each stage to its median milliseconds; `prep`
//! is the one-off index or server build.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use privrec_core::exact::{ExactConfig, ExactIndex};
use privrec_core::lsh::{query_top1, LshIndex, LshParams};
use privrec_core::par::Exec;
use privrec_core::protocol::{
    private_all_assoc, private_approx_top1, ClientConfig, ClientSession, Mode, Server, ServerConfig,
};
use privrec_core::rules::{collate_capacitated, default_recommendation, OrderingFunction};
use privrec_core::synth::{gen_synthetic, gen_transactions, SyntheticSpec};
use privrec_core::transport::Loopback;
use privrec_core::{ItemId, RuleDatabase};

use crate::{CliError, CriterionName, RunMode};

pub const CSV_HEADER: &str = "mode,D,T,t,k,N,median_ms,mean_ms,stage_breakdown_json";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub modes: Vec<RunMode>,
    pub db_sizes: Vec<usize>,
    pub transaction_lens: Vec<usize>,
    pub max_lens: Vec<usize>,
    pub k: usize,
    pub w: u64,
    pub criterion: CriterionName,
    pub ordering: OrderingFunction,
    pub key_bits: u32,
    pub ot_dims: usize,
    pub lsh: LshParams,
    pub universe: u32,
    pub repetitions: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            modes: vec![RunMode::ExactPlain],
            db_sizes: vec![1000],
            transaction_lens: vec![5],
            max_lens: vec![3],
            k: 3,
            w: 0,
            criterion: CriterionName::All,
            ordering: OrderingFunction::weight_only(),
            key_bits: 1024,
            ot_dims: 3,
            lsh: LshParams::default_schedule(0),
            universe: 10_000,
            repetitions: 5,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let empty = self.modes.is_empty() || self.db_sizes.is_empty() || self.transaction_lens.is_empty() || self.max_lens.is_empty();
        if empty {
            return Err(CliError::Usage("every sweep range needs at least one value".into()));
        }
        if self.repetitions == 0 {
            return Err(CliError::Usage("at least one repetition".into()));
        }
        Ok(())
    }
}

/// One configuration's measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub mode: RunMode,
    pub db_size: usize,
    pub transaction_len: usize,
    pub max_len: usize,
    pub k: usize,
    pub key_bits: u32,
    pub samples: Vec<Duration>,
    pub stages: BTreeMap<String, Duration>,
    /// Recommended items per query, for determinism checks.
    pub outputs: Vec<Vec<ItemId>>,
}

pub fn median(samples: &[Duration]) -> Duration {
    let mut s = samples.to_vec();
    s.sort_unstable();
    match s.len() {
        0 => Duration::ZERO,
        n if n % 2 == 1 => s[n / 2],
        n => (s[n / 2 - 1] + s[n / 2]) / 2,
    }
}

pub fn mean(samples: &[Duration]) -> Duration {
    if samples.is_empty() {
        return Duration::ZERO;
    }
    samples.iter().sum::<Duration>() / samples.len() as u32
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl BenchRow {
    pub fn median(&self) -> Duration {
        median(&self.samples)
    }

    pub fn csv_line(&self) -> String {
        let stages: serde_json::Map<String, serde_json::Value> =
            self.stages.iter().map(|(k, v)| (k.clone(), serde_json::json!((ms(*v) * 1e3).round() / 1e3))).collect();
        let json = serde_json::Value::Object(stages).to_string().replace('"', "\"\"");
        format!(
            "{},{},{},{},{},{},{:.3},{:.3},\"{}\"",
            self.mode,
            self.db_size,
            self.transaction_len,
            self.max_len,
            self.k,
            self.key_bits,
            ms(self.median()),
            ms(mean(&self.samples)),
            json
        )
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Synthetic database of `rules` rules over `universe` items.
pub fn bench_db(rules: usize, universe: u32, seed: u64) -> Result<RuleDatabase, CliError> {
    Ok(gen_synthetic(&SyntheticSpec { rules, universe, seed, ..Default::default() })?)
}

/// Per-stage medians over repetitions.
fn stage_medians(per_rep: &[BTreeMap<String, Duration>]) -> BTreeMap<String, Duration> {
    let mut names: Vec<&String> = per_rep.iter().flat_map(|m| m.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|n| {
            let v: Vec<Duration> = per_rep.iter().map(|m| m.get(n).copied().unwrap_or_default()).collect();
            (n.clone(), median(&v))
        })
        .collect()
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &d in &cfg.db_sizes {
        let db = bench_db(d, cfg.universe, cfg.seed)?;
        for &mode in &cfg.modes {
            for &tlen in &cfg.transaction_lens {
                let queries = gen_transactions(cfg.universe, 1.0, cfg.repetitions, tlen, cfg.seed ^ 0x7ac7)?;
                for &t in &cfg.max_lens {
                    rows.push(run_one(cfg, &db, mode, tlen, t, &queries)?);
                }
            }
        }
    }
    Ok(rows)
}

fn run_one(
    cfg: &BenchConfig,
    db: &RuleDatabase,
    mode: RunMode,
    tlen: usize,
    t: usize,
    queries: &[privrec_core::ItemSet],
) -> Result<BenchRow, CliError> {
    let criterion = cfg.criterion.build(cfg.k, cfg.w, t, cfg.ordering);
    let mut samples = Vec::with_capacity(queries.len());
    let mut per_rep = Vec::with_capacity(queries.len());
    let mut outputs = Vec::with_capacity(queries.len());
    let prep_started = Instant::now();
    match mode {
        RunMode::ExactPlain => {
            let index = ExactIndex::build(db, &ExactConfig::with_seed(cfg.seed), cfg.exec)?.with_transaction_cap(tlen.max(25));
            let prep = prep_started.elapsed();
            for q in queries {
                let started = Instant::now();
                let ans = index.query(q, &criterion, cfg.exec)?;
                let fetched = started.elapsed();
                let list = if ans.rules.is_empty() { default_recommendation(db) } else { collate_capacitated(&ans.rules, cfg.k) };
                let total = started.elapsed();
                samples.push(total);
                per_rep.push(BTreeMap::from([
                    ("prep".to_string(), prep),
                    ("fetch".to_string(), fetched),
                    ("collate".to_string(), total - fetched),
                ]));
                outputs.push(list.item_ids());
            }
        }
        RunMode::ApproxPlain => {
            let index = LshIndex::from_db(db, cfg.lsh.clone(), cfg.exec)?;
            let prep = prep_started.elapsed();
            for q in queries {
                let started = Instant::now();
                let best = query_top1(q, &index, db, &cfg.ordering)?;
                let total = started.elapsed();
                samples.push(total);
                per_rep.push(BTreeMap::from([("prep".to_string(), prep), ("query".to_string(), total)]));
                outputs.push(match best {
                    Some(r) => r.consequent.items().to_vec(),
                    None => db.global_frequent_items().to_vec(),
                });
            }
        }
        RunMode::ExactPrivate | RunMode::ApproxPrivate => {
            let approx = (mode == RunMode::ApproxPrivate).then(|| cfg.lsh.clone());
            let server_cfg = ServerConfig { key_bits: cfg.key_bits, seed: cfg.seed, approx, exec: cfg.exec, ..Default::default() };
            let server = Arc::new(Server::new(db.clone(), server_cfg)?);
            let prep = prep_started.elapsed();
            let session_mode = if mode == RunMode::ExactPrivate { Mode::Exact } else { Mode::Approx };
            for (i, q) in queries.iter().enumerate() {
                let client_cfg = ClientConfig {
                    key_bits: cfg.key_bits,
                    ot_dims: cfg.ot_dims,
                    mode: session_mode,
                    seed: cfg.seed.wrapping_add(i as u64),
                    exec: cfg.exec,
                };
                let started = Instant::now();
                let mut session = ClientSession::open(Loopback::new(&server), &client_cfg)?;
                let ans = match mode {
                    RunMode::ExactPrivate => private_all_assoc(&mut session, q, cfg.w, t, cfg.k)?,
                    _ => private_approx_top1(&mut session, q, &cfg.ordering)?,
                };
                let mut stages: BTreeMap<String, Duration> = session.timings().stages.iter().map(|(k, v)| (k.to_string(), *v)).collect();
                session.close()?;
                samples.push(started.elapsed());
                stages.insert("prep".to_string(), prep);
                per_rep.push(stages);
                outputs.push(ans.items);
            }
        }
    }
    Ok(BenchRow {
        mode,
        db_size: db.len(),
        transaction_len: tlen,
        max_len: t,
        k: cfg.k,
        key_bits: cfg.key_bits,
        samples,
        stages: stage_medians(&per_rep),
        outputs,
    })
}
