//! Top-1 accuracy of the LSH index against brute-force GSCS.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use privrec_core::lsh::{query_top1, LshIndex, LshParams};
use privrec_core::par::Exec;
use privrec_core::rules::{gscs, OrderingFunction};
use privrec_core::synth::{ItemSampler, SyntheticSpec};
use privrec_core::{ItemSet, RuleDatabase};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyConfig {
    pub rules: usize,
    pub universe: u32,
    pub queries: usize,
    pub query_len: usize,
    pub widths: Vec<usize>,
    pub ordering: OrderingFunction,
    pub seed: u64,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        AccuracyConfig {
            rules: 10_000,
            universe: 10_000,
            queries: 1000,
            query_len: 3,
            widths: vec![10, 16, 32],
            ordering: OrderingFunction::weight_only(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRow {
    pub width: usize,
    pub queries: usize,
    /// Approximate answer equals the brute-force answer.
    pub correct: usize,
    /// The index produced no applicable candidate.
    pub empty: usize,
}

impl AccuracyRow {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.queries.max(1) as f64
    }
}

/// Queries of `len` items that each contain the antecedent of a random rule
/// with at most `len` items, padded with Zipf-drawn items. Every query thus
/// has an applicable rule.
pub fn contained_queries(db: &RuleDatabase, count: usize, len: usize, seed: u64) -> Result<Vec<ItemSet>, CliError> {
    let pool: Vec<&ItemSet> = db.rules().iter().map(|r| &r.antecedent).filter(|p| p.len() <= len).collect();
    if pool.is_empty() {
        return Err(CliError::Usage(format!("no antecedent has at most {len} items")));
    }
    let sampler = ItemSampler::new(db.universe_size(), 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let p = *pool.choose(&mut rng).expect("non-empty pool");
            p.union(&sampler.distinct(&mut rng, len - p.len(), p))
        })
        .collect())
}

pub fn run_accuracy(cfg: &AccuracyConfig) -> Result<(RuleDatabase, Vec<AccuracyRow>), CliError> {
    let spec = SyntheticSpec { rules: cfg.rules, universe: cfg.universe, seed: cfg.seed, ..Default::default() };
    let db = privrec_core::synth::gen_synthetic(&spec)?;
    let queries = contained_queries(&db, cfg.queries, cfg.query_len, cfg.seed ^ 0xacc)?;
    let truth = queries
        .iter()
        .map(|t| Ok(gscs(&db, t, &cfg.ordering)?.map(|r| r.id)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut rows = Vec::with_capacity(cfg.widths.len());
    for &width in &cfg.widths {
        let index = LshIndex::from_db(&db, LshParams::for_signature_width(width, cfg.seed), Exec::default())?;
        let mut row = AccuracyRow { width, queries: queries.len(), correct: 0, empty: 0 };
        for (t, want) in queries.iter().zip(&truth) {
            match query_top1(t, &index, &db, &cfg.ordering)? {
                None => row.empty += 1,
                Some(r) if Some(r.id) == *want => row.correct += 1,
                Some(_) => {}
            }
        }
        rows.push(row);
    }
    Ok((db, rows))
}

pub const ACCURACY_HEADER: &str = "sig_bits,D,queries,query_len,accuracy,no_candidate";

pub fn accuracy_csv(cfg: &AccuracyConfig, rows: &[AccuracyRow]) -> String {
    let mut out = String::from(ACCURACY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{},{:.4},{}\n", r.width, cfg.rules, r.queries, cfg.query_len, r.accuracy(), r.empty));
    }
    out
}
