use std::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::index::best_applicable;
use super::{LshError, LshIndex, LshParams};
use crate::par::Exec;
use crate::rules::{AssociationRule, OrderingError, OrderingFunction, RuleDatabase, RuleId, Transaction};

/// Logarithm used for the number of copies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// `⌈k · log|D|⌉`, at least 1.
pub fn copies_for(k: usize, db_len: usize, base: LogBase) -> usize {
    ((k as f64 * base.log(db_len as f64)).ceil() as usize).max(1)
}

/// One subsampled copy of the database and its index.
#[derive(Clone, Debug, PartialEq)]
pub struct TopKCopy {
    pub seed: u64,
    /// Rule ids kept in this copy, ascending.
    pub subsample: Vec<RuleId>,
    pub index: LshIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopKIndex {
    pub k: usize,
    pub copies: Vec<TopKCopy>,
}

/// Builds `copies_for(k, |D|)` indexes, each over an independent subsample
/// that keeps every rule with probability `1/k`. Copy `c` draws its subsample
/// and its bank from seeds derived from `(seed, c)`.
pub fn topk_prep(
    db: &RuleDatabase,
    k: usize,
    params: &LshParams,
    seed: u64,
    base: LogBase,
    exec: Exec,
) -> Result<TopKIndex, LshError> {
    if k == 0 || db.len() < 2 {
        return Err(LshError::TopKDomain);
    }
    params.validate()?;
    let n = copies_for(k, db.len(), base);
    let p = 1.0 / k as f64;
    let copies = exec.map_range(n, |c| {
        let copy_seed = seed ^ (c as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(copy_seed);
        let subsample: Vec<RuleId> = db.rules().iter().filter(|_| rng.random_bool(p)).map(|r| r.id).collect();
        let copy_params = LshParams { levels: params.levels.clone(), seed: params.seed.wrapping_add(c as u64) };
        let rules = subsample.iter().map(|&id| {
            let r = db.rule(id).expect("subsample ids come from db");
            (id, &r.antecedent)
        });
        // Inner builds stay sequential; copies already run in parallel.
        let index = LshIndex::build(db.universe_size(), rules, copy_params, Exec::Sequential)?;
        Ok(TopKCopy { seed: copy_seed, subsample, index })
    });
    Ok(TopKIndex { k, copies: copies.into_iter().collect::<Result<_, LshError>>()? })
}

/// Union of the per-copy verified top-1 rules, ranked by `f` (ties: lower
/// id) and truncated to `k`.
pub fn query_topk<'a>(
    t: &Transaction,
    index: &TopKIndex,
    db: &'a RuleDatabase,
    f: &OrderingFunction,
    k: usize,
) -> Result<Vec<&'a AssociationRule>, OrderingError> {
    let mut found: Vec<&AssociationRule> = Vec::new();
    for copy in &index.copies {
        let cands = copy.index.query_candidates(t);
        if let Some(r) = best_applicable(cands.ids.iter().filter_map(|&id| db.rule(id)), t, db, f)? {
            found.push(r);
        }
    }
    found.sort_unstable_by_key(|r| r.id);
    found.dedup_by_key(|r| r.id);
    let ctx = db.ordering_context();
    let mut keyed = found.into_iter().map(|r| Ok((f.evaluate(r, ctx)?, r))).collect::<Result<Vec<_>, OrderingError>>()?;
    keyed.sort_by_key(|&(v, r)| (Reverse(v), r.id));
    keyed.truncate(k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}
