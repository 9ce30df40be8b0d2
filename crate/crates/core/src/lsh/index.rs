use std::collections::HashMap;

use super::{antecedent_vector, query_vector, GaussianBank, Level, LshError, LshParams};
use crate::par::Exec;
use crate::rules::{AssociationRule, ItemSet, OrderingError, OrderingFunction, RuleDatabase, RuleId, Transaction};
use crate::wire::{Reader, WireError, Writer};

type Buckets = HashMap<u64, Vec<RuleId>>;

const MAGIC: &[u8; 6] = b"PRLSH\0";
const VERSION: u16 = 1;

/// Bank plus one bucket table per `(m, l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LshIndex {
    params: LshParams,
    universe: u32,
    bank: GaussianBank,
    /// `tables[m][l]`.
    tables: Vec<Vec<Buckets>>,
    rules: usize,
}

/// Output of a candidate scan.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Candidates {
    /// Level whose scan produced the candidates, if any.
    pub level: Option<usize>,
    /// Ids collected at that level, duplicates included.
    pub collected: usize,
    /// Distinct candidate ids, ascending.
    pub ids: Vec<RuleId>,
}

impl LshIndex {
    /// Indexes `(id, antecedent)` pairs over a universe of `universe` items.
    pub fn build<'a, I>(universe: u32, antecedents: I, params: LshParams, exec: Exec) -> Result<Self, LshError>
    where
        I: IntoIterator<Item = (RuleId, &'a ItemSet)>,
    {
        params.validate()?;
        let bank = GaussianBank::new(params.seed, universe as usize + 1);
        let items: Vec<(RuleId, super::SparseVec)> = antecedents
            .into_iter()
            .map(|(id, p)| Ok((id, antecedent_vector(p, universe)?)))
            .collect::<Result<_, LshError>>()?;
        let pairs = params.table_pairs();
        let built: Vec<Buckets> = exec.map(&pairs, |&(m, l)| {
            let bits = params.levels[m].bits;
            let mut buckets = Buckets::new();
            for (id, v) in &items {
                buckets.entry(bank.signature(m, l, bits, v)).or_default().push(*id);
            }
            buckets
        });
        let mut it = built.into_iter();
        let tables = params.levels.iter().map(|lv| it.by_ref().take(lv.tables).collect()).collect();
        Ok(LshIndex { params, universe, bank, tables, rules: items.len() })
    }

    pub fn from_db(db: &RuleDatabase, params: LshParams, exec: Exec) -> Result<Self, LshError> {
        Self::build(db.universe_size(), db.rules().iter().map(|r| (r.id, &r.antecedent)), params, exec)
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    pub fn bank(&self) -> &GaussianBank {
        &self.bank
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn rule_count(&self) -> usize {
        self.rules
    }

    /// Bucket contents for a signature in table `(m, l)`.
    pub fn bucket(&self, m: usize, l: usize, sig: u64) -> &[RuleId] {
        self.tables[m][l].get(&sig).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn buckets(&self, m: usize, l: usize) -> impl Iterator<Item = (u64, &[RuleId])> {
        self.tables[m][l].iter().map(|(s, ids)| (*s, ids.as_slice()))
    }

    /// Signature of `[T; 0]` in table `(m, l)`.
    pub fn query_signature(&self, m: usize, l: usize, t: &Transaction) -> u64 {
        self.bank.signature(m, l, self.params.levels[m].bits, &query_vector(t))
    }

    /// Signature of a stored antecedent in table `(m, l)`.
    pub fn antecedent_signature(&self, m: usize, l: usize, p: &ItemSet) -> Result<u64, LshError> {
        Ok(self.bank.signature(m, l, self.params.levels[m].bits, &antecedent_vector(p, self.universe)?))
    }

    /// Level-by-level scan: returns the first non-empty level's collection,
    /// stopping a level early once more than `3·L_m` ids (duplicates
    /// included) have been gathered.
    pub fn query_candidates(&self, t: &Transaction) -> Candidates {
        let q = query_vector(t);
        for (m, lv) in self.params.levels.iter().enumerate() {
            let mut collected: Vec<RuleId> = Vec::new();
            for l in 0..lv.tables {
                let sig = self.bank.signature(m, l, lv.bits, &q);
                collected.extend_from_slice(self.bucket(m, l, sig));
                if collected.len() > 3 * lv.tables {
                    break;
                }
            }
            if !collected.is_empty() {
                let count = collected.len();
                collected.sort_unstable();
                collected.dedup();
                return Candidates { level: Some(m), collected: count, ids: collected };
            }
        }
        Candidates::default()
    }

    /// Binary image: header, schedule, seed, universe, then every bucket
    /// table in `(m, l)` order with buckets sorted by signature.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC).u16(VERSION).u32(self.universe).u64(self.params.seed).u32(self.rules as u32);
        w.u32(self.params.levels.len() as u32);
        for lv in &self.params.levels {
            w.u32(lv.bits as u32).u32(lv.tables as u32);
        }
        for level in &self.tables {
            for table in level {
                let mut sigs: Vec<&u64> = table.keys().collect();
                sigs.sort_unstable();
                w.u32(sigs.len() as u32);
                for s in sigs {
                    let ids: Vec<u32> = table[s].iter().map(|r| r.0).collect();
                    w.u64(*s).u32s(&ids);
                }
            }
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, LshError> {
        let mut r = Reader::new(buf);
        if r.take(MAGIC.len())? != MAGIC {
            return Err(WireError::BadMagic.into());
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(WireError::Version(version).into());
        }
        let universe = r.u32()?;
        let seed = r.u64()?;
        let rules = r.u32()? as usize;
        let nlevels = r.count(8)?;
        let levels = (0..nlevels)
            .map(|_| Ok(Level { bits: r.u32()? as usize, tables: r.u32()? as usize }))
            .collect::<Result<Vec<_>, WireError>>()?;
        let params = LshParams { levels, seed };
        params.validate()?;
        let mut tables = Vec::with_capacity(nlevels);
        for lv in &params.levels {
            let mut level = Vec::with_capacity(lv.tables);
            for _ in 0..lv.tables {
                let n = r.count(12)?;
                let mut table = Buckets::with_capacity(n);
                for _ in 0..n {
                    let sig = r.u64()?;
                    let ids = r.u32s()?.into_iter().map(RuleId).collect();
                    table.insert(sig, ids);
                }
                level.push(table);
            }
            tables.push(level);
        }
        r.finish()?;
        Ok(LshIndex { bank: GaussianBank::new(seed, universe as usize + 1), params, universe, tables, rules })
    }
}

/// Verified top-1: among applicable candidates, the one maximizing `f`
/// (ties: lower id). `None` means the caller should fall back to the default.
pub fn query_top1<'a>(
    t: &Transaction,
    index: &LshIndex,
    db: &'a RuleDatabase,
    f: &OrderingFunction,
) -> Result<Option<&'a AssociationRule>, OrderingError> {
    best_applicable(index.query_candidates(t).ids.iter().filter_map(|&id| db.rule(id)), t, db, f)
}

pub(crate) fn best_applicable<'a>(
    rules: impl Iterator<Item = &'a AssociationRule>,
    t: &Transaction,
    db: &RuleDatabase,
    f: &OrderingFunction,
) -> Result<Option<&'a AssociationRule>, OrderingError> {
    let ctx = db.ordering_context();
    let mut best: Option<(u128, &AssociationRule)> = None;
    for r in rules.filter(|r| r.is_applicable(t)) {
        let v = f.evaluate(r, ctx)?;
        let better = match best {
            None => true,
            Some((bv, br)) => v > bv || (v == bv && r.id < br.id),
        };
        if better {
            best = Some((v, r));
        }
    }
    Ok(best.map(|(_, r)| r))
}
