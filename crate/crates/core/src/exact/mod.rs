//! Exact rule lookup through two-level perfect hashing.
//!
//! Rules are keyed by the canonical string of their antecedent. A query
//! enumerates the subsets of the transaction up to the length bound and
//! fetches each one.

mod hash;
mod table;

use thiserror::Error;

pub use hash::{key_to_field, FingerprintKind, UniversalHash, MERSENNE_127};
pub use table::{Entry, ExactConfig, PrepStats, TableParams, TwoLevelTable};

use crate::par::Exec;
use crate::rules::{
    AssociationRule, Criterion, CriterionError, ItemId, ItemSet, OrderingContext, RuleDatabase, RuleId, Transaction, Weight,
};
use crate::wire::{Reader, WireError, Writer};

/// Default bound on `|T|` for subset enumeration.
pub const DEFAULT_TRANSACTION_CAP: usize = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("cannot index an empty key set")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("two keys reduce to the same value; merge duplicates first")]
    DuplicateKey,
    #[error("no acceptable level-{level} hash within the retry cap")]
    RetryCap { level: u8 },
    #[error("transaction of {len} items exceeds the cap of {cap}")]
    TransactionTooLarge { len: usize, cap: usize },
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Canonical key: ascending decimal ids joined by commas.
pub fn encode_itemset(s: &ItemSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.len() * 6);
    for (n, i) in s.iter().enumerate() {
        if n > 0 {
            out.push(b',');
        }
        out.extend_from_slice(i.to_string().as_bytes());
    }
    out
}

/// Data stored with each antecedent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub rule_id: RuleId,
    pub antecedent_len: usize,
    pub consequent: ItemSet,
    pub weight: Weight,
}

impl Record {
    fn write(&self, w: &mut Writer) {
        w.u32(self.rule_id.0).u16(self.antecedent_len as u16).u64(self.weight).u32s(self.consequent.items());
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let rule_id = RuleId(r.u32()?);
        let antecedent_len = r.u16()? as usize;
        let weight = r.u64()?;
        let consequent = ItemSet::from_sorted(r.u32s()?).map_err(|_| WireError::Invalid("consequent order"))?;
        Ok(Record { rule_id, antecedent_len, consequent, weight })
    }
}

/// All non-empty subsets of `t` with at most `max_len` items, by size and
/// then lexicographically.
pub fn subsets_up_to(t: &Transaction, max_len: usize) -> Subsets {
    Subsets { items: t.items().to_vec(), max_len: max_len.min(t.len()), picks: Vec::new() }
}

/// Iterator returned by [`subsets_up_to`].
#[derive(Clone, Debug)]
pub struct Subsets {
    items: Vec<ItemId>,
    max_len: usize,
    /// Current combination as ascending positions into `items`.
    picks: Vec<usize>,
}

impl Subsets {
    fn advance(&mut self) -> bool {
        let n = self.items.len();
        let k = self.picks.len();
        if k == 0 {
            if self.max_len == 0 {
                return false;
            }
            self.picks = vec![0];
            return true;
        }
        // Rightmost position that can still move.
        if let Some(j) = (0..k).rev().find(|&j| self.picks[j] < n - k + j) {
            self.picks[j] += 1;
            for m in j + 1..k {
                self.picks[m] = self.picks[m - 1] + 1;
            }
            return true;
        }
        if k == self.max_len {
            return false;
        }
        self.picks = (0..=k).collect();
        true
    }
}

impl Iterator for Subsets {
    type Item = ItemSet;

    fn next(&mut self) -> Option<ItemSet> {
        if !self.advance() {
            self.max_len = 0;
            self.picks.clear();
            return None;
        }
        Some(ItemSet::from_sorted(self.picks.iter().map(|&p| self.items[p]).collect()).expect("positions ascend"))
    }
}

/// Number of subsets [`subsets_up_to`] yields: `Σ_{j ≤ t} C(n, j)`.
pub fn subset_count(n: usize, max_len: usize) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for j in 1..=max_len.min(n) {
        c = c * (n - j + 1) as u64 / j as u64;
        total += c;
    }
    total
}

const MAGIC: &[u8; 6] = b"PREXT\0";
const VERSION: u16 = 1;

/// Rule table keyed by antecedent plus the ordering context of its database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactIndex {
    table: TwoLevelTable<Record>,
    ctx: OrderingContext,
    cap: usize,
}

/// Answer of an exact query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAnswer {
    pub rules: Vec<AssociationRule>,
    /// Fetches issued, one per enumerated subset.
    pub fetches: u64,
}

impl ExactIndex {
    pub fn build(db: &RuleDatabase, config: &ExactConfig, exec: Exec) -> Result<Self, ExactError> {
        let items = db
            .rules()
            .iter()
            .map(|r| {
                let rec = Record {
                    rule_id: r.id,
                    antecedent_len: r.antecedent.len(),
                    consequent: r.consequent.clone(),
                    weight: r.weight,
                };
                (encode_itemset(&r.antecedent), rec)
            })
            .collect();
        let table = TwoLevelTable::prep(items, config, exec)?;
        Ok(ExactIndex { table, ctx: db.ordering_context(), cap: DEFAULT_TRANSACTION_CAP })
    }

    pub fn with_transaction_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn table(&self) -> &TwoLevelTable<Record> {
        &self.table
    }

    pub fn ordering_context(&self) -> OrderingContext {
        self.ctx
    }

    pub fn fetch(&self, antecedent: &ItemSet) -> Option<&Record> {
        self.table.fetch(&encode_itemset(antecedent))
    }

    /// Fetches every subset of `t` within the criterion's length bound, keeps
    /// records passing the weight filter and ranks them exactly as
    /// [`crate::rules::select_rules`] does.
    pub fn query(&self, t: &Transaction, c: &Criterion, exec: Exec) -> Result<ExactAnswer, ExactError> {
        if t.len() > self.cap {
            return Err(ExactError::TransactionTooLarge { len: t.len(), cap: self.cap });
        }
        let filter = c.filter(self.ctx.universe_size)?;
        let subsets: Vec<ItemSet> = subsets_up_to(t, filter.t).collect();
        let fetches = subsets.len() as u64;
        let found: Vec<Option<AssociationRule>> = exec.map_vec(subsets, |s| {
            let rec = self.fetch(&s)?;
            filter.admits(rec.weight, rec.antecedent_len).then(|| AssociationRule {
                id: rec.rule_id,
                antecedent: s,
                consequent: rec.consequent.clone(),
                weight: rec.weight,
            })
        });
        let passing: Vec<AssociationRule> = found.into_iter().flatten().collect();
        let rules = filter.rank(passing, self.ctx, |r| (r.id, r.weight, r.antecedent.len())).map_err(CriterionError::from)?;
        Ok(ExactAnswer { rules, fetches })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC).u16(VERSION).u64(self.ctx.w_max).u32(self.ctx.universe_size).u32(self.cap as u32);
        self.table.write(&mut w, Record::write);
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, ExactError> {
        let mut r = Reader::new(buf);
        if r.take(MAGIC.len())? != MAGIC {
            return Err(WireError::BadMagic.into());
        }
        let v = r.u16()?;
        if v != VERSION {
            return Err(WireError::Version(v).into());
        }
        let ctx = OrderingContext { w_max: r.u64()?, universe_size: r.u32()? };
        let cap = r.u32()? as usize;
        let table = TwoLevelTable::read(&mut r, Record::read)?;
        r.finish()?;
        Ok(ExactIndex { table, ctx, cap })
    }
}

/// Free-function form of [`ExactIndex::query`].
pub fn exact_query(t: &Transaction, index: &ExactIndex, c: &Criterion) -> Result<Vec<AssociationRule>, ExactError> {
    Ok(index.query(t, c, Exec::Sequential)?.rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{select_rules, OrderingFunction};

    fn s(v: &[ItemId]) -> ItemSet {
        ItemSet::new(v.iter().copied())
    }

    #[test]
    fn canonical_encoding() {
        assert_eq!(encode_itemset(&s(&[3, 1, 2])), b"1,2,3");
        assert_eq!(encode_itemset(&s(&[7])), b"7");
        assert_eq!(encode_itemset(&s(&[])), b"");
        assert_ne!(encode_itemset(&s(&[1, 23])), encode_itemset(&s(&[12, 3])));
    }

    #[test]
    fn subset_enumeration() {
        let got: Vec<_> = subsets_up_to(&s(&[1, 2]), 2).collect();
        assert_eq!(got, vec![s(&[1]), s(&[2]), s(&[1, 2])]);
        let got: Vec<_> = subsets_up_to(&s(&[1, 2, 3]), 1).collect();
        assert_eq!(got, vec![s(&[1]), s(&[2]), s(&[3])]);
        let t = s(&(1..=10).collect::<Vec<_>>());
        assert_eq!(subsets_up_to(&t, 3).count(), 175);
        assert_eq!(subset_count(10, 3), 175);
        assert_eq!(subsets_up_to(&s(&[1, 2, 3, 4, 5]), 3).count(), 25);
        assert_eq!(subsets_up_to(&s(&[]), 3).count(), 0);
        let all: Vec<_> = subsets_up_to(&s(&[1, 2, 3]), 3).collect();
        assert_eq!(all.len(), 7);
        assert_eq!(all.last(), Some(&s(&[1, 2, 3])));
    }

    #[test]
    fn matches_brute_force() {
        let db = RuleDatabase::from_triples(6, &[(&[1], &[5], 5), (&[2], &[6], 9), (&[1, 2], &[4], 7), (&[3], &[4], 8)]).unwrap();
        let index = ExactIndex::build(&db, &ExactConfig::default(), Exec::Sequential).unwrap();
        let t = s(&[1, 2, 4]);
        for c in [
            Criterion::AllAssoc { w: 0, t: 6 },
            Criterion::AllAssoc { w: 6, t: 1 },
            Criterion::TopKAssoc { k: 2, f: OrderingFunction::length_then_weight() },
            Criterion::AnyAssoc { k: 2, w: 0, t: 2 },
        ] {
            let want: Vec<AssociationRule> = select_rules(&db, &t, &c).unwrap().into_iter().cloned().collect();
            assert_eq!(exact_query(&t, &index, &c).unwrap(), want, "{c:?}");
        }
    }

    #[test]
    fn fetch_counts() {
        let db = RuleDatabase::from_triples(30, &[(&[1], &[25], 5)]).unwrap();
        let index = ExactIndex::build(&db, &ExactConfig::default(), Exec::Sequential).unwrap();
        let t = s(&(1..=20).collect::<Vec<_>>());
        let a = index.query(&t, &Criterion::AllAssoc { w: 0, t: 1 }, Exec::Sequential).unwrap();
        assert_eq!(a.fetches, 20);
        assert_eq!(a.rules.len(), 1);
        let big = s(&(1..=26).collect::<Vec<_>>());
        assert!(matches!(
            index.query(&big, &Criterion::AllAssoc { w: 0, t: 1 }, Exec::Sequential),
            Err(ExactError::TransactionTooLarge { .. })
        ));
    }

    #[test]
    fn persistence_round_trip() {
        let db = crate::synth::gen_synthetic(&crate::synth::SyntheticSpec { rules: 50, universe: 40, seed: 2, ..Default::default() })
            .unwrap();
        let index = ExactIndex::build(&db, &ExactConfig::with_seed(3), Exec::default()).unwrap();
        let bytes = index.to_bytes();
        assert_eq!(ExactIndex::from_bytes(&bytes).unwrap(), index);
        assert!(ExactIndex::from_bytes(&bytes[..bytes.len() - 2]).is_err());
    }
}
