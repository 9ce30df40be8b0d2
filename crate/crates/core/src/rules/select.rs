use std::cmp::Reverse;

use thiserror::Error;

use super::{AssociationRule, OrderingContext, OrderingError, OrderingFunction, RuleDatabase, Transaction, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CriterionError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("t must lie in [1, {universe}], got {t}")]
    BadT { t: usize, universe: u32 },
    #[error(transparent)]
    Ordering(#[from] OrderingError),
}

/// Which applicable rules a query asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Best `k` rules by `f` among those with weight ≥ `w` and antecedent length ≤ `t`.
    TopAssoc { k: usize, w: Weight, t: usize, f: OrderingFunction },
    Top1Assoc { f: OrderingFunction },
    TopKAssoc { k: usize, f: OrderingFunction },
    /// Every rule with weight ≥ `w` and length ≤ `t`, heaviest first.
    AllAssoc { w: Weight, t: usize },
    /// Some `k` qualifying rules: the lowest ids.
    AnyAssoc { k: usize, w: Weight, t: usize },
}

/// Normalized view of a criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Filter {
    pub k: Option<usize>,
    pub w: Weight,
    pub t: usize,
    /// `None` for AnyAssoc: order by id.
    pub f: Option<OrderingFunction>,
}

impl Criterion {
    pub(crate) fn filter(&self, universe: u32) -> Result<Filter, CriterionError> {
        let all = universe as usize;
        let filter = match *self {
            Criterion::TopAssoc { k, w, t, f } => Filter { k: Some(k), w, t, f: Some(f) },
            Criterion::Top1Assoc { f } => Filter { k: Some(1), w: 0, t: all, f: Some(f) },
            Criterion::TopKAssoc { k, f } => Filter { k: Some(k), w: 0, t: all, f: Some(f) },
            Criterion::AllAssoc { w, t } => {
                Filter { k: None, w, t, f: Some(OrderingFunction::weight_only()) }
            }
            Criterion::AnyAssoc { k, w, t } => Filter { k: Some(k), w, t, f: None },
        };
        if filter.k == Some(0) {
            return Err(CriterionError::ZeroK);
        }
        if filter.t == 0 || filter.t > all {
            return Err(CriterionError::BadT { t: filter.t, universe });
        }
        Ok(filter)
    }

    /// Maximum antecedent length admitted by this criterion.
    pub fn max_len(&self, universe: u32) -> usize {
        match *self {
            Criterion::TopAssoc { t, .. } | Criterion::AllAssoc { t, .. } | Criterion::AnyAssoc { t, .. } => t,
            Criterion::Top1Assoc { .. } | Criterion::TopKAssoc { .. } => universe as usize,
        }
    }
}

impl Filter {
    pub(crate) fn admits(&self, weight: Weight, len: usize) -> bool {
        weight >= self.w && len <= self.t
    }

    /// Orders passing rules and truncates to `k`. Shared by every query path
    /// so that they agree on ties.
    pub(crate) fn rank<'a, T, G>(&self, mut rules: Vec<T>, ctx: OrderingContext, get: G) -> Result<Vec<T>, OrderingError>
    where
        G: Fn(&T) -> (super::RuleId, Weight, usize),
        T: 'a,
    {
        match self.f {
            None => rules.sort_by_key(|r| get(r).0),
            Some(f) => {
                let mut keyed = Vec::with_capacity(rules.len());
                for r in rules {
                    let (id, w, len) = get(&r);
                    keyed.push(((Reverse(f.value(w, len, ctx)?), id), r));
                }
                keyed.sort_by_key(|a| a.0);
                rules = keyed.into_iter().map(|(_, r)| r).collect();
            }
        }
        if let Some(k) = self.k {
            rules.truncate(k);
        }
        Ok(rules)
    }
}

/// Brute-force selection: applicable rules passing the weight and length
/// filters, ordered by `f` descending with ties to the lower id.
pub fn select_rules<'a>(
    db: &'a RuleDatabase,
    t: &Transaction,
    c: &Criterion,
) -> Result<Vec<&'a AssociationRule>, CriterionError> {
    let filter = c.filter(db.universe_size())?;
    let passing: Vec<&AssociationRule> = db
        .rules()
        .iter()
        .filter(|r| filter.admits(r.weight, r.antecedent.len()) && r.is_applicable(t))
        .collect();
    Ok(filter.rank(passing, db.ordering_context(), |r| (r.id, r.weight, r.antecedent.len()))?)
}

/// Largest applicable antecedent, ties to the lower id.
pub fn lscs<'a>(db: &'a RuleDatabase, t: &Transaction) -> Option<&'a AssociationRule> {
    db.rules()
        .iter()
        .filter(|r| r.is_applicable(t))
        .max_by(|a, b| a.antecedent.len().cmp(&b.antecedent.len()).then(b.id.cmp(&a.id)))
}

/// Applicable rule maximizing `f(i)·|p_i|`, ties to the lower id.
pub fn gscs<'a>(
    db: &'a RuleDatabase,
    t: &Transaction,
    f: &OrderingFunction,
) -> Result<Option<&'a AssociationRule>, OrderingError> {
    let ctx = db.ordering_context();
    let mut best: Option<(u128, &AssociationRule)> = None;
    for r in db.rules().iter().filter(|r| r.is_applicable(t)) {
        let score = f
            .evaluate(r, ctx)?
            .checked_mul(r.antecedent.len() as u128)
            .ok_or(OrderingError::Overflow)?;
        // Rules are scanned in id order, so strict improvement keeps the lower id.
        if best.map_or(true, |(s, _)| score > s) {
            best = Some((score, r));
        }
    }
    Ok(best.map(|(_, r)| r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{ItemSet, RuleId};

    fn s(v: &[u32]) -> ItemSet {
        ItemSet::new(v.iter().copied())
    }

    fn ids(rules: &[&AssociationRule]) -> Vec<u32> {
        rules.iter().map(|r| r.id.0).collect()
    }

    fn three_rule_db() -> RuleDatabase {
        RuleDatabase::from_triples(10, &[(&[1], &[9], 5), (&[1, 2], &[8], 2), (&[4], &[7], 9)]).unwrap()
    }

    #[test]
    fn three_rule_examples() {
        let db = three_rule_db();
        let t = s(&[1, 2]);
        let all = select_rules(&db, &t, &Criterion::AllAssoc { w: 0, t: 10 }).unwrap();
        assert_eq!(ids(&all), vec![1, 2]);
        let top = Criterion::TopAssoc { k: 1, w: 3, t: 1, f: OrderingFunction::weight_only() };
        assert_eq!(ids(&select_rules(&db, &t, &top).unwrap()), vec![1]);
        assert!(select_rules(&db, &ItemSet::empty(), &Criterion::AllAssoc { w: 0, t: 10 }).unwrap().is_empty());
    }

    #[test]
    fn any_assoc_returns_lowest_ids() {
        let db = RuleDatabase::from_triples(10, &[(&[3], &[9], 1), (&[1], &[9], 100), (&[2], &[9], 50)]).unwrap();
        let got = select_rules(&db, &s(&[1, 2, 3]), &Criterion::AnyAssoc { k: 2, w: 0, t: 3 }).unwrap();
        assert_eq!(ids(&got), vec![1, 2]);
    }

    #[test]
    fn criterion_validation() {
        let db = three_rule_db();
        let t = s(&[1]);
        assert_eq!(select_rules(&db, &t, &Criterion::AnyAssoc { k: 0, w: 0, t: 1 }), Err(CriterionError::ZeroK));
        assert!(matches!(select_rules(&db, &t, &Criterion::AllAssoc { w: 0, t: 0 }), Err(CriterionError::BadT { .. })));
        assert!(matches!(select_rules(&db, &t, &Criterion::AllAssoc { w: 0, t: 11 }), Err(CriterionError::BadT { .. })));
    }

    #[test]
    fn ties_go_to_lower_id() {
        let db = RuleDatabase::from_triples(10, &[(&[1], &[9], 4), (&[2], &[9], 4), (&[3], &[9], 4)]).unwrap();
        let c = Criterion::TopKAssoc { k: 2, f: OrderingFunction::weight_only() };
        assert_eq!(ids(&select_rules(&db, &s(&[1, 2, 3]), &c).unwrap()), vec![1, 2]);
    }

    #[test]
    fn lscs_examples() {
        let db = RuleDatabase::from_triples(
            10,
            &[(&[1], &[9], 0), (&[2, 3], &[9], 0), (&[1, 2, 3], &[9], 0), (&[3, 4], &[9], 0)],
        )
        .unwrap();
        assert_eq!(lscs(&db, &s(&[1, 2, 3])).unwrap().id, RuleId(3));
        assert_eq!(lscs(&db, &s(&[9])), None);
        let single = RuleDatabase::from_triples(10, &[(&[5], &[6], 0)]).unwrap();
        assert_eq!(lscs(&single, &s(&[5])).unwrap().id, RuleId(1));
        // With f' = |p| the product ordering has the same argmax as LSCS.
        assert_eq!(gscs(&db, &s(&[1, 2, 3]), &OrderingFunction::length_only()).unwrap().unwrap().id, RuleId(3));
    }

    #[test]
    fn gscs_weighs_by_length() {
        let db = RuleDatabase::from_triples(10, &[(&[1], &[9], 10), (&[1, 2], &[9], 1)]).unwrap();
        let got = gscs(&db, &s(&[1, 2]), &OrderingFunction::weight_only()).unwrap().unwrap();
        assert_eq!(got.id, RuleId(1));
        assert_eq!(gscs(&db, &s(&[3]), &OrderingFunction::weight_only()).unwrap(), None);
    }
}
