use std::collections::BTreeMap;

use super::{select_rules, AssociationRule, Criterion, CriterionError, ItemId, ItemSet, RuleDatabase, Transaction};

/// Ranked items with accumulated weights, heaviest first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecommendationList {
    pub items: Vec<(ItemId, u64)>,
}

impl RecommendationList {
    pub fn item_ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|&(i, _)| i).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Union of all consequents.
pub fn collate_uncapacitated<'a>(rules: impl IntoIterator<Item = &'a AssociationRule>) -> ItemSet {
    ItemSet::new(rules.into_iter().flat_map(|r| r.consequent.iter()))
}

/// Sums rule weights per consequent item and keeps the `cap` heaviest
/// (ties: smaller item id).
pub fn collate_capacitated<'a>(
    rules: impl IntoIterator<Item = &'a AssociationRule>,
    cap: usize,
) -> RecommendationList {
    let mut acc: BTreeMap<ItemId, u64> = BTreeMap::new();
    for r in rules {
        for item in r.consequent.iter() {
            let e = acc.entry(item).or_insert(0);
            *e = e.saturating_add(r.weight);
        }
    }
    let mut items: Vec<(ItemId, u64)> = acc.into_iter().collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    items.truncate(cap);
    RecommendationList { items }
}

/// The configured fallback list, with zero weights.
pub fn default_recommendation(db: &RuleDatabase) -> RecommendationList {
    RecommendationList { items: db.global_frequent_items().iter().map(|&i| (i, 0)).collect() }
}

/// Plain end-to-end pipeline: select, then collate, falling back to the
/// default list when nothing is selected.
pub fn recommend(
    db: &RuleDatabase,
    t: &Transaction,
    c: &Criterion,
    cap: usize,
) -> Result<RecommendationList, CriterionError> {
    let selected = select_rules(db, t, c)?;
    if selected.is_empty() {
        return Ok(default_recommendation(db));
    }
    Ok(collate_capacitated(selected, cap))
}
