//! Items, transactions, weighted association rules and the brute-force
//! reference implementations of every selection criterion.

mod collate;
mod ordering;
mod select;
pub mod spmf;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use collate::{
    collate_capacitated, collate_uncapacitated, default_recommendation, recommend,
    RecommendationList,
};
pub use ordering::{MonotoneMap, OrderingContext, OrderingError, OrderingFunction, OrderingKind};
pub use select::{gscs, lscs, select_rules, Criterion, CriterionError};

/// Item identifier, 1-based.
pub type ItemId = u32;
/// Non-negative integer rule weight.
pub type Weight = u64;

/// A set of items kept as a strictly ascending vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet(Vec<ItemId>);

/// The client's item profile.
pub type Transaction = ItemSet;

impl ItemSet {
    /// Builds a set from arbitrary items, sorting and removing duplicates.
    pub fn new(items: impl IntoIterator<Item = ItemId>) -> Self {
        let mut v: Vec<ItemId> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ItemSet(v)
    }

    /// Wraps a vector that must already be strictly ascending.
    pub fn from_sorted(items: Vec<ItemId>) -> Result<Self, RuleError> {
        if items.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RuleError::NotAscending);
        }
        Ok(ItemSet(items))
    }

    pub fn empty() -> Self {
        ItemSet(Vec::new())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<ItemId> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn max_item(&self) -> Option<ItemId> {
        self.0.last().copied()
    }

    /// Linear merge test for `self ⊆ other`.
    pub fn is_subset_of(&self, other: &ItemSet) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for x in &self.0 {
            for y in it.by_ref() {
                match y.cmp(x) {
                    std::cmp::Ordering::Less => continue,
                    std::cmp::Ordering::Equal => continue 'outer,
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn is_disjoint(&self, other: &ItemSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &ItemSet) -> ItemSet {
        ItemSet::new(self.iter().chain(other.iter()))
    }

    /// Applies an item mapping and re-canonicalizes.
    pub fn map(&self, f: impl Fn(ItemId) -> ItemId) -> ItemSet {
        ItemSet::new(self.iter().map(f))
    }
}

impl FromIterator<ItemId> for ItemSet {
    fn from_iter<I: IntoIterator<Item = ItemId>>(iter: I) -> Self {
        ItemSet::new(iter)
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// 1-based rule identifier, contiguous within a database.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u32);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AssociationRule {
    pub id: RuleId,
    pub antecedent: ItemSet,
    pub consequent: ItemSet,
    pub weight: Weight,
}

impl AssociationRule {
    pub fn is_applicable(&self, t: &Transaction) -> bool {
        is_applicable(self, t)
    }
}

/// True iff every antecedent item appears in `t`.
pub fn is_applicable(rule: &AssociationRule, t: &Transaction) -> bool {
    rule.antecedent.is_subset_of(t)
}

/// A rule before id assignment, as read from a file or generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDraft {
    pub antecedent: ItemSet,
    pub consequent: ItemSet,
    pub weight: Weight,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("item list is not strictly ascending")]
    NotAscending,
    #[error("rule {index}: empty antecedent")]
    EmptyAntecedent { index: usize },
    #[error("rule {index}: antecedent and consequent overlap")]
    Overlap { index: usize },
    #[error("rule {index}: item {item} outside universe of size {universe}")]
    ItemOutOfRange { index: usize, item: ItemId, universe: u32 },
    #[error("item 0 is reserved")]
    ZeroItem,
}

/// Outcome of loading drafts into a database.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub input_rules: usize,
    pub merged_duplicates: usize,
    pub stored_rules: usize,
}

/// Immutable rule corpus with contiguous ids `1..=len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDatabase {
    rules: Vec<AssociationRule>,
    universe_size: u32,
    global_frequent_items: Vec<ItemId>,
}

impl RuleDatabase {
    /// Validates drafts, merges duplicate antecedents (max weight, union of
    /// consequents) and assigns ids in first-appearance order.
    pub fn from_drafts(
        universe_size: u32,
        drafts: Vec<RuleDraft>,
    ) -> Result<(Self, LoadReport), RuleError> {
        let input_rules = drafts.len();
        let mut slot: HashMap<ItemSet, usize> = HashMap::with_capacity(drafts.len());
        let mut merged: Vec<RuleDraft> = Vec::with_capacity(drafts.len());
        for (index, d) in drafts.into_iter().enumerate() {
            if d.antecedent.is_empty() {
                return Err(RuleError::EmptyAntecedent { index });
            }
            if !d.antecedent.is_disjoint(&d.consequent) {
                return Err(RuleError::Overlap { index });
            }
            for item in d.antecedent.iter().chain(d.consequent.iter()) {
                if item == 0 {
                    return Err(RuleError::ZeroItem);
                }
                if item > universe_size {
                    return Err(RuleError::ItemOutOfRange { index, item, universe: universe_size });
                }
            }
            match slot.get(&d.antecedent) {
                Some(&at) => {
                    let m = &mut merged[at];
                    m.weight = m.weight.max(d.weight);
                    m.consequent = m.consequent.union(&d.consequent);
                }
                None => {
                    slot.insert(d.antecedent.clone(), merged.len());
                    merged.push(d);
                }
            }
        }
        let rules: Vec<AssociationRule> = merged
            .into_iter()
            .enumerate()
            .map(|(i, d)| AssociationRule {
                id: RuleId(i as u32 + 1),
                antecedent: d.antecedent,
                consequent: d.consequent,
                weight: d.weight,
            })
            .collect();
        let report = LoadReport {
            input_rules,
            merged_duplicates: input_rules - rules.len(),
            stored_rules: rules.len(),
        };
        Ok((RuleDatabase { rules, universe_size, global_frequent_items: Vec::new() }, report))
    }

    /// Convenience constructor for literal rule lists in tests and examples.
    pub fn from_triples(
        universe_size: u32,
        rules: &[(&[ItemId], &[ItemId], Weight)],
    ) -> Result<Self, RuleError> {
        let drafts = rules
            .iter()
            .map(|(a, c, w)| RuleDraft {
                antecedent: ItemSet::new(a.iter().copied()),
                consequent: ItemSet::new(c.iter().copied()),
                weight: *w,
            })
            .collect();
        Ok(Self::from_drafts(universe_size, drafts)?.0)
    }

    pub fn with_default_items(mut self, items: Vec<ItemId>) -> Self {
        self.global_frequent_items = items;
        self
    }

    /// Sets the default list to the `n` items occurring in most rules
    /// (ties: smaller id).
    pub fn with_most_frequent_default(self, n: usize) -> Self {
        let freq = self.item_frequencies();
        let mut items: Vec<ItemId> = (1..=self.universe_size).filter(|&i| freq[i as usize] > 0).collect();
        items.sort_by(|&a, &b| freq[b as usize].cmp(&freq[a as usize]).then(a.cmp(&b)));
        items.truncate(n);
        self.with_default_items(items)
    }

    pub fn rules(&self) -> &[AssociationRule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> Option<&AssociationRule> {
        (id.0 as usize).checked_sub(1).and_then(|i| self.rules.get(i))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn universe_size(&self) -> u32 {
        self.universe_size
    }

    pub fn global_frequent_items(&self) -> &[ItemId] {
        &self.global_frequent_items
    }

    pub fn max_weight(&self) -> Weight {
        self.rules.iter().map(|r| r.weight).max().unwrap_or(0)
    }

    pub fn max_consequent_len(&self) -> usize {
        self.rules.iter().map(|r| r.consequent.len()).max().unwrap_or(0)
    }

    /// Number of rules mentioning each item, indexed by item id (slot 0 unused).
    pub fn item_frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0u64; self.universe_size as usize + 1];
        for r in &self.rules {
            for i in r.antecedent.iter().chain(r.consequent.iter()) {
                freq[i as usize] += 1;
            }
        }
        freq
    }

    /// Ordering context (`w_max`, `|I|`) for this database.
    pub fn ordering_context(&self) -> OrderingContext {
        OrderingContext { w_max: self.max_weight(), universe_size: self.universe_size }
    }

    /// The `n` highest-weight rules (ties: lower id), renumbered.
    pub fn top_by_weight(&self, n: usize) -> RuleDatabase {
        let mut picked: Vec<&AssociationRule> = self.rules.iter().collect();
        picked.sort_by(|a, b| b.weight.cmp(&a.weight).then(a.id.cmp(&b.id)));
        picked.truncate(n);
        picked.sort_by_key(|r| r.id);
        let rules = picked
            .into_iter()
            .enumerate()
            .map(|(i, r)| AssociationRule { id: RuleId(i as u32 + 1), ..r.clone() })
            .collect();
        RuleDatabase {
            rules,
            universe_size: self.universe_size,
            global_frequent_items: self.global_frequent_items.clone(),
        }
    }
}
