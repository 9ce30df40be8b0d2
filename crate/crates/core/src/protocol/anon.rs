use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::rules::{AssociationRule, ItemId, ItemSet, RuleDatabase};

/// Item pseudonyms. Frequent items get a random bijection onto
/// `1..=frequent_count()`; every other item maps to the sentinel `0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnonymizationTables {
    /// `forward[i]` for `i ∈ 0..=|I|`; slot 0 is the sentinel.
    forward: Vec<ItemId>,
    /// `reverse[a]` for `a ∈ 0..=F`; slot 0 is the sentinel.
    reverse: Vec<ItemId>,
    theta: u64,
}

/// Frequency threshold under which items are hidden: items mentioned by
/// no rule are infrequent.
pub const DEFAULT_THETA: u64 = 1;

impl AnonymizationTables {
    /// `frequencies[i]` is the frequency of item `i` (slot 0 ignored). Items
    /// with frequency below `theta` are infrequent.
    pub fn build(universe: u32, frequencies: &[u64], theta: u64, seed: u64) -> Self {
        let frequent: Vec<ItemId> =
            (1..=universe).filter(|&i| frequencies.get(i as usize).copied().unwrap_or(0) >= theta).collect();
        let mut images: Vec<ItemId> = (1..=frequent.len() as ItemId).collect();
        images.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut forward = vec![0; universe as usize + 1];
        let mut reverse = vec![0; frequent.len() + 1];
        for (&i, &a) in frequent.iter().zip(&images) {
            forward[i as usize] = a;
            reverse[a as usize] = i;
        }
        AnonymizationTables { forward, reverse, theta }
    }

    /// Tables for `db`, counting how many rules mention each item.
    pub fn for_db(db: &RuleDatabase, theta: u64, seed: u64) -> Self {
        Self::build(db.universe_size(), &db.item_frequencies(), theta, seed)
    }

    pub fn universe(&self) -> u32 {
        self.forward.len() as u32 - 1
    }

    pub fn theta(&self) -> u64 {
        self.theta
    }

    pub fn frequent_count(&self) -> u32 {
        self.reverse.len() as u32 - 1
    }

    /// Pseudonym of `i`, or `None` for infrequent and out-of-range items.
    pub fn forward(&self, i: ItemId) -> Option<ItemId> {
        self.forward.get(i as usize).copied().filter(|&a| a != 0)
    }

    pub fn reverse(&self, a: ItemId) -> Option<ItemId> {
        self.reverse.get(a as usize).copied().filter(|&i| i != 0)
    }

    /// The full forward table, sentinel included.
    pub fn forward_table(&self) -> &[ItemId] {
        &self.forward
    }

    pub fn reverse_table(&self) -> &[ItemId] {
        &self.reverse
    }

    /// Pseudonymous copy of `s`, dropping infrequent items.
    pub fn map_set(&self, s: &ItemSet) -> ItemSet {
        ItemSet::new(s.iter().filter_map(|i| self.forward(i)))
    }

    /// The rule in pseudonym space, keeping its id. Rules whose antecedent
    /// mentions an infrequent item can never match an anonymized
    /// transaction and map to `None`.
    pub fn map_rule(&self, r: &AssociationRule) -> Option<AssociationRule> {
        let antecedent = self.map_set(&r.antecedent);
        if antecedent.len() != r.antecedent.len() {
            return None;
        }
        Some(AssociationRule { id: r.id, antecedent, consequent: self.map_set(&r.consequent), weight: r.weight })
    }
}
