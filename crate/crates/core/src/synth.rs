//! Synthetic rule databases and query transactions.
//!
//! Items follow a Zipf law over the universe, antecedent and consequent
//! lengths are uniform on configurable ranges, weights are uniform integers.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use thiserror::Error;

use crate::rules::{ItemId, ItemSet, RuleDatabase, RuleDraft, Weight};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub rules: usize,
    pub universe: u32,
    pub antecedent_len: RangeInclusive<usize>,
    pub consequent_len: RangeInclusive<usize>,
    pub zipf_exponent: f64,
    pub weights: RangeInclusive<Weight>,
    /// Size of the default recommendation list.
    pub default_items: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            rules: 1000,
            universe: 10_000,
            antecedent_len: 1..=5,
            consequent_len: 1..=3,
            zipf_exponent: 1.0,
            weights: 1..=10_000,
            default_items: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("universe of {universe} items cannot hold a rule of {needed} distinct items")]
    UniverseTooSmall { universe: u32, needed: usize },
    #[error("empty or zero-based length range")]
    BadLengths,
    #[error("could not draw {wanted} distinct antecedents (got {got})")]
    Exhausted { wanted: usize, got: usize },
    #[error("invalid Zipf parameters")]
    Zipf,
}

/// Zipf-distributed item sampler over `1..=universe`.
pub struct ItemSampler {
    zipf: Zipf<f64>,
}

impl ItemSampler {
    pub fn new(universe: u32, exponent: f64) -> Result<Self, SynthError> {
        let zipf = Zipf::new(f64::from(universe), exponent).map_err(|_| SynthError::Zipf)?;
        Ok(ItemSampler { zipf })
    }

    pub fn item<R: Rng + ?Sized>(&self, rng: &mut R) -> ItemId {
        self.zipf.sample(rng) as ItemId
    }

    /// `len` distinct items, none of which is in `exclude`.
    pub fn distinct<R: Rng + ?Sized>(&self, rng: &mut R, len: usize, exclude: &ItemSet) -> ItemSet {
        let mut picked: Vec<ItemId> = Vec::with_capacity(len);
        while picked.len() < len {
            let x = self.item(rng);
            if !picked.contains(&x) && !exclude.contains(x) {
                picked.push(x);
            }
        }
        ItemSet::new(picked)
    }
}

/// Generates a database; duplicate antecedents are redrawn so every key is
/// distinct. Deterministic in `spec.seed`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<RuleDatabase, SynthError> {
    let (amin, amax) = (*spec.antecedent_len.start(), *spec.antecedent_len.end());
    let (cmin, cmax) = (*spec.consequent_len.start(), *spec.consequent_len.end());
    if amin == 0 || amin > amax || cmin > cmax {
        return Err(SynthError::BadLengths);
    }
    if (spec.universe as usize) < amax + cmax {
        return Err(SynthError::UniverseTooSmall { universe: spec.universe, needed: amax + cmax });
    }
    let sampler = ItemSampler::new(spec.universe, spec.zipf_exponent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen: HashSet<ItemSet> = HashSet::with_capacity(spec.rules);
    let mut drafts = Vec::with_capacity(spec.rules);
    let budget = spec.rules.saturating_mul(50).max(1000);
    let mut attempts = 0usize;
    while drafts.len() < spec.rules {
        // The length is fixed before redrawing so duplicates do not skew it,
        // unless that length is (nearly) exhausted.
        let alen = rng.random_range(amin..=amax);
        let mut fresh = None;
        for _ in 0..64 {
            attempts += 1;
            let candidate = sampler.distinct(&mut rng, alen, &ItemSet::empty());
            if !seen.contains(&candidate) {
                fresh = Some(candidate);
                break;
            }
        }
        if attempts > budget {
            return Err(SynthError::Exhausted { wanted: spec.rules, got: drafts.len() });
        }
        let Some(antecedent) = fresh else { continue };
        let clen = rng.random_range(cmin..=cmax);
        let consequent = sampler.distinct(&mut rng, clen, &antecedent);
        let weight = rng.random_range(spec.weights.clone());
        seen.insert(antecedent.clone());
        drafts.push(RuleDraft { antecedent, consequent, weight });
    }
    let (db, _) = RuleDatabase::from_drafts(spec.universe, drafts).expect("generator emits valid drafts");
    Ok(db.with_most_frequent_default(spec.default_items))
}

/// `count` transactions of exactly `len` distinct Zipf-drawn items.
pub fn gen_transactions(universe: u32, exponent: f64, count: usize, len: usize, seed: u64) -> Result<Vec<ItemSet>, SynthError> {
    if len > universe as usize {
        return Err(SynthError::UniverseTooSmall { universe, needed: len });
    }
    let sampler = ItemSampler::new(universe, exponent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.distinct(&mut rng, len, &ItemSet::empty())).collect())
}
