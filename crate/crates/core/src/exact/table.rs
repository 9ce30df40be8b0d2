use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hash::{key_to_field, mulmod, FingerprintKind, UniversalHash, MERSENNE_127};
use super::ExactError;
use crate::par::Exec;
use crate::wire::{Reader, WireError, Writer};

/// Build configuration for a [`TwoLevelTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactConfig {
    /// Fingerprint width in bits; a multiple of 8, at least 64.
    pub fingerprint_bits: usize,
    /// Length of the random key prefix in bytes, at least 16.
    pub prefix_len: usize,
    pub fingerprint: FingerprintKind,
    /// Resamples allowed per level before giving up.
    pub retry_cap: usize,
    pub seed: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { fingerprint_bits: 64, prefix_len: 16, fingerprint: FingerprintKind::Sha256, retry_cap: 64, seed: 0 }
    }
}

impl ExactConfig {
    pub fn with_seed(seed: u64) -> Self {
        ExactConfig { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), ExactError> {
        if self.fingerprint_bits < 64 || self.fingerprint_bits % 8 != 0 || self.fingerprint_bits > self.fingerprint.max_bits() {
            return Err(ExactError::Config("fingerprint width must be a multiple of 8 in [64, digest size]"));
        }
        if self.prefix_len < 16 {
            return Err(ExactError::Config("prefix must be at least 16 bytes"));
        }
        if self.retry_cap == 0 {
            return Err(ExactError::Config("retry cap must be positive"));
        }
        Ok(())
    }
}

/// The publicly declared part of a table: enough to compute the slot index
/// and the expected fingerprint of any key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableParams {
    /// First-level range `L = 16·|D|`.
    pub range: u64,
    pub h_r: UniversalHash,
    pub h_s: UniversalHash,
    pub prefix: Vec<u8>,
    pub fingerprint_bits: usize,
    pub fingerprint: FingerprintKind,
}

impl TableParams {
    /// Size of the virtual slot array, `L² + L`.
    pub fn virtual_size(&self) -> u64 {
        self.range * self.range + self.range
    }

    fn field(&self, key: &[u8]) -> u128 {
        // Horner over `prefix ∘ key` without concatenating.
        let shift = (0..key.len()).fold(1u128, |acc, _| mulmod(acc, 256));
        let x = mulmod(key_to_field(&self.prefix), shift) + key_to_field(key);
        if x >= MERSENNE_127 {
            x - MERSENNE_127
        } else {
            x
        }
    }

    fn slot(&self, x: u128) -> u64 {
        self.range * self.h_r.hash_field(x) + self.h_s.hash_field(x)
    }

    /// `L·h_r(r′ ∘ key) + h_s(r′ ∘ key)`.
    pub fn index_of(&self, key: &[u8]) -> u64 {
        self.slot(self.field(key))
    }

    /// Truncated digest of `r′ ∘ key`.
    pub fn fingerprint_of(&self, key: &[u8]) -> Vec<u8> {
        self.fingerprint.fingerprint(&self.prefix, key, self.fingerprint_bits)
    }

    pub fn write(&self, w: &mut Writer) {
        w.u64(self.range);
        self.h_r.write(w);
        self.h_s.write(w);
        w.bytes(&self.prefix).u16(self.fingerprint_bits as u16).u8(self.fingerprint.code());
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let range = r.u64()?;
        let h_r = UniversalHash::read(r)?;
        let h_s = UniversalHash::read(r)?;
        let prefix = r.bytes()?.to_vec();
        let fingerprint_bits = r.u16()? as usize;
        let fingerprint = FingerprintKind::from_code(r.u8()?)?;
        if range == 0 || range > u32::MAX as u64 || h_r.range != range || h_s.range != range {
            return Err(WireError::Invalid("table range"));
        }
        if fingerprint_bits % 8 != 0 || fingerprint_bits > fingerprint.max_bits() {
            return Err(WireError::Invalid("fingerprint width"));
        }
        Ok(TableParams { range, h_r, h_s, prefix, fingerprint_bits, fingerprint })
    }
}

/// Draw counts and final first-level load of a build.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrepStats {
    pub first_level_draws: usize,
    pub second_level_draws: usize,
    /// `Σ b_i²` for the accepted first-level hash.
    pub load: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry<V> {
    pub fingerprint: Vec<u8>,
    pub value: V,
}

/// Perfect-hash table over byte-string keys, stored sparsely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoLevelTable<V> {
    params: TableParams,
    entries: HashMap<u64, Entry<V>>,
    stats: PrepStats,
}

impl<V: Send + Sync> TwoLevelTable<V> {
    /// Draws `h_r` until `Σ b_i² ≤ 4n`, then a single `h_s` that separates
    /// every first-level bucket, and stores each value at
    /// `L·h_r(x) + h_s(x)` with `x = r′ ∘ key`.
    pub fn prep(items: Vec<(Vec<u8>, V)>, config: &ExactConfig, exec: Exec) -> Result<Self, ExactError> {
        config.validate()?;
        if items.is_empty() {
            return Err(ExactError::Empty);
        }
        let n = items.len() as u64;
        let range = 16 * n;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut prefix = vec![0u8; config.prefix_len];
        rng.fill(&mut prefix[..]);
        let probe = UniversalHash { a: 1, b: 0, range };
        let mut params = TableParams {
            range,
            h_r: probe,
            h_s: probe,
            prefix,
            fingerprint_bits: config.fingerprint_bits,
            fingerprint: config.fingerprint,
        };
        let fields: Vec<u128> = exec.map(&items, |(k, _)| params.field(k));
        {
            let mut seen = HashSet::with_capacity(fields.len());
            if !fields.iter().all(|x| seen.insert(*x)) {
                return Err(ExactError::DuplicateKey);
            }
        }

        let mut stats = PrepStats::default();
        let mut counts = vec![0u32; range as usize];
        let first = loop {
            if stats.first_level_draws == config.retry_cap {
                return Err(ExactError::RetryCap { level: 1 });
            }
            stats.first_level_draws += 1;
            let h = UniversalHash::random(&mut rng, range);
            counts.iter_mut().for_each(|c| *c = 0);
            for &x in &fields {
                counts[h.hash_field(x) as usize] += 1;
            }
            let load: u64 = counts.iter().map(|&b| b as u64 * b as u64).sum();
            if load <= 4 * n {
                stats.load = load;
                break h;
            }
        };
        params.h_r = first;
        let second = loop {
            if stats.second_level_draws == config.retry_cap {
                return Err(ExactError::RetryCap { level: 2 });
            }
            stats.second_level_draws += 1;
            let h = UniversalHash::random(&mut rng, range);
            params.h_s = h;
            let mut slots = HashSet::with_capacity(fields.len());
            if fields.iter().all(|&x| slots.insert(params.slot(x))) {
                break h;
            }
        };
        params.h_s = second;

        let built: Vec<(u64, Entry<V>)> = exec.map_vec(items.into_iter().zip(fields).collect(), |((key, value), x)| {
            (params.slot(x), Entry { fingerprint: params.fingerprint_of(&key), value })
        });
        Ok(TwoLevelTable { params, entries: built.into_iter().collect(), stats })
    }
}

impl<V> TwoLevelTable<V> {
    pub fn params(&self) -> &TableParams {
        &self.params
    }

    pub fn stats(&self) -> PrepStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, key: &[u8]) -> u64 {
        self.params.index_of(key)
    }

    /// Raw slot contents, without fingerprint verification.
    pub fn slot(&self, index: u64) -> Option<&Entry<V>> {
        self.entries.get(&index)
    }

    pub fn slots(&self) -> impl Iterator<Item = (u64, &Entry<V>)> {
        self.entries.iter().map(|(i, e)| (*i, e))
    }

    /// The value stored under `key`, if its fingerprint matches.
    pub fn fetch(&self, key: &[u8]) -> Option<&V> {
        let e = self.entries.get(&self.index_of(key))?;
        (e.fingerprint == self.params.fingerprint_of(key)).then_some(&e.value)
    }

    /// Params, stats, then entries sorted by slot index.
    pub fn write(&self, w: &mut Writer, mut value: impl FnMut(&V, &mut Writer)) {
        self.params.write(w);
        w.u32(self.stats.first_level_draws as u32).u32(self.stats.second_level_draws as u32).u64(self.stats.load);
        let mut idx: Vec<&u64> = self.entries.keys().collect();
        idx.sort_unstable();
        w.u32(idx.len() as u32);
        for i in idx {
            let e = &self.entries[i];
            w.u64(*i).raw(&e.fingerprint);
            value(&e.value, w);
        }
    }

    pub fn read(r: &mut Reader<'_>, mut value: impl FnMut(&mut Reader<'_>) -> Result<V, WireError>) -> Result<Self, WireError> {
        let params = TableParams::read(r)?;
        let stats = PrepStats { first_level_draws: r.u32()? as usize, second_level_draws: r.u32()? as usize, load: r.u64()? };
        let fp = params.fingerprint_bits / 8;
        let n = r.count(8 + fp)?;
        let mut entries = HashMap::with_capacity(n);
        for _ in 0..n {
            let i = r.u64()?;
            if i >= params.virtual_size() {
                return Err(WireError::Invalid("slot index"));
            }
            let fingerprint = r.take(fp)?.to_vec();
            let v = value(r)?;
            if entries.insert(i, Entry { fingerprint, value: v }).is_some() {
                return Err(WireError::Invalid("duplicate slot"));
            }
        }
        Ok(TwoLevelTable { params, entries, stats })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(n: usize) -> Vec<(Vec<u8>, usize)> {
        (0..n).map(|i| (format!("{},{}", i, i * 7 + 1).into_bytes(), i)).collect()
    }

    #[test]
    fn index_arithmetic() {
        let h = |b| UniversalHash { a: 1, b, range: 32 };
        let params = TableParams {
            range: 32,
            h_r: h(0),
            h_s: h(0),
            prefix: vec![],
            fingerprint_bits: 64,
            fingerprint: FingerprintKind::Sha256,
        };
        // With a = 1 and an empty prefix, h(x) = (x + b) mod 32 and x is the
        // big-endian value of the key bytes.
        let p = TableParams { h_r: h(3), h_s: h(7), ..params.clone() };
        assert_eq!(p.index_of(&[0]), 32 * 3 + 7);
        assert_eq!(params.index_of(&[0]), 0);
        assert_eq!(params.virtual_size(), 32 * 32 + 32);
    }

    #[test]
    fn single_record() {
        let t = TwoLevelTable::prep(keys(1), &ExactConfig::default(), Exec::Sequential).unwrap();
        assert_eq!(t.params().range, 16);
        assert_eq!(t.len(), 1);
        assert_eq!(t.fetch(b"0,1"), Some(&0));
        assert_eq!(t.fetch(b"0,2"), None);
    }

    #[test]
    fn round_trip_and_invariants() {
        let items = keys(300);
        let t = TwoLevelTable::prep(items.clone(), &ExactConfig::with_seed(5), Exec::default()).unwrap();
        assert!(t.stats().load <= 4 * 300);
        for (k, v) in &items {
            assert_eq!(t.fetch(k), Some(v));
            assert!(t.index_of(k) < t.params().virtual_size());
        }
        let idx: HashSet<u64> = items.iter().map(|(k, _)| t.index_of(k)).collect();
        assert_eq!(idx.len(), 300);
    }

    #[test]
    fn index_matches_scalar_reimplementation() {
        // Oracle: concatenate, reduce with big integers, apply both hashes.
        use rug::Integer;
        let t = TwoLevelTable::prep(keys(20), &ExactConfig::with_seed(8), Exec::Sequential).unwrap();
        let p = t.params();
        let key = b"4,29";
        let modulus = Integer::from(MERSENNE_127);
        let mut x = Integer::new();
        for &b in p.prefix.iter().chain(key.iter()) {
            x = (x * 256u32 + b) % &modulus;
        }
        let h = |u: &UniversalHash| {
            let v: Integer = (Integer::from(u.a) * &x + u.b) % &modulus % u.range;
            v.to_u64().unwrap()
        };
        assert_eq!(t.index_of(key), p.range * h(&p.h_r) + h(&p.h_s));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let items = vec![(b"1".to_vec(), 0), (b"1".to_vec(), 1)];
        assert_eq!(TwoLevelTable::prep(items, &ExactConfig::default(), Exec::Sequential).unwrap_err(), ExactError::DuplicateKey);
    }

    #[test]
    fn config_validation() {
        let bad = ExactConfig { fingerprint_bits: 32, ..Default::default() };
        assert!(TwoLevelTable::prep(keys(2), &bad, Exec::Sequential).is_err());
        let bad = ExactConfig { fingerprint: FingerprintKind::Md5, fingerprint_bits: 192, ..Default::default() };
        assert!(TwoLevelTable::prep(keys(2), &bad, Exec::Sequential).is_err());
        let bad = ExactConfig { prefix_len: 8, ..Default::default() };
        assert!(TwoLevelTable::prep(keys(2), &bad, Exec::Sequential).is_err());
    }

    #[test]
    fn fingerprint_rejects_slot_collisions() {
        // At |D| = 1 the table has only L² + L = 272 slots, so random absent
        // keys regularly land on the occupied slot.
        let t = TwoLevelTable::prep(keys(1), &ExactConfig::with_seed(1), Exec::Sequential).unwrap();
        let occupied = t.index_of(b"0,1");
        let mut collisions = 0;
        for i in 0..20_000u32 {
            let k = format!("x{i}");
            if t.index_of(k.as_bytes()) == occupied {
                collisions += 1;
                assert_eq!(t.fetch(k.as_bytes()), None);
            }
        }
        assert!(collisions > 10, "only {collisions} engineered collisions");
    }
}
