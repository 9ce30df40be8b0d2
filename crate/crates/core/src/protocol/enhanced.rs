use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::ProtocolError;
use crate::lsh::LshIndex;
use crate::rules::RuleId;

/// Key of the bucket `sig` of a `bits`-bit signature map under `prefix`:
/// the prefix bytes, then the signature in `⌈bits/8⌉` big-endian bytes.
pub fn enhanced_key(prefix: &[u8], sig: u64, bits: usize) -> Vec<u8> {
    let n = bits.div_ceil(8);
    let mut key = Vec::with_capacity(prefix.len() + n);
    key.extend_from_slice(prefix);
    key.extend_from_slice(&sig.to_be_bytes()[8 - n..]);
    key
}

/// One record per non-empty bucket of every signature map, keyed by that
/// map's random prefix and the bucket signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnhancedDb {
    /// One prefix per map, in `(m, l)` scan order.
    pub prefixes: Vec<Vec<u8>>,
    /// `(key, rules sharing the bucket)` with rules in bucket order.
    pub records: Vec<(Vec<u8>, Vec<RuleId>)>,
    /// Rules folded into another rule's record because they share a bucket.
    pub merged: usize,
}

impl EnhancedDb {
    /// Number of signature maps `l`.
    pub fn maps(&self) -> usize {
        self.prefixes.len()
    }

    /// Largest bucket.
    pub fn max_bucket(&self) -> usize {
        self.records.iter().map(|(_, ids)| ids.len()).max().unwrap_or(0)
    }
}

/// Draws `l = Σ L_m` random `prefix_bits`-bit prefixes and keys every
/// bucket of `index` with them.
pub fn build_enhanced_db(index: &LshIndex, prefix_bits: usize, seed: u64) -> Result<EnhancedDb, ProtocolError> {
    if prefix_bits < 64 || prefix_bits % 8 != 0 {
        return Err(ProtocolError::Config("prefix width must be a multiple of 8, at least 64"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pairs = index.params().table_pairs();
    let prefixes: Vec<Vec<u8>> = pairs
        .iter()
        .map(|_| {
            let mut p = vec![0u8; prefix_bits / 8];
            rng.fill(&mut p[..]);
            p
        })
        .collect();
    let mut records = Vec::new();
    let mut merged = 0;
    for (&(m, l), prefix) in pairs.iter().zip(&prefixes) {
        let bits = index.params().levels[m].bits;
        let mut buckets: Vec<(u64, &[RuleId])> = index.buckets(m, l).collect();
        buckets.sort_unstable_by_key(|b| b.0);
        for (sig, ids) in buckets {
            merged += ids.len() - 1;
            records.push((enhanced_key(prefix, sig, bits), ids.to_vec()));
        }
    }
    Ok(EnhancedDb { prefixes, records, merged })
}
