use rand::Rng;
use sha2::{Digest, Sha256};

use crate::wire::{Reader, WireError, Writer};

/// `2^127 − 1`, the modulus for universal hashing of byte strings.
pub const MERSENNE_127: u128 = (1 << 127) - 1;

fn reduce(x: u128) -> u128 {
    let r = (x & MERSENNE_127) + (x >> 127);
    if r >= MERSENNE_127 {
        r - MERSENNE_127
    } else {
        r
    }
}

/// `a·b mod (2^127 − 1)` for `a, b < 2^127`.
pub fn mulmod(a: u128, b: u128) -> u128 {
    const LO: u128 = u64::MAX as u128;
    let (a0, a1) = (a & LO, a >> 64);
    let (b0, b1) = (b & LO, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    // 256-bit product as (hi, lo); the cross terms are below 2^128 each.
    let (mid, carry_mid) = p01.overflowing_add(p10);
    let (lo, carry_lo) = p00.overflowing_add(mid << 64);
    let hi = p11 + (mid >> 64) + ((carry_mid as u128) << 64) + carry_lo as u128;
    // 2^128 ≡ 2, and hi < 2^126.
    reduce(reduce(lo) + 2 * hi)
}

/// Horner reduction of a byte string (base 256) modulo `2^127 − 1`.
pub fn key_to_field(key: &[u8]) -> u128 {
    key.iter().fold(0u128, |acc, &b| reduce(mulmod(acc, 256) + b as u128))
}

/// `h(x) = ((a·x + b) mod P) mod range` with `P = 2^127 − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniversalHash {
    pub a: u128,
    pub b: u128,
    pub range: u64,
}

impl UniversalHash {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, range: u64) -> Self {
        UniversalHash { a: rng.random_range(1..MERSENNE_127), b: rng.random_range(0..MERSENNE_127), range }
    }

    pub fn hash_field(&self, x: u128) -> u64 {
        (reduce(mulmod(self.a, x) + self.b) % self.range as u128) as u64
    }

    pub fn hash(&self, key: &[u8]) -> u64 {
        self.hash_field(key_to_field(key))
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.u64((self.a >> 64) as u64).u64(self.a as u64).u64((self.b >> 64) as u64).u64(self.b as u64).u64(self.range);
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let a = ((r.u64()? as u128) << 64) | r.u64()? as u128;
        let b = ((r.u64()? as u128) << 64) | r.u64()? as u128;
        let range = r.u64()?;
        if a == 0 || a >= MERSENNE_127 || b >= MERSENNE_127 || range == 0 {
            return Err(WireError::Invalid("hash coefficients"));
        }
        Ok(UniversalHash { a, b, range })
    }
}

/// Digest behind the record fingerprint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FingerprintKind {
    #[default]
    Sha256,
    /// Compatibility mode; not collision resistant.
    Md5,
}

impl FingerprintKind {
    pub fn max_bits(self) -> usize {
        match self {
            FingerprintKind::Sha256 => 256,
            FingerprintKind::Md5 => 128,
        }
    }

    /// Leading `bits / 8` bytes of the digest of `prefix ∘ key`.
    pub fn fingerprint(self, prefix: &[u8], key: &[u8], bits: usize) -> Vec<u8> {
        let mut out = match self {
            FingerprintKind::Sha256 => Sha256::new().chain_update(prefix).chain_update(key).finalize().to_vec(),
            FingerprintKind::Md5 => md5::Md5::new().chain_update(prefix).chain_update(key).finalize().to_vec(),
        };
        out.truncate(bits / 8);
        out
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            FingerprintKind::Sha256 => 1,
            FingerprintKind::Md5 => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self, WireError> {
        match c {
            1 => Ok(FingerprintKind::Sha256),
            2 => Ok(FingerprintKind::Md5),
            _ => Err(WireError::Invalid("fingerprint kind")),
        }
    }
}
