//! Order-preserving masking: `x ↦ a·x + b` with `a ≥ 1`, applied under
//! encryption. Both members of a pair share one `(a, b)`.

use rand::{Rng, RngCore};
use rug::Integer;

use super::{Ciphertext, CryptoError, PublicKey};

/// Coefficients `a ∈ [1, 2^32)`, `b ∈ [0, 2^32)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffineMask {
    pub a: u64,
    pub b: u64,
}

impl AffineMask {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        AffineMask { a: rng.random_range(1..1u64 << 32), b: rng.random_range(0..1u64 << 32) }
    }

    pub fn apply_plain(&self, x: &Integer) -> Integer {
        Integer::from(x * self.a) + self.b
    }

    /// Rejects masks under which some `x ≤ bound` would wrap modulo `n^s`.
    pub fn check(&self, pk: &PublicKey, layer: u32, bound: &Integer) -> Result<(), CryptoError> {
        if self.a == 0 || self.apply_plain(bound) >= *pk.plaintext_modulus(layer) {
            return Err(CryptoError::RangeOverflow);
        }
        Ok(())
    }

    /// `Enc(a·x + b)` with fresh randomness.
    pub fn apply<R: RngCore + ?Sized>(&self, pk: &PublicKey, c: &Ciphertext, rng: &mut R) -> Result<Ciphertext, CryptoError> {
        let scaled = pk.scalar_mul(c, &Integer::from(self.a))?;
        let offset = pk.encrypt(&Integer::from(self.b), c.layer(), rng)?;
        pk.add(&scaled, &offset)
    }
}

/// Masks both ciphertexts with one fresh `(a, b)`. `bound` caps the
/// plaintexts.
pub fn rand_pair<R: RngCore + ?Sized>(
    pk: &PublicKey,
    c1: &Ciphertext,
    c2: &Ciphertext,
    bound: &Integer,
    rng: &mut R,
) -> Result<(Ciphertext, Ciphertext), CryptoError> {
    rand_pair_with(pk, c1, c2, AffineMask::random(rng), bound, rng)
}

pub fn rand_pair_with<R: RngCore + ?Sized>(
    pk: &PublicKey,
    c1: &Ciphertext,
    c2: &Ciphertext,
    mask: AffineMask,
    bound: &Integer,
    rng: &mut R,
) -> Result<(Ciphertext, Ciphertext), CryptoError> {
    if c1.layer() != c2.layer() {
        return Err(CryptoError::LayerMismatch(c1.layer(), c2.layer()));
    }
    mask.check(pk, c1.layer(), bound)?;
    Ok((mask.apply(pk, c1, rng)?, mask.apply(pk, c2, rng)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyPair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn affine_example_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let kp = KeyPair::generate(256, 1, &mut rng).unwrap();
        let pk = kp.public();
        let bound = Integer::from(1000);
        let e = |m: u64, rng: &mut ChaCha8Rng| pk.encrypt_u64(m, 1, rng).unwrap();
        let (c1, c2) = (e(5, &mut rng), e(9, &mut rng));
        let (x, y) = rand_pair_with(pk, &c1, &c2, AffineMask { a: 3, b: 7 }, &bound, &mut rng).unwrap();
        assert_eq!((kp.decrypt_u64(&x).unwrap(), kp.decrypt_u64(&y).unwrap()), (22, 34));
        let (c3, c4) = (e(4, &mut rng), e(4, &mut rng));
        let (x, y) = rand_pair(pk, &c3, &c4, &bound, &mut rng).unwrap();
        assert_eq!(kp.decrypt(&x).unwrap(), kp.decrypt(&y).unwrap());
    }

    #[test]
    fn overflow_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let kp = KeyPair::generate(128, 1, &mut rng).unwrap();
        let pk = kp.public();
        let c = pk.encrypt_u64(1, 1, &mut rng).unwrap();
        let bound = Integer::from(pk.n() >> 16u32);
        let mask = AffineMask { a: 1 << 31, b: 0 };
        assert_eq!(rand_pair_with(pk, &c, &c, mask, &bound, &mut rng), Err(CryptoError::RangeOverflow));
    }
}
