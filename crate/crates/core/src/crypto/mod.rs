//! Homomorphic encryption and the two-party primitives built on it.
//!
//! * [`dj`]: Damgard-Jurik encryption with layered plaintext spaces.
//! * [`ot`]: 1-of-n oblivious transfer by layered homomorphic folding.
//! * [`rand_pair`]: order-preserving affine masking of ciphertexts.
//! * [`sortnet`]: Batcher odd-even merge networks and replay.

mod comb;
pub mod dj;
mod multiexp;
pub mod ot;
pub mod rand_pair;
pub mod sortnet;

use rand::RngCore;
use rug::integer::Order;
use rug::Integer;
use thiserror::Error;

pub use dj::{Ciphertext, KeyPair, PublicKey};
pub use multiexp::multi_exp;
pub use ot::{OtQuery, OtReply, OtShape};
pub use rand_pair::{rand_pair, AffineMask};
pub use sortnet::{apply_sort, comparison_pairs, sort_outcomes, Outcome};

use crate::wire::WireError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unsupported key size {0} bits")]
    KeySize(u32),
    #[error("layer {layer} outside 1..={max}")]
    Layer { layer: u32, max: u32 },
    #[error("layer mismatch: {0} vs {1}")]
    LayerMismatch(u32, u32),
    #[error("plaintext does not fit the plaintext space")]
    PlaintextRange,
    #[error("ciphertext is not a unit modulo n^(s+1)")]
    BadCiphertext,
    #[error("index {index} outside a database of {n} entries")]
    IndexRange { index: u64, n: u64 },
    #[error("malformed OT query: {0}")]
    Query(&'static str),
    #[error("affine mask overflows the plaintext space")]
    RangeOverflow,
    #[error("outcome list does not match the network size")]
    Outcomes,
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Uniform integer with exactly `bits` random bits (the top bit may be 0).
pub fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u32) -> Integer {
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    Integer::from_digits(&buf, Order::MsfBe).keep_bits(bits)
}

/// Uniform integer in `[0, bound)` by rejection sampling.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &Integer) -> Integer {
    assert!(*bound > 0, "empty range");
    let bits = bound.significant_bits();
    loop {
        let x = random_bits(rng, bits);
        if x < *bound {
            return x;
        }
    }
}

/// Big-endian bytes of `x`, left-padded to `width`.
pub(crate) fn to_fixed_bytes(x: &Integer, width: usize) -> Vec<u8> {
    let mut out = vec![0u8; width];
    let digits = x.significant_digits::<u8>();
    assert!(digits <= width, "value wider than field");
    x.write_digits(&mut out[width - digits..], Order::MsfBe);
    out
}

pub(crate) fn from_bytes(bytes: &[u8]) -> Integer {
    Integer::from_digits(bytes, Order::MsfBe)
}

/// `x mod m` in `[0, m)`.
pub(crate) fn modulo(x: Integer, m: &Integer) -> Integer {
    let mut r = x % m;
    if r < 0 {
        r += m;
    }
    r
}
