//! 1-of-n oblivious transfer by layered homomorphic folding.
//!
//! The index is written in mixed radix over a shape `n₁ × … × n_d`. The
//! client sends, per dimension `k`, encryptions at layer `k` of the unit
//! vector selecting digit `k`. The server folds dimension 1 with the blocks
//! as exponents, then treats each layer-`k` result as a plaintext of layer
//! `k+1` and folds the next dimension. One layer-`d` ciphertext comes back.
//!
//! Databases are sparse: absent slots hold the all-zero block. Every group
//! of a layer, occupied or not, is multiplied by one fresh encryption, so
//! empty groups share a single value that is computed once.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rug::Integer;

use super::{modulo, multi_exp, Ciphertext, CryptoError, KeyPair, PublicKey};
use crate::par::Exec;
use crate::wire::{Reader, Writer};

/// Dimension sizes `n₁ … n_d` of the index space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtShape {
    dims: Vec<u64>,
}

fn root_ceil(n: u64, d: usize) -> u64 {
    if d == 1 || n <= 1 {
        return n.max(1);
    }
    let mut r = (n as f64).powf(1.0 / d as f64).floor().max(1.0) as u64;
    while (r as u128).pow(d as u32) < n as u128 {
        r += 1;
    }
    while r > 1 && ((r - 1) as u128).pow(d as u32) >= n as u128 {
        r -= 1;
    }
    r
}

impl OtShape {
    pub fn new(dims: Vec<u64>) -> Result<Self, CryptoError> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(CryptoError::Query("every dimension needs at least one slot"));
        }
        Ok(OtShape { dims })
    }

    /// `d` dimensions of size about `n^(1/d)`, each as small as possible.
    pub fn balanced(n: u64, d: usize) -> Result<Self, CryptoError> {
        if d == 0 {
            return Err(CryptoError::Query("zero dimensions"));
        }
        let mut rem = n.max(1);
        let mut dims = Vec::with_capacity(d);
        for j in 0..d {
            let nj = root_ceil(rem, d - j);
            dims.push(nj);
            rem = rem.div_ceil(nj);
        }
        Self::new(dims)
    }

    /// Balanced leading dimensions and a last dimension of `tail` slots.
    pub fn with_tail(n: u64, d: usize, tail: u64) -> Result<Self, CryptoError> {
        if d < 2 || tail == 0 {
            return Self::balanced(n, d);
        }
        let tail = tail.min(n.max(1));
        let mut dims = Self::balanced(n.max(1).div_ceil(tail), d - 1)?.dims;
        dims.push(tail);
        Self::new(dims)
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn depth(&self) -> usize {
        self.dims.len()
    }

    pub fn capacity(&self) -> u128 {
        self.dims.iter().map(|&x| x as u128).product()
    }

    /// Ciphertexts per query, `Σ n_k`.
    pub fn query_len(&self) -> u64 {
        self.dims.iter().sum()
    }

    /// Mixed-radix digits of `i`, least significant first.
    pub fn digits(&self, mut i: u64) -> Vec<u64> {
        self.dims
            .iter()
            .map(|&nk| {
                let d = i % nk;
                i /= nk;
                d
            })
            .collect()
    }

    pub fn write(&self, w: &mut Writer) {
        w.u8(self.dims.len() as u8);
        for &d in &self.dims {
            w.u64(d);
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, CryptoError> {
        let d = r.u8()? as usize;
        Self::new((0..d).map(|_| r.u64()).collect::<Result<_, _>>()?)
    }
}

/// Per-dimension selection vectors; dimension `k` is at layer `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtQuery {
    pub sel: Vec<Vec<Ciphertext>>,
}

/// One layer-`d` ciphertext per chunk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtReply {
    pub chunks: Vec<Ciphertext>,
}

fn check_index(i: u64, n: u64, shape: &OtShape) -> Result<(), CryptoError> {
    if i >= n || (n as u128) > shape.capacity() {
        return Err(CryptoError::IndexRange { index: i, n });
    }
    Ok(())
}

/// Encrypted unit vectors selecting `i` among `n` slots.
pub fn ot_query<R: RngCore + ?Sized>(
    i: u64,
    n: u64,
    shape: &OtShape,
    kp: &KeyPair,
    rng: &mut R,
    exec: Exec,
) -> Result<OtQuery, CryptoError> {
    check_index(i, n, shape)?;
    if shape.depth() as u32 > kp.public().max_layer() {
        return Err(CryptoError::Layer { layer: shape.depth() as u32, max: kp.public().max_layer() });
    }
    let digits = shape.digits(i);
    let mut sel = Vec::with_capacity(shape.depth());
    for (k, (&nk, &dk)) in shape.dims.iter().zip(&digits).enumerate() {
        let seeds: Vec<[u8; 32]> = (0..nk).map(|_| rng.random()).collect();
        let layer = k as u32 + 1;
        let v = exec.map_range(nk as usize, |j| {
            let mut r = ChaCha20Rng::from_seed(seeds[j]);
            kp.encrypt_u64((j as u64 == dk) as u64, layer, &mut r)
        });
        sel.push(v.into_iter().collect::<Result<Vec<_>, _>>()?);
    }
    Ok(OtQuery { sel })
}

impl OtQuery {
    /// Structural checks against the shape and key.
    pub fn validate(&self, shape: &OtShape, pk: &PublicKey) -> Result<(), CryptoError> {
        if self.sel.len() != shape.depth() || shape.depth() as u32 > pk.max_layer() {
            return Err(CryptoError::Query("depth"));
        }
        for (k, (v, &nk)) in self.sel.iter().zip(&shape.dims).enumerate() {
            if v.len() as u64 != nk {
                return Err(CryptoError::Query("dimension size"));
            }
            if v.iter().any(|c| c.layer() != k as u32 + 1) {
                return Err(CryptoError::Query("layer"));
            }
        }
        Ok(())
    }

    pub fn write(&self, pk: &PublicKey, w: &mut Writer) {
        w.u8(self.sel.len() as u8);
        for v in &self.sel {
            w.u32(v.len() as u32);
            for c in v {
                pk.write_ciphertext(c, w);
            }
        }
    }

    pub fn read(pk: &PublicKey, r: &mut Reader<'_>) -> Result<Self, CryptoError> {
        let d = r.u8()? as usize;
        let mut sel = Vec::with_capacity(d);
        for k in 0..d {
            let len = r.count(2 + pk.ciphertext_bytes(k as u32 + 1))?;
            sel.push((0..len).map(|_| pk.read_ciphertext(r)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(OtQuery { sel })
    }
}

impl OtReply {
    pub fn write(&self, pk: &PublicKey, w: &mut Writer) {
        w.u32(self.chunks.len() as u32);
        for c in &self.chunks {
            pk.write_ciphertext(c, w);
        }
    }

    pub fn read(pk: &PublicKey, r: &mut Reader<'_>) -> Result<Self, CryptoError> {
        let n = r.count(2)?;
        Ok(OtReply { chunks: (0..n).map(|_| pk.read_ciphertext(r)).collect::<Result<_, _>>()? })
    }
}

/// Sparse database: `(slot, block)` pairs with distinct slots below `n` and
/// blocks below the key modulus. Zero blocks may be omitted.
pub type SparseBlocks = Vec<(u64, Integer)>;

/// Converts a dense vector, dropping zero blocks.
pub fn sparse_from_dense(v: &[Integer]) -> SparseBlocks {
    v.iter().enumerate().filter(|(_, b)| **b != 0).map(|(i, b)| (i as u64, b.clone())).collect()
}

/// Folds every chunk database against one query. `offsets[c]` is added to
/// chunk `c` under encryption (use zeros for plain retrieval).
#[allow(clippy::too_many_arguments)]
pub fn ot_reply<R: RngCore + ?Sized>(
    query: &OtQuery,
    shape: &OtShape,
    n: u64,
    chunks: &[SparseBlocks],
    offsets: &[Integer],
    pk: &PublicKey,
    rng: &mut R,
    exec: Exec,
) -> Result<OtReply, CryptoError> {
    query.validate(shape, pk)?;
    if (n as u128) > shape.capacity() || offsets.len() != chunks.len() {
        return Err(CryptoError::Query("database does not match the shape"));
    }
    let out = chunks
        .iter()
        .zip(offsets)
        .map(|(blocks, off)| fold(query, shape, n, blocks, off, pk, rng, exec))
        .collect::<Result<_, _>>()?;
    Ok(OtReply { chunks: out })
}

#[allow(clippy::too_many_arguments)]
fn fold<R: RngCore + ?Sized>(
    query: &OtQuery,
    shape: &OtShape,
    n: u64,
    blocks: &SparseBlocks,
    offset: &Integer,
    pk: &PublicKey,
    rng: &mut R,
    exec: Exec,
) -> Result<Ciphertext, CryptoError> {
    let mut cur: Vec<(u64, Integer)> = Vec::with_capacity(blocks.len());
    for (i, b) in blocks {
        if *i >= n {
            return Err(CryptoError::IndexRange { index: *i, n });
        }
        if *b < 0 || b >= pk.n() {
            return Err(CryptoError::PlaintextRange);
        }
        if *b != 0 {
            cur.push((*i, b.clone()));
        }
    }
    // Plaintext held by every empty position of the current layer.
    let mut default = Integer::new();
    for (k, (&nk, sel)) in shape.dims.iter().zip(&query.sel).enumerate() {
        let layer = k as u32 + 1;
        let modulus = pk.ciphertext_modulus(layer);
        let pmod = pk.plaintext_modulus(layer);
        let mut groups: BTreeMap<u64, (Vec<&Integer>, Vec<Integer>)> = BTreeMap::new();
        for (idx, x) in &cur {
            let g = groups.entry(idx / nk).or_default();
            g.0.push(sel[(idx % nk) as usize].value());
            g.1.push(modulo(Integer::from(x - &default), pmod));
        }
        // Σ_j sel_j = Enc(1), so its `default`-th power encrypts `default`.
        let base = if default == 0 {
            Integer::from(1)
        } else {
            let all = sel.iter().fold(Integer::from(1), |acc, c| acc * c.value() % modulus);
            all.pow_mod(&default, modulus).expect("non-negative exponent")
        };
        let zero = Integer::new();
        let z = pk.encrypt(if k == 0 { offset } else { &zero }, layer, rng)?;
        let shift = Integer::from(&base * z.value()) % modulus;
        let groups: Vec<_> = groups.into_iter().collect();
        cur = exec.map(&groups, |(key, (bases, exps))| {
            let exps: Vec<&Integer> = exps.iter().collect();
            (*key, multi_exp(bases, &exps, modulus) * &shift % modulus)
        });
        default = shift;
    }
    let value = cur.into_iter().next().map(|(_, v)| v).unwrap_or(default);
    pk.ciphertext(value, shape.depth() as u32)
}

/// Peels the layers of each chunk ciphertext.
pub fn ot_extract(reply: &OtReply, kp: &KeyPair) -> Result<Vec<Integer>, CryptoError> {
    reply
        .chunks
        .iter()
        .map(|c| {
            let mut c = c.clone();
            loop {
                let v = kp.decrypt(&c)?;
                if c.layer() == 1 {
                    return Ok(v);
                }
                c = kp.public().ciphertext(v, c.layer() - 1)?;
            }
        })
        .collect()
}
