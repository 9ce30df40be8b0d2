//! Damgard-Jurik encryption.
//!
//! Layer `s` encrypts plaintexts modulo `n^s` into ciphertexts modulo
//! `n^(s+1)` as `(1+n)^m · h_s^α` with `h_s = x^(n^s)` fixed per key. A
//! ciphertext at layer `s` is itself a valid plaintext at layer `s+1`, which is
//! what the OT folding relies on.
//!
//! Public-key encryption draws `α` with `𝒩 + 64` bits. The key holder instead
//! draws `α` modulo `λ` and works modulo `p^(s+1)` and `q^(s+1)`, which yields
//! the same distribution at a fraction of the cost.

use std::sync::{Arc, OnceLock};

use rand::RngCore;
use rug::ops::Pow;
use rug::Integer;

use super::comb::FixedBase;
use super::{from_bytes, modulo, random_below, random_bits, to_fixed_bytes, CryptoError};
use crate::wire::{Reader, Writer};

const PUBLIC_WINDOW: u32 = 6;
const SECRET_WINDOW: u32 = 10;
/// Extra bits of public-path randomness beyond the modulus size.
const STATISTICAL_SLACK: u32 = 64;

/// Key sizes the protocol is specified for; others work but are non-standard.
pub const STANDARD_KEY_BITS: [u32; 2] = [1024, 2048];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    layer: u32,
    value: Integer,
}

impl Ciphertext {
    pub fn layer(&self) -> u32 {
        self.layer
    }

    pub fn value(&self) -> &Integer {
        &self.value
    }

    pub fn into_value(self) -> Integer {
        self.value
    }
}

#[derive(Debug)]
struct PkInner {
    bits: u32,
    max_layer: u32,
    /// `n^0 ..= n^(max_layer+1)`.
    n_pow: Vec<Integer>,
    /// `h[s-1] = x^(n^s) mod n^(s+1)`.
    h: Vec<Integer>,
    combs: Vec<OnceLock<FixedBase>>,
}

/// Public key; cheap to clone.
#[derive(Clone, Debug)]
pub struct PublicKey(Arc<PkInner>);

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.bits == other.0.bits && self.0.max_layer == other.0.max_layer && self.0.h == other.0.h && self.n() == other.n()
    }
}

impl Eq for PublicKey {}

fn check_bits(bits: u32) -> Result<(), CryptoError> {
    if bits < 128 || bits % 16 != 0 {
        return Err(CryptoError::KeySize(bits));
    }
    Ok(())
}

impl PublicKey {
    fn from_parts(bits: u32, max_layer: u32, n: Integer, h: Vec<Integer>) -> Self {
        let mut n_pow = vec![Integer::from(1)];
        for k in 1..=max_layer as usize + 1 {
            let next = Integer::from(&n_pow[k - 1] * &n);
            n_pow.push(next);
        }
        let combs = (0..max_layer).map(|_| OnceLock::new()).collect();
        PublicKey(Arc::new(PkInner { bits, max_layer, n_pow, h, combs }))
    }

    pub fn bits(&self) -> u32 {
        self.0.bits
    }

    pub fn max_layer(&self) -> u32 {
        self.0.max_layer
    }

    pub fn n(&self) -> &Integer {
        &self.0.n_pow[1]
    }

    /// `n^k` for `k ≤ max_layer + 1`.
    pub fn n_pow(&self, k: u32) -> &Integer {
        &self.0.n_pow[k as usize]
    }

    pub fn plaintext_modulus(&self, layer: u32) -> &Integer {
        self.n_pow(layer)
    }

    pub fn ciphertext_modulus(&self, layer: u32) -> &Integer {
        self.n_pow(layer + 1)
    }

    /// Serialized ciphertext width at `layer`, tag excluded.
    pub fn ciphertext_bytes(&self, layer: u32) -> usize {
        (layer as usize + 1) * self.0.bits as usize / 8
    }

    /// Largest byte string that always fits a layer-1 plaintext.
    pub fn block_bytes(&self) -> usize {
        self.0.bits as usize / 8 - 1
    }

    fn check_layer(&self, layer: u32) -> Result<(), CryptoError> {
        if layer == 0 || layer > self.0.max_layer {
            return Err(CryptoError::Layer { layer, max: self.0.max_layer });
        }
        Ok(())
    }

    /// `(1+n)^m mod n^(s+1)` via the binomial expansion `Σ_k C(m,k)·n^k`.
    pub fn encode(&self, m: &Integer, layer: u32) -> Integer {
        let modulus = self.ciphertext_modulus(layer);
        let mut acc = Integer::from(1);
        let mut binom = Integer::from(1);
        for k in 1..=layer {
            // C(m, k) = C(m, k-1)·(m-k+1)/k, exact.
            binom *= Integer::from(m - (k - 1));
            binom.div_exact_u_mut(k);
            if binom == 0 {
                break;
            }
            acc += Integer::from(&binom * self.n_pow(k));
        }
        acc % modulus
    }

    fn comb(&self, layer: u32) -> &FixedBase {
        self.0.combs[layer as usize - 1].get_or_init(|| {
            FixedBase::new(&self.0.h[layer as usize - 1], self.ciphertext_modulus(layer), self.0.bits + STATISTICAL_SLACK, PUBLIC_WINDOW)
        })
    }

    /// Fresh `h_s^α`.
    pub fn random_factor<R: RngCore + ?Sized>(&self, layer: u32, rng: &mut R) -> Result<Integer, CryptoError> {
        self.check_layer(layer)?;
        Ok(self.comb(layer).pow(&random_bits(rng, self.0.bits + STATISTICAL_SLACK)))
    }

    pub fn encrypt<R: RngCore + ?Sized>(&self, m: &Integer, layer: u32, rng: &mut R) -> Result<Ciphertext, CryptoError> {
        self.check_layer(layer)?;
        if *m < 0 || m >= self.plaintext_modulus(layer) {
            return Err(CryptoError::PlaintextRange);
        }
        let r = self.random_factor(layer, rng)?;
        let value = if *m == 0 { r } else { self.encode(m, layer) * r % self.ciphertext_modulus(layer) };
        Ok(Ciphertext { layer, value })
    }

    pub fn encrypt_u64<R: RngCore + ?Sized>(&self, m: u64, layer: u32, rng: &mut R) -> Result<Ciphertext, CryptoError> {
        self.encrypt(&Integer::from(m), layer, rng)
    }

    /// Wraps a raw value after range checks.
    pub fn ciphertext(&self, value: Integer, layer: u32) -> Result<Ciphertext, CryptoError> {
        self.check_layer(layer)?;
        if value <= 0 || value >= *self.ciphertext_modulus(layer) {
            return Err(CryptoError::BadCiphertext);
        }
        Ok(Ciphertext { layer, value })
    }

    fn same_layer(&self, a: &Ciphertext, b: &Ciphertext) -> Result<u32, CryptoError> {
        if a.layer != b.layer {
            return Err(CryptoError::LayerMismatch(a.layer, b.layer));
        }
        self.check_layer(a.layer)?;
        Ok(a.layer)
    }

    /// Encrypts `m₁ + m₂`.
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CryptoError> {
        let layer = self.same_layer(a, b)?;
        let value = Integer::from(&a.value * &b.value) % self.ciphertext_modulus(layer);
        Ok(Ciphertext { layer, value })
    }

    /// Encrypts `m + k` for a plaintext `k`.
    pub fn add_plain(&self, c: &Ciphertext, k: &Integer) -> Result<Ciphertext, CryptoError> {
        self.check_layer(c.layer)?;
        let k = modulo(k.clone(), self.plaintext_modulus(c.layer));
        let value = Integer::from(&c.value * &self.encode(&k, c.layer)) % self.ciphertext_modulus(c.layer);
        Ok(Ciphertext { layer: c.layer, value })
    }

    /// Encrypts `a·m`. With `a ≡ 0` the result is deterministic and must be
    /// rerandomized before it leaves the party.
    pub fn scalar_mul(&self, c: &Ciphertext, a: &Integer) -> Result<Ciphertext, CryptoError> {
        self.check_layer(c.layer)?;
        let a = modulo(a.clone(), self.plaintext_modulus(c.layer));
        let value = Integer::from(c.value.pow_mod_ref(&a, self.ciphertext_modulus(c.layer)).expect("non-negative exponent"));
        Ok(Ciphertext { layer: c.layer, value })
    }

    /// Encrypts `−m`.
    pub fn negate(&self, c: &Ciphertext) -> Result<Ciphertext, CryptoError> {
        self.check_layer(c.layer)?;
        let value = Integer::from(c.value.invert_ref(self.ciphertext_modulus(c.layer)).ok_or(CryptoError::BadCiphertext)?);
        Ok(Ciphertext { layer: c.layer, value })
    }

    /// Same plaintext, fresh randomness.
    pub fn rerandomize<R: RngCore + ?Sized>(&self, c: &Ciphertext, rng: &mut R) -> Result<Ciphertext, CryptoError> {
        let r = self.random_factor(c.layer, rng)?;
        Ok(Ciphertext { layer: c.layer, value: r * &c.value % self.ciphertext_modulus(c.layer) })
    }

    /// 2-byte layer tag, then the value as fixed-width big-endian bytes.
    pub fn write_ciphertext(&self, c: &Ciphertext, w: &mut Writer) {
        w.u16(c.layer as u16).raw(&to_fixed_bytes(&c.value, self.ciphertext_bytes(c.layer)));
    }

    pub fn read_ciphertext(&self, r: &mut Reader<'_>) -> Result<Ciphertext, CryptoError> {
        let layer = r.u16()? as u32;
        self.check_layer(layer)?;
        let value = from_bytes(r.take(self.ciphertext_bytes(layer))?);
        self.ciphertext(value, layer)
    }

    pub fn ciphertext_to_bytes(&self, c: &Ciphertext) -> Vec<u8> {
        let mut w = Writer::with_capacity(2 + self.ciphertext_bytes(c.layer));
        self.write_ciphertext(c, &mut w);
        w.finish()
    }

    pub fn ciphertext_from_bytes(&self, bytes: &[u8]) -> Result<Ciphertext, CryptoError> {
        let mut r = Reader::new(bytes);
        let c = self.read_ciphertext(&mut r)?;
        r.finish()?;
        Ok(c)
    }

    /// Modulus size, layer bound, `n`, then `h_1 … h_d`.
    pub fn write(&self, w: &mut Writer) {
        w.u16(self.0.bits as u16).u8(self.0.max_layer as u8);
        w.raw(&to_fixed_bytes(self.n(), self.0.bits as usize / 8));
        for (s, h) in self.0.h.iter().enumerate() {
            w.raw(&to_fixed_bytes(h, self.ciphertext_bytes(s as u32 + 1)));
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, CryptoError> {
        let bits = r.u16()? as u32;
        check_bits(bits)?;
        let max_layer = r.u8()? as u32;
        if max_layer == 0 {
            return Err(CryptoError::Layer { layer: 0, max: 0 });
        }
        let n = from_bytes(r.take(bits as usize / 8)?);
        if n.significant_bits() != bits || n.is_even() {
            return Err(CryptoError::KeySize(bits));
        }
        let h = (1..=max_layer)
            .map(|s| Ok(from_bytes(r.take((s as usize + 1) * bits as usize / 8)?)))
            .collect::<Result<Vec<_>, CryptoError>>()?;
        Ok(PublicKey::from_parts(bits, max_layer, n, h))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(bytes);
        let pk = Self::read(&mut r)?;
        r.finish()?;
        Ok(pk)
    }
}

/// Per-layer tables for the key holder.
#[derive(Debug)]
struct CrtLayer {
    pp: Integer,
    qq: Integer,
    /// `(q^(s+1))^(-1) mod p^(s+1)`.
    qq_inv: Integer,
    comb_p: FixedBase,
    comb_q: FixedBase,
    /// `λ^(-1) mod n^s`.
    lambda_inv: Integer,
    /// `(k!)^(-1) mod n^s` for `k = 0..=s`.
    fact_inv: Vec<Integer>,
}

/// Key pair; the secret part stays with its owner.
#[derive(Debug)]
pub struct KeyPair {
    pk: PublicKey,
    p: Integer,
    q: Integer,
    lambda: Integer,
    layers: Vec<OnceLock<CrtLayer>>,
}

fn random_prime<R: RngCore + ?Sized>(rng: &mut R, bits: u32) -> Integer {
    loop {
        let mut x = random_bits(rng, bits);
        x.set_bit(bits - 1, true);
        x.set_bit(bits - 2, true);
        x.set_bit(0, true);
        let p = x.next_prime();
        if p.significant_bits() == bits {
            return p;
        }
    }
}

impl KeyPair {
    /// Generates an `bits`-bit modulus supporting layers `1..=max_layer`.
    pub fn generate<R: RngCore + ?Sized>(bits: u32, max_layer: u32, rng: &mut R) -> Result<Self, CryptoError> {
        check_bits(bits)?;
        if max_layer == 0 || max_layer > 8 {
            return Err(CryptoError::Layer { layer: max_layer, max: 8 });
        }
        let (p, q) = loop {
            let p = random_prime(rng, bits / 2);
            let q = random_prime(rng, bits / 2);
            if p == q {
                continue;
            }
            let phi = Integer::from(&p - 1u32) * Integer::from(&q - 1u32);
            let n = Integer::from(&p * &q);
            if Integer::from(n.gcd_ref(&phi)) == 1 {
                break (p, q);
            }
        };
        let n = Integer::from(&p * &q);
        let x = loop {
            let x = random_below(rng, &n);
            if x > 1 && Integer::from(x.gcd_ref(&n)) == 1 {
                break x;
            }
        };
        let mut h = Vec::with_capacity(max_layer as usize);
        let mut n_s = Integer::from(1);
        for _ in 1..=max_layer {
            n_s *= &n;
            let modulus = Integer::from(&n_s * &n);
            h.push(Integer::from(x.pow_mod_ref(&n_s, &modulus).expect("unit")));
        }
        let lambda = Integer::from(&p - 1u32).lcm(&Integer::from(&q - 1u32));
        let pk = PublicKey::from_parts(bits, max_layer, n, h);
        let layers = (0..max_layer).map(|_| OnceLock::new()).collect();
        Ok(KeyPair { pk, p, q, lambda, layers })
    }

    pub fn public(&self) -> &PublicKey {
        &self.pk
    }

    fn crt(&self, layer: u32) -> &CrtLayer {
        self.layers[layer as usize - 1].get_or_init(|| {
            let pp = Integer::from((&self.p).pow(layer + 1));
            let qq = Integer::from((&self.q).pow(layer + 1));
            let qq_inv = Integer::from(qq.invert_ref(&pp).expect("coprime"));
            let h = &self.pk.0.h[layer as usize - 1];
            let p1 = Integer::from(&self.p - 1u32);
            let q1 = Integer::from(&self.q - 1u32);
            let comb_p = FixedBase::new(&Integer::from(h % &pp), &pp, p1.significant_bits(), SECRET_WINDOW);
            let comb_q = FixedBase::new(&Integer::from(h % &qq), &qq, q1.significant_bits(), SECRET_WINDOW);
            let ns = self.pk.plaintext_modulus(layer);
            let lambda_inv = Integer::from(self.lambda.invert_ref(ns).expect("gcd(λ, n) = 1"));
            let mut fact_inv = vec![Integer::from(1)];
            let mut fact = Integer::from(1);
            for k in 1..=layer {
                fact *= k;
                fact_inv.push(Integer::from(fact.invert_ref(ns).expect("k! < p")));
            }
            CrtLayer { pp, qq, qq_inv, comb_p, comb_q, lambda_inv, fact_inv }
        })
    }

    fn combine(&self, t: &CrtLayer, rp: Integer, rq: Integer) -> Integer {
        // x ≡ rp (mod pp), x ≡ rq (mod qq).
        let diff = Integer::from(&rp - &rq) * &t.qq_inv;
        let k = modulo(diff, &t.pp);
        rq + k * &t.qq
    }

    /// Fresh `h_s^α` with `α` uniform modulo `λ`.
    pub fn random_factor<R: RngCore + ?Sized>(&self, layer: u32, rng: &mut R) -> Result<Integer, CryptoError> {
        self.pk.check_layer(layer)?;
        let t = self.crt(layer);
        let alpha = random_below(rng, &self.lambda);
        let ap = &alpha % Integer::from(&self.p - 1u32);
        let aq = alpha % Integer::from(&self.q - 1u32);
        Ok(self.combine(t, t.comb_p.pow(&ap), t.comb_q.pow(&aq)))
    }

    /// Encryption through the secret factorization; same distribution as
    /// [`PublicKey::encrypt`].
    pub fn encrypt<R: RngCore + ?Sized>(&self, m: &Integer, layer: u32, rng: &mut R) -> Result<Ciphertext, CryptoError> {
        self.pk.check_layer(layer)?;
        if *m < 0 || m >= self.pk.plaintext_modulus(layer) {
            return Err(CryptoError::PlaintextRange);
        }
        let r = self.random_factor(layer, rng)?;
        let value = if *m == 0 { r } else { self.pk.encode(m, layer) * r % self.pk.ciphertext_modulus(layer) };
        Ok(Ciphertext { layer, value })
    }

    pub fn encrypt_u64<R: RngCore + ?Sized>(&self, m: u64, layer: u32, rng: &mut R) -> Result<Ciphertext, CryptoError> {
        self.encrypt(&Integer::from(m), layer, rng)
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<Integer, CryptoError> {
        let s = c.layer;
        self.pk.check_layer(s)?;
        if c.value <= 0 || c.value >= *self.pk.ciphertext_modulus(s) {
            return Err(CryptoError::BadCiphertext);
        }
        let t = self.crt(s);
        let cp = Integer::from(&c.value % &t.pp);
        let cq = Integer::from(&c.value % &t.qq);
        let ap = cp.secure_pow_mod(&self.lambda, &t.pp);
        let aq = cq.secure_pow_mod(&self.lambda, &t.qq);
        let a = self.combine(t, ap, aq);
        let i = self.extract(&a, s, t)?;
        Ok(i * &t.lambda_inv % self.pk.plaintext_modulus(s))
    }

    /// Recovers `i mod n^s` from `a = (1+n)^i mod n^(s+1)`.
    fn extract(&self, a: &Integer, s: u32, t: &CrtLayer) -> Result<Integer, CryptoError> {
        let n = self.pk.n();
        let mut i = Integer::new();
        for j in 1..=s {
            let nj = self.pk.n_pow(j);
            let reduced = Integer::from(a % self.pk.n_pow(j + 1)) - 1u32;
            if !reduced.is_divisible(n) {
                return Err(CryptoError::BadCiphertext);
            }
            let mut t1 = reduced.div_exact(n);
            let mut t2 = i.clone();
            for k in 2..=j {
                i -= 1u32;
                t2 = modulo(t2 * &i, nj);
                // Divide by k! via its inverse modulo n^s, reduced to n^j.
                let inv = Integer::from(&t.fact_inv[k as usize] % nj);
                let term = Integer::from(&t2 * self.pk.n_pow(k - 1)) * inv;
                t1 = modulo(t1 - term, nj);
            }
            i = modulo(t1, nj);
        }
        Ok(i)
    }

    pub fn decrypt_u64(&self, c: &Ciphertext) -> Result<u64, CryptoError> {
        self.decrypt(c)?.to_u64().ok_or(CryptoError::PlaintextRange)
    }
}
