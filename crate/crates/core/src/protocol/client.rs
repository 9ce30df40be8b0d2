use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rug::integer::Order;
use rug::Integer;

use super::enhanced::enhanced_key;
use super::message::{Codec, Message, Mode, PublicParams, SessionInit, SortRequest, Stage, PROTOCOL_VERSION};
use super::{ProtocolError, StageTimings};
use crate::crypto::ot::{ot_extract, ot_query};
use crate::crypto::sortnet::replay;
use crate::crypto::{rand_pair, AffineMask, Ciphertext, KeyPair, OtShape, Outcome, PublicKey};
use crate::exact::{encode_itemset, subsets_up_to, ExactError};
use crate::lsh::{query_vector, GaussianBank};
use crate::par::Exec;
use crate::rules::{
    CriterionError, ItemId, ItemSet, MonotoneMap, OrderingFunction, OrderingKind, RuleId, Transaction, Weight,
};

/// A request/response link to a server session.
pub trait Channel {
    /// Sends `msg` and waits for the answer, using `codec` for both.
    fn call(&mut self, codec: &Codec, msg: &Message) -> Result<Message, ProtocolError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClientConfig {
    /// Modulus size of the client's OT key.
    pub key_bits: u32,
    /// Dimensions of the record OT; the key supports this many layers.
    pub ot_dims: usize,
    pub mode: Mode,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig { key_bits: 1024, ot_dims: 3, mode: Mode::Exact, seed: 0, exec: Exec::default() }
    }
}

/// One rule of a retrieved record, its weight encrypted under the server key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchedEntry {
    pub rule_id: RuleId,
    pub antecedent_len: u32,
    /// Pseudonymous antecedent; empty for exact records.
    pub antecedent: ItemSet,
    /// Pseudonymous consequent.
    pub consequent: ItemSet,
    pub weight: Ciphertext,
}

/// Outcome of a two-party sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortResult {
    /// Input indices, largest value first, equal values in input order.
    pub order: Vec<usize>,
    /// `tie_with_next[i]`: the values at ranks `i` and `i + 1` are equal.
    pub tie_with_next: Vec<bool>,
}

/// Final list of a private query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrivateAnswer {
    pub items: Vec<ItemId>,
    /// Nothing qualified and the server's default list was returned.
    pub default_used: bool,
    /// Rule chosen by an approximate top-1 query.
    pub rule: Option<RuleId>,
    /// Record retrievals issued.
    pub fetches: usize,
    pub timings: StageTimings,
}

/// Client side of one session.
pub struct ClientSession<C: Channel> {
    chan: C,
    codec: Codec,
    key: KeyPair,
    params: PublicParams,
    rng: ChaCha20Rng,
    exec: Exec,
    timings: StageTimings,
}

impl<C: Channel> ClientSession<C> {
    /// Generates a key with `ot_dims` layers and performs the handshake.
    pub fn open(mut chan: C, config: &ClientConfig) -> Result<Self, ProtocolError> {
        if config.ot_dims == 0 || config.ot_dims > 8 {
            return Err(ProtocolError::Config("OT dimensions must lie in 1..=8"));
        }
        let started = Instant::now();
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let key = KeyPair::generate(config.key_bits, config.ot_dims as u32, &mut rng)?;
        let mut codec = Codec { client: Some(key.public().clone()), server: None };
        let init = Message::SessionInit(SessionInit { version: PROTOCOL_VERSION, mode: config.mode, client_key: key.public().clone() });
        let params = match chan.call(&codec, &init)? {
            Message::PublicParams(p) => *p,
            Message::Error(e) => return Err(ProtocolError::Remote(e)),
            other => return Err(ProtocolError::Unexpected { got: other.kind() }),
        };
        if params.mode != config.mode || (params.mode == Mode::Approx) != params.approx.is_some() {
            return Err(ProtocolError::State("server answered with parameters for another mode"));
        }
        if params.fetch_shape.depth() > config.ot_dims || params.anon_shape.depth() > config.ot_dims {
            return Err(ProtocolError::State("server chose a deeper OT than the key supports"));
        }
        codec.server = Some(params.server_key.clone());
        let mut timings = StageTimings::default();
        timings.add("init", started.elapsed());
        Ok(ClientSession { chan, codec, key, params, rng, exec: config.exec, timings })
    }

    pub fn params(&self) -> &PublicParams {
        &self.params
    }

    pub fn key(&self) -> &KeyPair {
        &self.key
    }

    pub fn timings(&self) -> &StageTimings {
        &self.timings
    }

    pub fn channel(&self) -> &C {
        &self.chan
    }

    fn server_key(&self) -> &PublicKey {
        &self.params.server_key
    }

    fn call(&mut self, msg: Message) -> Result<Message, ProtocolError> {
        match self.chan.call(&self.codec, &msg)? {
            Message::Error(e) => Err(ProtocolError::Remote(e)),
            m => Ok(m),
        }
    }

    /// One OT batch against a server table: returns the blocks of every
    /// reply and the unmasking ciphertexts.
    fn ot_batch(
        &mut self,
        stage: Stage,
        indices: &[u64],
        n: u64,
        shape: &OtShape,
    ) -> Result<(Vec<Vec<Integer>>, Vec<Ciphertext>), ProtocolError> {
        let mut queries = Vec::with_capacity(indices.len());
        for &i in indices {
            queries.push(ot_query(i, n, shape, &self.key, &mut self.rng, self.exec)?);
        }
        let (got_stage, replies, unmask) = match self.call(Message::OtQueryBatch { stage, queries })? {
            Message::OtReplyBatch { stage, replies, unmask } => (stage, replies, unmask),
            other => return Err(ProtocolError::Unexpected { got: other.kind() }),
        };
        if got_stage != stage || replies.len() != indices.len() {
            return Err(ProtocolError::State("reply batch does not match the query batch"));
        }
        let key = &self.key;
        let blocks = self.exec.map(&replies, |r| ot_extract(r, key));
        Ok((blocks.into_iter().collect::<Result<_, _>>()?, unmask))
    }

    /// Pseudonyms of the frequent items of `t`.
    pub fn anonymize(&mut self, t: &Transaction) -> Result<ItemSet, ProtocolError> {
        let cap = self.params.transaction_cap as usize;
        if t.len() > cap {
            return Err(ExactError::TransactionTooLarge { len: t.len(), cap }.into());
        }
        let started = Instant::now();
        let n = self.params.anon_slots;
        // Items the table does not cover ask for the sentinel slot.
        let indices: Vec<u64> = t.iter().map(|i| if (i as u64) < n { i as u64 } else { 0 }).collect();
        let shape = self.params.anon_shape.clone();
        let (blocks, _) = self.ot_batch(Stage::Anonymize, &indices, n, &shape)?;
        let mut out = Vec::with_capacity(blocks.len());
        for b in blocks {
            let v = b.first().and_then(Integer::to_u32).ok_or(ProtocolError::State("malformed pseudonym"))?;
            if v != 0 {
                out.push(v);
            }
        }
        self.timings.add("anonymize", started.elapsed());
        Ok(ItemSet::new(out))
    }

    /// Real ids of pseudonyms; `None` for the sentinel.
    pub fn deanonymize(&mut self, ids: &[ItemId]) -> Result<Vec<Option<ItemId>>, ProtocolError> {
        if ids.is_empty() {
            return Ok(Vec::new());
        }
        let started = Instant::now();
        let n = self.params.deanon_slots;
        let indices: Vec<u64> = ids.iter().map(|&a| if (a as u64) < n { a as u64 } else { 0 }).collect();
        let shape = self.params.deanon_shape.clone();
        let (blocks, _) = self.ot_batch(Stage::Deanonymize, &indices, n, &shape)?;
        let out = blocks
            .into_iter()
            .map(|b| b.first().and_then(Integer::to_u32).map(|v| (v != 0).then_some(v)))
            .collect::<Option<Vec<_>>>()
            .ok_or(ProtocolError::State("malformed item id"))?;
        self.timings.add("deanonymize", started.elapsed());
        Ok(out)
    }

    /// Retrieves the record stored under each key; `None` when the slot is
    /// empty or holds another key.
    pub fn fetch(&mut self, keys: &[Vec<u8>]) -> Result<Vec<Option<Vec<FetchedEntry>>>, ProtocolError> {
        if keys.is_empty() {
            return Ok(Vec::new());
        }
        let started = Instant::now();
        let table = self.params.table.clone();
        let indices: Vec<u64> = keys.iter().map(|k| table.index_of(k)).collect();
        let shape = self.params.fetch_shape.clone();
        let (blocks, unmask) = self.ot_batch(Stage::Fetch, &indices, table.virtual_size(), &shape)?;
        let layout = &self.params.layout;
        let per = layout.entries as usize;
        if unmask.len() != keys.len() * per {
            return Err(ProtocolError::State("unmasking ciphertexts do not match the batch"));
        }
        let spk = &self.params.server_key;
        let mut out = Vec::with_capacity(keys.len());
        for (q, (key, b)) in keys.iter().zip(&blocks).enumerate() {
            let expected = Integer::from_digits(&table.fingerprint_of(key), Order::MsfBe);
            if layout.fingerprint(b)? != expected {
                out.push(None);
                continue;
            }
            let Ok(entries) = layout.unpack(b) else {
                out.push(None);
                continue;
            };
            let mut fetched = Vec::with_capacity(entries.len());
            for (e, entry) in entries.into_iter().enumerate() {
                fetched.push(FetchedEntry {
                    rule_id: entry.rule_id,
                    antecedent_len: entry.antecedent_len,
                    antecedent: entry.antecedent,
                    consequent: entry.consequent,
                    weight: spk.add_plain(&unmask[q * per + e], &entry.weight)?,
                });
            }
            out.push(Some(fetched));
        }
        self.timings.add("fetch", started.elapsed());
        Ok(out)
    }

    /// For each encrypted weight, whether it is at least `w`. Every pair is
    /// masked with its own coefficients.
    pub fn threshold(&mut self, weights: &[Ciphertext], w: Weight) -> Result<Vec<bool>, ProtocolError> {
        if weights.is_empty() {
            return Ok(Vec::new());
        }
        let started = Instant::now();
        let spk = self.params.server_key.clone();
        let bound = Integer::from(u64::MAX);
        let mut pairs = Vec::with_capacity(weights.len());
        for c in weights {
            let wc = spk.encrypt_u64(w, 1, &mut self.rng)?;
            pairs.push(rand_pair(&spk, c, &wc, &bound, &mut self.rng)?);
        }
        let outcomes = match self.call(Message::SortPairs(SortRequest::Threshold(pairs)))? {
            Message::SortOutcomes(o) => o,
            other => return Err(ProtocolError::Unexpected { got: other.kind() }),
        };
        if outcomes.len() != weights.len() {
            return Err(ProtocolError::State("outcome count"));
        }
        self.timings.add("threshold", started.elapsed());
        Ok(outcomes.into_iter().map(|o| o != Outcome::Less).collect())
    }

    /// Sorts encrypted values in descending order. The values are shuffled
    /// and masked with one shared order-preserving map; the server runs the
    /// sorting network on the masked plaintexts and returns the outcomes.
    /// `bound` caps every plaintext.
    pub fn sort(&mut self, values: &[Ciphertext], bound: &Integer) -> Result<SortResult, ProtocolError> {
        let n = values.len();
        if n <= 1 {
            return Ok(SortResult { order: (0..n).collect(), tie_with_next: vec![false; n] });
        }
        let started = Instant::now();
        let spk = self.params.server_key.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut self.rng);
        let mask = AffineMask::random(&mut self.rng);
        mask.check(&spk, 1, bound)?;
        let mut masked = Vec::with_capacity(n);
        for &j in &perm {
            masked.push(mask.apply(&spk, &values[j], &mut self.rng)?);
        }
        let outcomes = match self.call(Message::SortPairs(SortRequest::Sort(masked)))? {
            Message::SortOutcomes(o) => o,
            other => return Err(ProtocolError::Unexpected { got: other.kind() }),
        };
        let (shuffled, seen) = replay(n, &outcomes)?;
        let mut tie_with_next = Vec::with_capacity(n);
        for w in shuffled.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            // Neighbours in the output of a sorting network are always compared directly.
            let o = seen.get(&key).ok_or(ProtocolError::State("adjacent ranks were never compared"))?;
            tie_with_next.push(*o == Outcome::Equal);
        }
        tie_with_next.push(false);
        let mut order: Vec<usize> = shuffled.iter().map(|&s| perm[s]).collect();
        // Restore input order inside every run of equal values.
        let mut start = 0;
        for i in 0..n {
            if !tie_with_next[i] {
                order[start..=i].sort_unstable();
                start = i + 1;
            }
        }
        self.timings.add("sort", started.elapsed());
        Ok(SortResult { order, tie_with_next })
    }

    /// Ends the session and returns the channel.
    pub fn close(mut self) -> Result<C, ProtocolError> {
        match self.call(Message::SessionClose)? {
            Message::SessionClose => Ok(self.chan),
            other => Err(ProtocolError::Unexpected { got: other.kind() }),
        }
    }

    fn default_answer(&self) -> PrivateAnswer {
        PrivateAnswer { items: self.params.default_items.clone(), default_used: true, ..Default::default() }
    }
}

/// Retrieves the record stored under one key.
pub fn private_exact_fetch<C: Channel>(
    s: &mut ClientSession<C>,
    key: &[u8],
) -> Result<Option<Vec<FetchedEntry>>, ProtocolError> {
    Ok(s.fetch(&[key.to_vec()])?.pop().flatten())
}

/// Descending order of encrypted values; see [`ClientSession::sort`].
pub fn private_two_party_sort<C: Channel>(
    s: &mut ClientSession<C>,
    values: &[Ciphertext],
    bound: &Integer,
) -> Result<SortResult, ProtocolError> {
    s.sort(values, bound)
}

/// Every rule with weight at least `w` and antecedent of at most `max_len`
/// items, collated into the `cap` items of largest accumulated weight
/// (ties: smaller item id).
pub fn private_all_assoc<C: Channel>(
    s: &mut ClientSession<C>,
    t: &Transaction,
    w: Weight,
    max_len: usize,
    cap: usize,
) -> Result<PrivateAnswer, ProtocolError> {
    if max_len == 0 {
        return Err(CriterionError::BadT { t: 0, universe: s.params.anon_slots as u32 - 1 }.into());
    }
    let before = s.timings.clone();
    let anon_t = s.anonymize(t)?;
    let mut answer = run_all_assoc(s, &anon_t, w, max_len, cap)?;
    answer.timings = since(&s.timings, &before);
    Ok(answer)
}

fn run_all_assoc<C: Channel>(
    s: &mut ClientSession<C>,
    anon_t: &ItemSet,
    w: Weight,
    max_len: usize,
    cap: usize,
) -> Result<PrivateAnswer, ProtocolError> {
    if anon_t.is_empty() {
        return Ok(s.default_answer());
    }
    let keys: Vec<Vec<u8>> = subsets_up_to(anon_t, max_len).map(|p| encode_itemset(&p)).collect();
    let fetches = keys.len();
    let rules: Vec<FetchedEntry> = s.fetch(&keys)?.into_iter().flatten().flatten().collect();
    let weights: Vec<Ciphertext> = rules.iter().map(|r| r.weight.clone()).collect();
    let keep = s.threshold(&weights, w)?;
    let kept: Vec<&FetchedEntry> = rules.iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| r).collect();
    if kept.is_empty() {
        return Ok(PrivateAnswer { fetches, ..s.default_answer() });
    }
    let started = Instant::now();
    let spk = s.server_key().clone();
    let mut acc: BTreeMap<ItemId, Ciphertext> = BTreeMap::new();
    for r in &kept {
        for item in r.consequent.iter() {
            let sum = match acc.remove(&item) {
                None => r.weight.clone(),
                Some(c) => spk.add(&c, &r.weight)?,
            };
            acc.insert(item, sum);
        }
    }
    s.timings.add("collate", started.elapsed());
    let (items, sums): (Vec<ItemId>, Vec<Ciphertext>) = acc.into_iter().unzip();
    let bound = Integer::from(u64::MAX) * kept.len();
    let sorted = s.sort(&sums, &bound)?;
    let n = items.len();
    let mut cut = cap.min(n);
    while cut > 0 && cut < n && sorted.tie_with_next[cut - 1] {
        cut += 1;
    }
    let pseudonyms: Vec<ItemId> = sorted.order[..cut].iter().map(|&i| items[i]).collect();
    let real = s.deanonymize(&pseudonyms)?;
    let mut out = Vec::with_capacity(cut);
    let mut group: Vec<ItemId> = Vec::new();
    for (rank, id) in real.into_iter().enumerate() {
        group.push(id.ok_or(ProtocolError::State("pseudonym without a reverse entry"))?);
        if !sorted.tie_with_next[rank] || rank + 1 == cut {
            group.sort_unstable();
            out.append(&mut group);
        }
    }
    out.truncate(cap);
    Ok(PrivateAnswer { items: out, fetches, ..Default::default() })
}

/// Candidate rules of the approximate table for a pseudonymous transaction,
/// reproducing the level scan of the plain index: one retrieval per
/// signature map, then per level the buckets in table order until more
/// than `3·L` ids were collected. Distinct candidates, ascending by id.
pub fn private_approx_fetch<C: Channel>(
    s: &mut ClientSession<C>,
    anon_t: &ItemSet,
) -> Result<(Vec<FetchedEntry>, usize), ProtocolError> {
    let approx = s.params.approx.clone().ok_or(ProtocolError::State("session is not in approximate mode"))?;
    let bank = GaussianBank::new(approx.lsh.seed, approx.universe as usize + 1);
    let q = query_vector(anon_t);
    let pairs = approx.lsh.table_pairs();
    if pairs.len() != approx.prefixes.len() {
        return Err(ProtocolError::State("one prefix per signature map"));
    }
    let keys: Vec<Vec<u8>> = pairs
        .iter()
        .zip(&approx.prefixes)
        .map(|(&(m, l), prefix)| {
            let bits = approx.lsh.levels[m].bits;
            enhanced_key(prefix, bank.signature(m, l, bits, &q), bits)
        })
        .collect();
    let fetched = s.fetch(&keys)?;
    let mut next = fetched.into_iter();
    for lv in &approx.lsh.levels {
        let level: Vec<Option<Vec<FetchedEntry>>> = next.by_ref().take(lv.tables).collect();
        let mut collected: Vec<FetchedEntry> = Vec::new();
        for rec in level.into_iter() {
            collected.extend(rec.unwrap_or_default());
            if collected.len() > 3 * lv.tables {
                break;
            }
        }
        if !collected.is_empty() {
            let mut seen = HashSet::new();
            collected.retain(|e| seen.insert(e.rule_id));
            collected.sort_by_key(|e| e.rule_id);
            return Ok((collected, keys.len()));
        }
    }
    Ok((Vec::new(), keys.len()))
}

/// Approximate top-1: the applicable candidate maximizing `f` (ties: lower
/// id), answered with its consequent.
pub fn private_approx_top1<C: Channel>(
    s: &mut ClientSession<C>,
    t: &Transaction,
    f: &OrderingFunction,
) -> Result<PrivateAnswer, ProtocolError> {
    let before = s.timings.clone();
    let anon_t = s.anonymize(t)?;
    let mut answer = if anon_t.is_empty() {
        s.default_answer()
    } else {
        let (cands, fetches) = private_approx_fetch(s, &anon_t)?;
        let applicable: Vec<FetchedEntry> = cands.into_iter().filter(|c| c.antecedent.is_subset_of(&anon_t)).collect();
        if applicable.is_empty() {
            PrivateAnswer { fetches, ..s.default_answer() }
        } else {
            let approx = s.params.approx.clone().expect("checked by the fetch");
            let spk = s.server_key().clone();
            let universe = s.params.anon_slots as u32 - 1;
            let mut scores = Vec::with_capacity(applicable.len());
            for c in &applicable {
                scores.push(encrypted_score(&spk, f, &c.weight, &approx.w_max, c.antecedent_len as usize, universe, &mut s.rng)?);
            }
            let bound = score_bound(f, universe)?;
            let best = &applicable[s.sort(&scores, &bound)?.order[0]];
            let real = s.deanonymize(best.consequent.items())?;
            let items = real.into_iter().collect::<Option<Vec<_>>>().ok_or(ProtocolError::State("pseudonym without a reverse entry"))?;
            PrivateAnswer { items: ItemSet::new(items).into_vec(), rule: Some(best.rule_id), fetches, ..Default::default() }
        }
    };
    answer.timings = since(&s.timings, &before);
    Ok(answer)
}

fn since(now: &StageTimings, before: &StageTimings) -> StageTimings {
    let mut out = StageTimings::default();
    for (k, v) in &now.stages {
        let d = v.saturating_sub(before.get(k));
        if !d.is_zero() {
            out.add(k, d);
        }
    }
    out
}

fn affine(g: MonotoneMap) -> Result<(u64, u64), ProtocolError> {
    match g {
        MonotoneMap::Identity | MonotoneMap::Power { exp: 0 | 1 } => Ok((1, 0)),
        MonotoneMap::Affine { mul, add } => Ok((mul.max(1), add)),
        MonotoneMap::Power { .. } => Err(ProtocolError::Unsupported("non-affine weight maps cannot be evaluated under encryption")),
    }
}

fn map_plain(g: MonotoneMap, x: u64) -> Result<Integer, ProtocolError> {
    Ok(Integer::from(g.apply(x as u128)?))
}

/// `Enc(f(w, len))` from `Enc(w)` and `Enc(w_max)`.
fn encrypted_score<R: rand::RngCore>(
    pk: &PublicKey,
    f: &OrderingFunction,
    w: &Ciphertext,
    w_max: &Ciphertext,
    len: usize,
    universe: u32,
    rng: &mut R,
) -> Result<Ciphertext, ProtocolError> {
    let g1 = |c: &Ciphertext| -> Result<Ciphertext, ProtocolError> {
        let (mul, add) = affine(f.g1)?;
        Ok(pk.add_plain(&pk.scalar_mul(c, &Integer::from(mul))?, &Integer::from(add))?)
    };
    Ok(match f.kind {
        OrderingKind::WeightOnly => w.clone(),
        OrderingKind::LengthOnly => pk.encrypt_u64(len as u64, 1, rng)?,
        OrderingKind::LengthThenWeight => {
            let tier = pk.scalar_mul(&g1(w_max)?, &map_plain(f.g2, len as u64)?)?;
            pk.add(&g1(w)?, &tier)?
        }
        OrderingKind::WeightThenLength => {
            let scaled = pk.scalar_mul(&g1(w)?, &map_plain(f.g2, universe as u64)?)?;
            pk.add_plain(&scaled, &map_plain(f.g2, len as u64)?)?
        }
    })
}

/// Upper bound of `f` over 64-bit weights and antecedents of at most
/// `universe` items.
fn score_bound(f: &OrderingFunction, universe: u32) -> Result<Integer, ProtocolError> {
    let (mul, add) = affine(f.g1)?;
    let g1 = Integer::from(u64::MAX) * mul + add;
    let g2 = map_plain(f.g2, universe as u64)?;
    Ok(match f.kind {
        OrderingKind::WeightOnly => Integer::from(u64::MAX),
        OrderingKind::LengthOnly => Integer::from(universe),
        OrderingKind::LengthThenWeight => Integer::from(&g1 * &g2) + g1,
        OrderingKind::WeightThenLength => Integer::from(&g1 * &g2) + g2,
    })
}

/// What a private session asks for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrivateQuery {
    /// Exact ALL-Assoc: rules of weight `≥ w` with antecedents of at most
    /// `t` items, collated into `cap` items.
    AllAssoc { w: Weight, t: usize, cap: usize },
    /// Approximate top-1 under an ordering function.
    ApproxTop1(OrderingFunction),
}

impl PrivateQuery {
    /// Table the query needs.
    pub fn mode(&self) -> Mode {
        match self {
            PrivateQuery::AllAssoc { .. } => Mode::Exact,
            PrivateQuery::ApproxTop1(_) => Mode::Approx,
        }
    }
}

/// Runs `q` for `t` within an open session.
pub fn run_query<C: Channel>(s: &mut ClientSession<C>, t: &Transaction, q: &PrivateQuery) -> Result<PrivateAnswer, ProtocolError> {
    match q {
        PrivateQuery::AllAssoc { w, t: max_len, cap } => private_all_assoc(s, t, *w, *max_len, *cap),
        PrivateQuery::ApproxTop1(f) => private_approx_top1(s, t, f),
    }
}
