use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rug::Integer;

use super::anon::{AnonymizationTables, DEFAULT_THETA};
use super::enhanced::build_enhanced_db;
use super::layout::{LayoutBounds, RecordEntry, RecordLayout, MASK_BITS};
use super::message::{
    ApproxParams, Codec, Message, MessageType, Mode, PublicParams, SessionInit, SortRequest, Stage, PROTOCOL_VERSION,
};
use super::{fetch_shape, table_shape, ProtocolError, StageTimings};
use crate::crypto::ot::{ot_reply, SparseBlocks};
use crate::crypto::{modulo, random_bits, sort_outcomes, Ciphertext, KeyPair, OtQuery, OtShape, Outcome, PublicKey};
use crate::exact::{encode_itemset, ExactConfig, FingerprintKind, TableParams, TwoLevelTable, DEFAULT_TRANSACTION_CAP};
use crate::lsh::{LshIndex, LshParams};
use crate::par::Exec;
use crate::rules::{ItemId, ItemSet, RuleDatabase, RuleId};

pub const DEFAULT_BUCKET_CAP: usize = 32;

/// Layers of the server's weight key.
const WEIGHT_LAYERS: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ServerConfig {
    /// Modulus size of the server's weight key.
    pub key_bits: u32,
    /// Items with fewer mentions are hidden behind the sentinel.
    pub theta: u64,
    pub seed: u64,
    pub fingerprint: FingerprintKind,
    pub fingerprint_bits: usize,
    pub prefix_len: usize,
    /// Schedule of the approximate table; `None` serves exact sessions only.
    pub approx: Option<LshParams>,
    /// Width of the per-map key prefixes of the approximate table.
    pub prefix_bits: usize,
    /// Rules kept per approximate bucket record, lowest ids first. Every
    /// record is padded to the largest bucket, so this bounds reply size.
    pub bucket_cap: usize,
    pub transaction_cap: usize,
    pub exec: Exec,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            key_bits: 1024,
            theta: DEFAULT_THETA,
            seed: 0,
            fingerprint: FingerprintKind::Sha256,
            fingerprint_bits: 64,
            prefix_len: 16,
            approx: None,
            prefix_bits: 64,
            bucket_cap: DEFAULT_BUCKET_CAP,
            transaction_cap: DEFAULT_TRANSACTION_CAP,
            exec: Exec::default(),
        }
    }
}

/// Long-lived server state shared by every session.
pub struct Server {
    config: ServerConfig,
    db: RuleDatabase,
    anon: AnonymizationTables,
    key: KeyPair,
    /// Pseudonymous rules by id, antecedents included.
    entries: HashMap<RuleId, RecordEntry>,
    /// `(key, rules sharing that antecedent)` of the exact table.
    exact: Vec<(Vec<u8>, Vec<RuleId>)>,
    lsh: Option<LshIndex>,
    seeds: Mutex<ChaCha20Rng>,
    next_session: AtomicU32,
}

impl Server {
    pub fn new(db: RuleDatabase, config: ServerConfig) -> Result<Self, ProtocolError> {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let anon = AnonymizationTables::for_db(&db, config.theta, rng.random());
        let key = KeyPair::generate(config.key_bits, WEIGHT_LAYERS, &mut rng)?;
        let mut entries = HashMap::with_capacity(db.len());
        let mut exact: BTreeMap<Vec<u8>, Vec<RuleId>> = BTreeMap::new();
        for r in db.rules() {
            let Some(m) = anon.map_rule(r) else { continue };
            exact.entry(encode_itemset(&m.antecedent)).or_default().push(r.id);
            entries.insert(
                r.id,
                RecordEntry {
                    rule_id: r.id,
                    antecedent_len: m.antecedent.len() as u32,
                    antecedent: m.antecedent,
                    consequent: m.consequent,
                    weight: Integer::from(m.weight),
                },
            );
        }
        if exact.is_empty() {
            return Err(ProtocolError::Config("no rule survives anonymization"));
        }
        let lsh = match &config.approx {
            None => None,
            Some(params) => {
                let mut ids: Vec<&RecordEntry> = entries.values().collect();
                ids.sort_unstable_by_key(|e| e.rule_id);
                let pairs = ids.iter().map(|e| (e.rule_id, &e.antecedent));
                Some(LshIndex::build(db.universe_size(), pairs, params.clone(), config.exec)?)
            }
        };
        let seeds = Mutex::new(ChaCha20Rng::from_seed(rng.random()));
        let exact = exact.into_iter().collect();
        Ok(Server { config, db, anon, key, entries, exact, lsh, seeds, next_session: AtomicU32::new(1) })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn db(&self) -> &RuleDatabase {
        &self.db
    }

    pub fn anonymization(&self) -> &AnonymizationTables {
        &self.anon
    }

    pub fn public_key(&self) -> &PublicKey {
        self.key.public()
    }

    /// The pseudonymous LSH index behind approximate sessions.
    pub fn lsh(&self) -> Option<&LshIndex> {
        self.lsh.as_ref()
    }

    /// A fresh session with its own id and randomness.
    pub fn session(self: &Arc<Self>) -> ServerSession {
        let id = self.next_session.fetch_add(1, Ordering::Relaxed);
        let seed: [u8; 32] = self.seeds.lock().expect("seed lock").random();
        ServerSession::new(Arc::clone(self), id, seed)
    }

    fn entry(&self, id: RuleId) -> &RecordEntry {
        &self.entries[&id]
    }

    fn build_tables(&self, mode: Mode, chunk_bits: u32, seed: u64) -> Result<Tables, ProtocolError> {
        let cfg = ExactConfig {
            fingerprint_bits: self.config.fingerprint_bits,
            prefix_len: self.config.prefix_len,
            fingerprint: self.config.fingerprint,
            retry_cap: 64,
            seed,
        };
        let (records, prefixes): (Vec<(Vec<u8>, Vec<RuleId>)>, _) = match mode {
            Mode::Exact => (self.exact.clone(), None),
            Mode::Approx => {
                let lsh = self.lsh.as_ref().ok_or(ProtocolError::Unsupported("server has no approximate table"))?;
                let mut e = build_enhanced_db(lsh, self.config.prefix_bits, seed ^ 0x5EED)?;
                for (_, ids) in &mut e.records {
                    ids.truncate(self.config.bucket_cap.max(1));
                }
                (e.records, Some(e.prefixes))
            }
        };
        let keep_antecedent = mode == Mode::Approx;
        let mut bounds = LayoutBounds::default();
        for (_, ids) in &records {
            bounds.entries = bounds.entries.max(ids.len() as u32);
            for id in ids {
                bounds.include(self.entry(*id), keep_antecedent);
            }
        }
        let layout = RecordLayout::new(chunk_bits, self.config.fingerprint_bits as u32, bounds)?;
        let items: Vec<(Vec<u8>, u32)> = records.iter().enumerate().map(|(i, (k, _))| (k.clone(), i as u32)).collect();
        let table = TwoLevelTable::prep(items, &cfg, self.config.exec)?;
        let mut chunks: Vec<SparseBlocks> = vec![Vec::with_capacity(records.len()); layout.chunks()];
        for (slot, e) in table.slots() {
            let entries: Vec<RecordEntry> = records[e.value as usize]
                .1
                .iter()
                .map(|id| {
                    let mut entry = self.entry(*id).clone();
                    if !keep_antecedent {
                        entry.antecedent = ItemSet::empty();
                    }
                    entry
                })
                .collect();
            for (c, block) in layout.pack(&e.fingerprint, &entries)?.into_iter().enumerate() {
                chunks[c].push((slot, block));
            }
        }
        Ok(Tables { params: table.params().clone(), chunks, layout, prefixes })
    }
}

/// Per-session table image.
struct Tables {
    params: TableParams,
    chunks: Vec<SparseBlocks>,
    layout: RecordLayout,
    prefixes: Option<Vec<Vec<u8>>>,
}

struct Active {
    mode: Mode,
    client_key: PublicKey,
    ot_dims: usize,
    tables: Tables,
    fetch_shape: OtShape,
    anon_shape: OtShape,
    deanon_shape: OtShape,
}

/// Server side of one conversation.
pub struct ServerSession {
    server: Arc<Server>,
    id: u32,
    rng: ChaCha20Rng,
    codec: Codec,
    active: Option<Active>,
    timings: StageTimings,
}

/// Encoded reply to one incoming frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reply {
    pub kind: MessageType,
    pub payload: Vec<u8>,
    /// The connection should be closed after sending.
    pub close: bool,
}

impl ServerSession {
    fn new(server: Arc<Server>, id: u32, seed: [u8; 32]) -> Self {
        let codec = Codec { client: None, server: Some(server.key.public().clone()) };
        ServerSession { server, id, rng: ChaCha20Rng::from_seed(seed), codec, active: None, timings: StageTimings::default() }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn timings(&self) -> &StageTimings {
        &self.timings
    }

    /// Current table parameters, once the session is initialized.
    pub fn table_params(&self) -> Option<&TableParams> {
        self.active.as_ref().map(|a| &a.tables.params)
    }

    /// Draws fresh hash functions, fingerprint prefix and (in approximate
    /// mode) map prefixes, and rebuilds the session's table.
    pub fn rekey(&mut self) -> Result<(), ProtocolError> {
        let seed = self.rng.random();
        let a = self.active.as_mut().ok_or(ProtocolError::State("session not initialized"))?;
        let started = Instant::now();
        a.tables = self.server.build_tables(a.mode, a.client_key.block_bytes() as u32 * 8, seed)?;
        a.fetch_shape = fetch_shape(a.tables.params.virtual_size(), a.ot_dims)?;
        self.timings.add("rekey", started.elapsed());
        Ok(())
    }

    /// Decodes a frame, handles it and encodes the answer. Protocol errors
    /// become `Error` replies; undecodable frames also close the connection.
    pub fn handle_frame(&mut self, kind: u8, payload: &[u8]) -> Reply {
        let decoded = MessageType::from_code(kind)
            .ok_or(ProtocolError::UnknownType(kind))
            .and_then(|k| self.codec.decode(k, payload));
        let (msg, close) = match decoded {
            Err(e) => (Message::Error(e.to_string()), true),
            Ok(m) => {
                let closing = m == Message::SessionClose;
                (self.handle(m), closing)
            }
        };
        match self.codec.encode(&msg) {
            Ok(payload) => Reply { kind: msg.kind(), payload, close },
            Err(e) => Reply { kind: MessageType::Error, payload: e.to_string().into_bytes(), close: true },
        }
    }

    /// Answers one message; failures are reported as [`Message::Error`].
    pub fn handle(&mut self, msg: Message) -> Message {
        self.try_handle(msg).unwrap_or_else(|e| Message::Error(e.to_string()))
    }

    fn try_handle(&mut self, msg: Message) -> Result<Message, ProtocolError> {
        match msg {
            Message::SessionInit(init) => self.init(init),
            Message::OtQueryBatch { stage, queries } => self.ot_batch(stage, queries),
            Message::SortPairs(req) => self.compare(req),
            Message::SessionClose => {
                self.active = None;
                Ok(Message::SessionClose)
            }
            other => Err(ProtocolError::Unexpected { got: other.kind() }),
        }
    }

    fn init(&mut self, init: SessionInit) -> Result<Message, ProtocolError> {
        if init.version != PROTOCOL_VERSION {
            return Err(ProtocolError::Version(init.version));
        }
        let started = Instant::now();
        let key = init.client_key;
        let ot_dims = key.max_layer() as usize;
        let seed = self.rng.random();
        let tables = self.server.build_tables(init.mode, key.block_bytes() as u32 * 8, seed)?;
        let anon = &self.server.anon;
        let anon_slots = anon.universe() as u64 + 1;
        let deanon_slots = anon.frequent_count() as u64 + 1;
        let active = Active {
            mode: init.mode,
            fetch_shape: fetch_shape(tables.params.virtual_size(), ot_dims)?,
            anon_shape: table_shape(anon_slots, ot_dims)?,
            deanon_shape: table_shape(deanon_slots, ot_dims)?,
            client_key: key.clone(),
            ot_dims,
            tables,
        };
        let approx = match init.mode {
            Mode::Exact => None,
            Mode::Approx => Some(ApproxParams {
                lsh: self.server.config.approx.clone().expect("approximate tables imply a schedule"),
                universe: self.server.db.universe_size(),
                prefixes: active.tables.prefixes.clone().unwrap_or_default(),
                w_max: self.server.key.encrypt_u64(self.server.db.max_weight(), 1, &mut self.rng)?,
            }),
        };
        let params = PublicParams {
            server_key: self.server.key.public().clone(),
            mode: init.mode,
            anon_slots,
            anon_shape: active.anon_shape.clone(),
            deanon_slots,
            deanon_shape: active.deanon_shape.clone(),
            table: active.tables.params.clone(),
            fetch_shape: active.fetch_shape.clone(),
            layout: active.tables.layout.clone(),
            transaction_cap: self.server.config.transaction_cap as u32,
            default_items: self.server.db.global_frequent_items().to_vec(),
            approx,
        };
        self.codec.client = Some(key);
        self.active = Some(active);
        self.timings.add("init", started.elapsed());
        Ok(Message::PublicParams(Box::new(params)))
    }

    fn ot_batch(&mut self, stage: Stage, queries: Vec<OtQuery>) -> Result<Message, ProtocolError> {
        let started = Instant::now();
        let a = self.active.as_ref().ok_or(ProtocolError::State("session not initialized"))?;
        let exec = self.server.config.exec;
        let anon = &self.server.anon;
        let table_blocks = |t: &[ItemId]| -> SparseBlocks {
            t.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, &v)| (i as u64, Integer::from(v))).collect()
        };
        let (shape, n, chunks, masked) = match stage {
            Stage::Anonymize => (&a.anon_shape, anon.universe() as u64 + 1, vec![table_blocks(anon.forward_table())], false),
            Stage::Deanonymize => {
                (&a.deanon_shape, anon.frequent_count() as u64 + 1, vec![table_blocks(anon.reverse_table())], false)
            }
            Stage::Fetch => (&a.fetch_shape, a.tables.params.virtual_size(), a.tables.chunks.clone(), true),
        };
        let layout = &a.tables.layout;
        let entries = if masked { layout.entries as usize } else { 0 };
        let seeds: Vec<[u8; 32]> = (0..queries.len()).map(|_| self.rng.random()).collect();
        let key = &a.client_key;
        let server_key = &self.server.key;
        let answers = exec.map_range(queries.len(), |q| -> Result<_, ProtocolError> {
            let mut rng = ChaCha20Rng::from_seed(seeds[q]);
            let (offsets, unmask) = if masked {
                let masks: Vec<Integer> = (0..entries).map(|_| random_bits(&mut rng, MASK_BITS)).collect();
                let unmask = masks
                    .iter()
                    .map(|m| server_key.encrypt(&modulo(Integer::from(-m), server_key.public().n()), 1, &mut rng))
                    .collect::<Result<Vec<Ciphertext>, _>>()?;
                (layout.weight_offsets(&masks)?, unmask)
            } else {
                (vec![Integer::new(); chunks.len()], Vec::new())
            };
            let reply = ot_reply(&queries[q], shape, n, &chunks, &offsets, key, &mut rng, exec)?;
            Ok((reply, unmask))
        });
        let mut replies = Vec::with_capacity(answers.len());
        let mut unmask = Vec::with_capacity(answers.len() * entries);
        for ans in answers {
            let (r, u) = ans?;
            replies.push(r);
            unmask.extend(u);
        }
        if stage == Stage::Anonymize {
            replies.shuffle(&mut self.rng);
        }
        let label = match stage {
            Stage::Anonymize => "anonymize",
            Stage::Fetch => "fetch",
            Stage::Deanonymize => "deanonymize",
        };
        self.timings.add(label, started.elapsed());
        Ok(Message::OtReplyBatch { stage, replies, unmask })
    }

    fn compare(&mut self, req: SortRequest) -> Result<Message, ProtocolError> {
        if self.active.is_none() {
            return Err(ProtocolError::State("session not initialized"));
        }
        let started = Instant::now();
        let key = &self.server.key;
        let exec = self.server.config.exec;
        let (label, outcomes) = match req {
            SortRequest::Threshold(pairs) => {
                let out = exec.map(&pairs, |(a, b)| -> Result<Outcome, ProtocolError> {
                    Ok(Outcome::from_ordering(key.decrypt(a)?.cmp(&key.decrypt(b)?)))
                });
                ("threshold", out.into_iter().collect::<Result<Vec<_>, _>>()?)
            }
            SortRequest::Sort(values) => {
                let plain = exec.map(&values, |c| key.decrypt(c));
                let plain = plain.into_iter().collect::<Result<Vec<Integer>, _>>()?;
                ("sort", sort_outcomes(&plain))
            }
        };
        self.timings.add(label, started.elapsed());
        Ok(Message::SortOutcomes(outcomes))
    }
}
