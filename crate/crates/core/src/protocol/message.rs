use super::layout::RecordLayout;
use super::ProtocolError;
use crate::crypto::{Ciphertext, OtQuery, OtReply, OtShape, Outcome, PublicKey};
use crate::exact::TableParams;
use crate::lsh::{Level, LshParams};
use crate::rules::ItemId;
use crate::wire::{Reader, WireError, Writer};

pub const PROTOCOL_VERSION: u8 = 1;

/// Wire codes of the message types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    SessionInit = 1,
    PublicParams = 2,
    OtQueryBatch = 3,
    OtReplyBatch = 4,
    SortPairs = 5,
    SortOutcomes = 6,
    SessionClose = 7,
    Error = 8,
}

impl MessageType {
    pub fn from_code(c: u8) -> Option<Self> {
        use MessageType::*;
        [SessionInit, PublicParams, OtQueryBatch, OtReplyBatch, SortPairs, SortOutcomes, SessionClose, Error]
            .into_iter()
            .find(|t| *t as u8 == c)
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Which table a session serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Approx,
}

/// Which server table an OT batch addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    /// Forward pseudonym table.
    Anonymize,
    /// Rule records.
    Fetch,
    /// Reverse pseudonym table.
    Deanonymize,
}

impl Stage {
    fn code(self) -> u8 {
        match self {
            Stage::Anonymize => 0,
            Stage::Fetch => 1,
            Stage::Deanonymize => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self, WireError> {
        match c {
            0 => Ok(Stage::Anonymize),
            1 => Ok(Stage::Fetch),
            2 => Ok(Stage::Deanonymize),
            _ => Err(WireError::Invalid("stage")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionInit {
    pub version: u8,
    pub mode: Mode,
    pub client_key: PublicKey,
}

/// Public parameters of the approximate table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxParams {
    pub lsh: LshParams,
    /// Universe the signature maps are defined over.
    pub universe: u32,
    pub prefixes: Vec<Vec<u8>>,
    /// The largest rule weight, encrypted under the server key.
    pub w_max: Ciphertext,
}

/// Everything a client needs to address the server's tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub server_key: PublicKey,
    pub mode: Mode,
    /// `|I| + 1` forward slots (slot 0 is the sentinel).
    pub anon_slots: u64,
    pub anon_shape: OtShape,
    /// `F + 1` reverse slots.
    pub deanon_slots: u64,
    pub deanon_shape: OtShape,
    pub table: TableParams,
    pub fetch_shape: OtShape,
    pub layout: RecordLayout,
    /// Longest transaction the server accepts.
    pub transaction_cap: u32,
    pub default_items: Vec<ItemId>,
    pub approx: Option<ApproxParams>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SortRequest {
    /// Independently masked pairs; one outcome per pair.
    Threshold(Vec<(Ciphertext, Ciphertext)>),
    /// Commonly masked values to run the sorting network over.
    Sort(Vec<Ciphertext>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    SessionInit(SessionInit),
    PublicParams(Box<PublicParams>),
    OtQueryBatch { stage: Stage, queries: Vec<OtQuery> },
    /// `unmask` holds server-key ciphertexts, `entries` per fetch reply.
    OtReplyBatch { stage: Stage, replies: Vec<OtReply>, unmask: Vec<Ciphertext> },
    SortPairs(SortRequest),
    SortOutcomes(Vec<Outcome>),
    SessionClose,
    Error(String),
}

impl Message {
    pub fn kind(&self) -> MessageType {
        match self {
            Message::SessionInit(_) => MessageType::SessionInit,
            Message::PublicParams(_) => MessageType::PublicParams,
            Message::OtQueryBatch { .. } => MessageType::OtQueryBatch,
            Message::OtReplyBatch { .. } => MessageType::OtReplyBatch,
            Message::SortPairs(_) => MessageType::SortPairs,
            Message::SortOutcomes(_) => MessageType::SortOutcomes,
            Message::SessionClose => MessageType::SessionClose,
            Message::Error(_) => MessageType::Error,
        }
    }
}

/// Keys needed to size ciphertexts on the wire. Each side fills them in as
/// the handshake progresses.
#[derive(Clone, Debug, Default)]
pub struct Codec {
    pub client: Option<PublicKey>,
    pub server: Option<PublicKey>,
}

fn need(k: &Option<PublicKey>) -> Result<&PublicKey, ProtocolError> {
    k.as_ref().ok_or(ProtocolError::State("message needs a key that has not been exchanged"))
}

fn write_lsh(p: &LshParams, w: &mut Writer) {
    w.u64(p.seed).u32(p.levels.len() as u32);
    for lv in &p.levels {
        w.u32(lv.bits as u32).u32(lv.tables as u32);
    }
}

fn read_lsh(r: &mut Reader<'_>) -> Result<LshParams, WireError> {
    let seed = r.u64()?;
    let n = r.count(8)?;
    let levels = (0..n)
        .map(|_| Ok(Level { bits: r.u32()? as usize, tables: r.u32()? as usize }))
        .collect::<Result<Vec<_>, WireError>>()?;
    let p = LshParams { levels, seed };
    p.validate().map_err(|_| WireError::Invalid("schedule"))?;
    Ok(p)
}

fn write_mode(m: Mode, w: &mut Writer) {
    w.u8(match m {
        Mode::Exact => 0,
        Mode::Approx => 1,
    });
}

fn read_mode(r: &mut Reader<'_>) -> Result<Mode, WireError> {
    match r.u8()? {
        0 => Ok(Mode::Exact),
        1 => Ok(Mode::Approx),
        _ => Err(WireError::Invalid("mode")),
    }
}

impl Codec {
    pub fn encode(&self, m: &Message) -> Result<Vec<u8>, ProtocolError> {
        let mut w = Writer::new();
        match m {
            Message::SessionInit(s) => {
                w.u8(s.version);
                write_mode(s.mode, &mut w);
                s.client_key.write(&mut w);
            }
            Message::PublicParams(p) => {
                p.server_key.write(&mut w);
                write_mode(p.mode, &mut w);
                w.u64(p.anon_slots);
                p.anon_shape.write(&mut w);
                w.u64(p.deanon_slots);
                p.deanon_shape.write(&mut w);
                p.table.write(&mut w);
                p.fetch_shape.write(&mut w);
                p.layout.write(&mut w);
                w.u32(p.transaction_cap).u32s(&p.default_items);
                match &p.approx {
                    None => {
                        w.u8(0);
                    }
                    Some(a) => {
                        w.u8(1);
                        write_lsh(&a.lsh, &mut w);
                        w.u32(a.universe).u32(a.prefixes.len() as u32);
                        for pre in &a.prefixes {
                            w.bytes(pre);
                        }
                        p.server_key.write_ciphertext(&a.w_max, &mut w);
                    }
                }
            }
            Message::OtQueryBatch { stage, queries } => {
                let pk = need(&self.client)?;
                w.u8(stage.code()).u32(queries.len() as u32);
                for q in queries {
                    q.write(pk, &mut w);
                }
            }
            Message::OtReplyBatch { stage, replies, unmask } => {
                let pk = need(&self.client)?;
                w.u8(stage.code()).u32(replies.len() as u32);
                for r in replies {
                    r.write(pk, &mut w);
                }
                w.u32(unmask.len() as u32);
                if !unmask.is_empty() {
                    let spk = need(&self.server)?;
                    for c in unmask {
                        spk.write_ciphertext(c, &mut w);
                    }
                }
            }
            Message::SortPairs(req) => {
                let spk = need(&self.server)?;
                match req {
                    SortRequest::Threshold(pairs) => {
                        w.u8(0).u32(pairs.len() as u32);
                        for (a, b) in pairs {
                            spk.write_ciphertext(a, &mut w);
                            spk.write_ciphertext(b, &mut w);
                        }
                    }
                    SortRequest::Sort(values) => {
                        w.u8(1).u32(values.len() as u32);
                        for c in values {
                            spk.write_ciphertext(c, &mut w);
                        }
                    }
                }
            }
            Message::SortOutcomes(out) => {
                w.u32(out.len() as u32);
                for o in out {
                    w.u8(o.code());
                }
            }
            Message::SessionClose => {}
            Message::Error(text) => {
                w.raw(text.as_bytes());
            }
        }
        Ok(w.finish())
    }

    pub fn decode(&self, kind: MessageType, payload: &[u8]) -> Result<Message, ProtocolError> {
        let mut r = Reader::new(payload);
        let m = match kind {
            MessageType::SessionInit => {
                let version = r.u8()?;
                let mode = read_mode(&mut r)?;
                let client_key = PublicKey::read(&mut r)?;
                Message::SessionInit(SessionInit { version, mode, client_key })
            }
            MessageType::PublicParams => {
                let server_key = PublicKey::read(&mut r)?;
                let mode = read_mode(&mut r)?;
                let anon_slots = r.u64()?;
                let anon_shape = OtShape::read(&mut r)?;
                let deanon_slots = r.u64()?;
                let deanon_shape = OtShape::read(&mut r)?;
                let table = TableParams::read(&mut r)?;
                let fetch_shape = OtShape::read(&mut r)?;
                let layout = RecordLayout::read(&mut r)?;
                let transaction_cap = r.u32()?;
                let default_items = r.u32s()?;
                let approx = match r.u8()? {
                    0 => None,
                    1 => {
                        let lsh = read_lsh(&mut r)?;
                        let universe = r.u32()?;
                        let n = r.count(4)?;
                        let prefixes = (0..n).map(|_| r.bytes().map(<[u8]>::to_vec)).collect::<Result<_, _>>()?;
                        let w_max = server_key.read_ciphertext(&mut r)?;
                        Some(ApproxParams { lsh, universe, prefixes, w_max })
                    }
                    _ => return Err(WireError::Invalid("approx flag").into()),
                };
                Message::PublicParams(Box::new(PublicParams {
                    server_key,
                    mode,
                    anon_slots,
                    anon_shape,
                    deanon_slots,
                    deanon_shape,
                    table,
                    fetch_shape,
                    layout,
                    transaction_cap,
                    default_items,
                    approx,
                }))
            }
            MessageType::OtQueryBatch => {
                let pk = need(&self.client)?;
                let stage = Stage::from_code(r.u8()?)?;
                let n = r.count(1)?;
                let queries = (0..n).map(|_| OtQuery::read(pk, &mut r)).collect::<Result<_, _>>()?;
                Message::OtQueryBatch { stage, queries }
            }
            MessageType::OtReplyBatch => {
                let pk = need(&self.client)?;
                let stage = Stage::from_code(r.u8()?)?;
                let n = r.count(4)?;
                let replies = (0..n).map(|_| OtReply::read(pk, &mut r)).collect::<Result<_, _>>()?;
                let k = r.count(2)?;
                let unmask = if k == 0 {
                    Vec::new()
                } else {
                    let spk = need(&self.server)?;
                    (0..k).map(|_| spk.read_ciphertext(&mut r)).collect::<Result<_, _>>()?
                };
                Message::OtReplyBatch { stage, replies, unmask }
            }
            MessageType::SortPairs => {
                let spk = need(&self.server)?;
                let tag = r.u8()?;
                let n = r.count(2)?;
                match tag {
                    0 => Message::SortPairs(SortRequest::Threshold(
                        (0..n)
                            .map(|_| Ok((spk.read_ciphertext(&mut r)?, spk.read_ciphertext(&mut r)?)))
                            .collect::<Result<_, ProtocolError>>()?,
                    )),
                    1 => Message::SortPairs(SortRequest::Sort(
                        (0..n).map(|_| spk.read_ciphertext(&mut r)).collect::<Result<_, _>>()?,
                    )),
                    _ => return Err(WireError::Invalid("sort request kind").into()),
                }
            }
            MessageType::SortOutcomes => {
                let n = r.count(1)?;
                let out = (0..n)
                    .map(|_| Outcome::from_code(r.u8()?).ok_or(WireError::Invalid("outcome code")))
                    .collect::<Result<_, _>>()?;
                Message::SortOutcomes(out)
            }
            MessageType::SessionClose => Message::SessionClose,
            MessageType::Error => {
                let text = String::from_utf8_lossy(r.take(r.remaining())?).into_owned();
                Message::Error(text)
            }
        };
        r.finish()?;
        Ok(m)
    }
}
