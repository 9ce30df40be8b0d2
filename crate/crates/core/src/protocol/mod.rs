//! Two-party protocol between a rule-holding server and a client holding a
//! transaction.
//!
//! A session runs in stages, each one request and one reply:
//!
//! 1. The client sends its layered public key; the server answers with the
//!    public parameters of a freshly rehashed table.
//! 2. The client retrieves the pseudonyms of its items by OT over the
//!    forward table. The server shuffles the replies.
//! 3. The client retrieves one record per candidate key by OT. Weights come
//!    back masked; the server sends the matching unmasking ciphertexts under
//!    its own key, so the client ends up holding encrypted weights only.
//! 4. Weight thresholds and the final ranking are decided by comparisons the
//!    server evaluates on masked plaintexts.
//! 5. The client recovers the real ids of the items it outputs by OT over
//!    the reverse table.

mod anon;
mod client;
mod enhanced;
mod layout;
mod message;
mod server;

use std::collections::BTreeMap;
use std::time::Duration;

use thiserror::Error;

pub use anon::{AnonymizationTables, DEFAULT_THETA};
pub use client::{
    private_all_assoc, private_approx_fetch, private_approx_top1, private_exact_fetch, private_two_party_sort, Channel,
    run_query, ClientConfig, ClientSession, FetchedEntry, PrivateAnswer, PrivateQuery, SortResult,
};
pub use enhanced::{build_enhanced_db, enhanced_key, EnhancedDb};
pub use layout::{LayoutBounds, RecordEntry, RecordLayout, MASK_BITS, WEIGHT_FIELD_BITS};
pub use message::{
    ApproxParams, Codec, Message, MessageType, Mode, PublicParams, SessionInit, SortRequest, Stage, PROTOCOL_VERSION,
};
pub use server::{Reply, Server, ServerConfig, ServerSession, DEFAULT_BUCKET_CAP};

use crate::crypto::{CryptoError, OtShape};
use crate::exact::ExactError;
use crate::lsh::LshError;
use crate::rules::{CriterionError, OrderingError};
use crate::wire::WireError;

/// Last-dimension size of multi-dimensional fetch shapes.
pub const FETCH_TAIL: u64 = 8;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Lsh(#[from] LshError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("unexpected {got:?} message")]
    Unexpected { got: MessageType },
    #[error("peer reported: {0}")]
    Remote(String),
    #[error("unsupported protocol version {0}")]
    Version(u8),
    #[error("protocol state: {0}")]
    State(&'static str),
    #[error("record layout: {0}")]
    Layout(&'static str),
    #[error("configuration: {0}")]
    Config(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("transport: {0}")]
    Transport(String),
}

/// Wall-clock time per named stage.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageTimings {
    pub stages: BTreeMap<&'static str, Duration>,
}

impl StageTimings {
    pub fn get(&self, stage: &str) -> Duration {
        self.stages.get(stage).copied().unwrap_or_default()
    }

    pub fn total(&self) -> Duration {
        self.stages.values().sum()
    }

    pub(crate) fn add(&mut self, stage: &'static str, d: Duration) {
        *self.stages.entry(stage).or_default() += d;
    }

    pub fn merge(&mut self, other: &StageTimings) {
        for (k, v) in &other.stages {
            self.add(k, *v);
        }
    }
}

/// Shape of the record table: `d` dimensions, the last one short when
/// `d ≥ 3` so that the final, most expensive layer folds few groups.
pub fn fetch_shape(n: u64, d: usize) -> Result<OtShape, CryptoError> {
    if d >= 3 {
        OtShape::with_tail(n, d, FETCH_TAIL)
    } else {
        OtShape::balanced(n, d)
    }
}

/// Shape of the small pseudonym tables: at most two dimensions.
pub fn table_shape(n: u64, d: usize) -> Result<OtShape, CryptoError> {
    OtShape::balanced(n, d.clamp(1, 2))
}
