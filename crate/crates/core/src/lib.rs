//! Private recommendation from association rules.
//!
//! A server holds a database of weighted association rules. A client holding a
//! transaction retrieves the applicable rules without revealing the
//! transaction, ranks them by weights it never sees in the clear, and collates
//! the consequents into an item list.
//!
//! The crate is layered bottom-up:
//!
//! * [`rules`]: domain types and brute-force reference selection.
//! * [`lsh`]: approximate subset-containment search over an asymmetric
//!   Gaussian-sign LSH.
//! * [`exact`]: two-level perfect hashing of antecedents and exact queries.
//! * [`crypto`]: Damgard-Jurik encryption, layered oblivious transfer,
//!   order-preserving masking and sorting networks.
//! * [`protocol`]: the two-party client/server state machines.
//! * [`transport`]: framing, TCP and loopback channels.
//! * [`synth`]: synthetic rule databases for tests and benchmarks.

pub mod crypto;
pub mod exact;
pub mod lsh;
pub mod par;
pub mod protocol;
pub mod rules;
pub mod synth;
pub mod transport;
pub mod wire;

pub use rules::{AssociationRule, ItemId, ItemSet, RuleDatabase, RuleId, Transaction, Weight};
