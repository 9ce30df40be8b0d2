//! Library side of the `privrec` command: option parsing helpers, the
//! latency benchmark and the LSH accuracy sweep.

pub mod accuracy;
pub mod bench;

use std::fmt;
use std::str::FromStr;

use privrec_core::protocol::ProtocolError;
use privrec_core::rules::{Criterion, CriterionError, OrderingFunction};
use privrec_core::{ItemId, ItemSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Transport(#[from] privrec_core::transport::TransportError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Exact(#[from] privrec_core::exact::ExactError),
    #[error(transparent)]
    Lsh(#[from] privrec_core::lsh::LshError),
    #[error(transparent)]
    Ordering(#[from] privrec_core::rules::OrderingError),
    #[error(transparent)]
    Synth(#[from] privrec_core::synth::SynthError),
    #[error(transparent)]
    Spmf(#[from] privrec_core::rules::spmf::SpmfError),
}

/// Query execution path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunMode {
    ExactPlain,
    ApproxPlain,
    ExactPrivate,
    ApproxPrivate,
}

impl RunMode {
    pub const ALL: [RunMode; 4] = [RunMode::ExactPlain, RunMode::ApproxPlain, RunMode::ExactPrivate, RunMode::ApproxPrivate];

    pub fn name(self) -> &'static str {
        match self {
            RunMode::ExactPlain => "exact-plain",
            RunMode::ApproxPlain => "approx-plain",
            RunMode::ExactPrivate => "exact-private",
            RunMode::ApproxPrivate => "approx-private",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(self, RunMode::ExactPrivate | RunMode::ApproxPrivate)
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        RunMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// Selection criterion by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionName {
    Top,
    Top1,
    TopK,
    All,
    Any,
}

impl FromStr for CriterionName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "top" => CriterionName::Top,
            "top1" => CriterionName::Top1,
            "topk" => CriterionName::TopK,
            "all" => CriterionName::All,
            "any" => CriterionName::Any,
            _ => return Err(format!("unknown criterion {s:?} (top, top1, topk, all, any)")),
        })
    }
}

impl CriterionName {
    pub fn build(self, k: usize, w: u64, t: usize, f: OrderingFunction) -> Criterion {
        match self {
            CriterionName::Top => Criterion::TopAssoc { k, w, t, f },
            CriterionName::Top1 => Criterion::Top1Assoc { f },
            CriterionName::TopK => Criterion::TopKAssoc { k, f },
            CriterionName::All => Criterion::AllAssoc { w, t },
            CriterionName::Any => Criterion::AnyAssoc { k, w, t },
        }
    }
}

/// Parses an ordering function name.
pub fn parse_ordering(s: &str) -> Result<OrderingFunction, String> {
    Ok(match s {
        "weight" => OrderingFunction::weight_only(),
        "length" => OrderingFunction::length_only(),
        "length-weight" => OrderingFunction::length_then_weight(),
        "weight-length" => OrderingFunction::weight_then_length(),
        _ => return Err(format!("unknown ordering {s:?} (weight, length, length-weight, weight-length)")),
    })
}

/// Parses `1,2,3` or `1 2 3`.
pub fn parse_items(s: &str) -> Result<ItemSet, String> {
    let items = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<ItemId>().map_err(|e| format!("bad item {p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if items.contains(&0) {
        return Err("item ids start at 1".into());
    }
    Ok(ItemSet::new(items))
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    let v = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("bad value {p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}
