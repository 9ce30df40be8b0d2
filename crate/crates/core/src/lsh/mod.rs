//! Approximate generalized subset-containment search.
//!
//! Antecedents are scaled to `p' = p/‖p‖₁` and lifted onto the unit sphere by
//! `P(x) = [x; √(1 − ‖x‖²)]`; queries use `[T; 0]`. For every applicable rule
//! the inner product `⟨P(p'), [T; 0]⟩` equals 1, the maximum, so sign-random
//! projection LSH on the lifted vectors retrieves containment candidates.
//! Candidates are verified before ranking.

mod bank;
mod index;
mod topk;

use thiserror::Error;

pub use bank::GaussianBank;
pub use index::{query_top1, Candidates, LshIndex};
pub use topk::{copies_for, query_topk, topk_prep, LogBase, TopKCopy, TopKIndex};

use crate::rules::ItemSet;
use crate::wire::WireError;

/// Sparse real vector: `(coordinate, value)` pairs in ascending coordinate order.
pub type SparseVec = Vec<(usize, f64)>;

/// Radicands smaller than this are rounding noise from unit-norm inputs.
const RADICAND_FLOOR: f64 = 1e-12;
/// Inputs with norm above `1 + NORM_SLACK` are rejected.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LshError {
    #[error("input norm {0} exceeds 1")]
    NormTooLarge(f64),
    #[error("empty antecedent")]
    EmptyAntecedent,
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error("top-k preparation needs k >= 1 and at least 2 rules")]
    TopKDomain,
    #[error(transparent)]
    Wire(#[from] WireError),
}

fn lift_coordinate(norm_sq: f64) -> Result<f64, LshError> {
    if norm_sq.sqrt() > 1.0 + NORM_SLACK {
        return Err(LshError::NormTooLarge(norm_sq.sqrt()));
    }
    let radicand = 1.0 - norm_sq;
    Ok(if radicand < RADICAND_FLOOR { 0.0 } else { radicand.sqrt() })
}

/// `P(x) = [x; √(1 − ‖x‖²)]` for a dense vector.
pub fn augment(x: &[f64]) -> Result<Vec<f64>, LshError> {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    let mut out = Vec::with_capacity(x.len() + 1);
    out.extend_from_slice(x);
    out.push(lift_coordinate(norm_sq)?);
    Ok(out)
}

/// `p / ‖p‖₁` as a dense vector of length `universe` (item `i` at index `i−1`).
pub fn scaled_antecedent(p: &ItemSet, universe: u32) -> Result<Vec<f64>, LshError> {
    if p.is_empty() {
        return Err(LshError::EmptyAntecedent);
    }
    let mut v = vec![0.0; universe as usize];
    let w = 1.0 / p.len() as f64;
    for i in p.iter() {
        v[i as usize - 1] = w;
    }
    Ok(v)
}

/// Sparse `P(p/‖p‖₁)` in `ℝ^{universe+1}`; the lifted coordinate sits at
/// index `universe`.
pub fn antecedent_vector(p: &ItemSet, universe: u32) -> Result<SparseVec, LshError> {
    if p.is_empty() {
        return Err(LshError::EmptyAntecedent);
    }
    let w = 1.0 / p.len() as f64;
    let norm_sq: f64 = p.iter().map(|_| w * w).sum();
    let mut v: SparseVec = p.iter().map(|i| (i as usize - 1, w)).collect();
    let last = lift_coordinate(norm_sq)?;
    if last != 0.0 {
        v.push((universe as usize, last));
    }
    Ok(v)
}

/// Query vector `[T; 0]` (no scaling or lifting needed).
pub fn query_vector(t: &ItemSet) -> SparseVec {
    t.iter().map(|i| (i as usize - 1, 1.0)).collect()
}

/// One radius level: `K` concatenated bits, `L` repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Level {
    pub bits: usize,
    pub tables: usize,
}

/// Multi-radius schedule and bank seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LshParams {
    pub levels: Vec<Level>,
    pub seed: u64,
}

const DEFAULT_BITS: [usize; 3] = [32, 16, 10];
const DEFAULT_TABLES: [usize; 3] = [32, 16, 8];

impl LshParams {
    /// `K = (32, 16, 10)`, `L = (32, 16, 8)`.
    pub fn default_schedule(seed: u64) -> Self {
        Self::for_signature_width(32, seed)
    }

    /// The default schedule rescaled so that the finest level uses `width`
    /// bits (`32 → (32,16,10)`, `16 → (16,8,5)`, `10 → (10,5,3)`).
    pub fn for_signature_width(width: usize, seed: u64) -> Self {
        let levels = DEFAULT_BITS
            .iter()
            .zip(DEFAULT_TABLES)
            .map(|(&k, l)| Level { bits: ((k * width + 16) / 32).clamp(1, 64), tables: l })
            .collect();
        LshParams { levels, seed }
    }

    pub fn single(bits: usize, tables: usize, seed: u64) -> Self {
        LshParams { levels: vec![Level { bits, tables }], seed }
    }

    pub fn validate(&self) -> Result<(), LshError> {
        if self.levels.is_empty() {
            return Err(LshError::Schedule("no levels"));
        }
        for lv in &self.levels {
            if lv.bits == 0 || lv.bits > 64 {
                return Err(LshError::Schedule("bits per level must lie in 1..=64"));
            }
            if lv.tables == 0 {
                return Err(LshError::Schedule("at least one table per level"));
            }
        }
        Ok(())
    }

    /// Widest signature, `max_m K_m`.
    pub fn signature_width(&self) -> usize {
        self.levels.iter().map(|l| l.bits).max().unwrap_or(0)
    }

    /// Total number of `(m, l)` tables, `Σ_m L_m`.
    pub fn table_count(&self) -> usize {
        self.levels.iter().map(|l| l.tables).sum()
    }

    /// All `(m, l)` pairs in scan order.
    pub fn table_pairs(&self) -> Vec<(usize, usize)> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(m, lv)| (0..lv.tables).map(move |l| (m, l)))
            .collect()
    }
}
