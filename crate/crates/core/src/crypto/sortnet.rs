//! Batcher odd-even merge networks.
//!
//! The comparator list depends only on `n`. Sorting is descending; equal
//! values keep their input order. [`sort_outcomes`] evaluates the network on
//! values, [`apply_sort`] rebuilds the permutation from the outcomes alone.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::CryptoError;

/// Result of one comparison, value at the first position against the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Less,
    Equal,
    Greater,
}

impl Outcome {
    pub fn from_ordering(o: Ordering) -> Self {
        match o {
            Ordering::Less => Outcome::Less,
            Ordering::Equal => Outcome::Equal,
            Ordering::Greater => Outcome::Greater,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Outcome::Less => 0,
            Outcome::Equal => 1,
            Outcome::Greater => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Outcome::Less),
            1 => Some(Outcome::Equal),
            2 => Some(Outcome::Greater),
            _ => None,
        }
    }
}

/// Comparators `(x, y)` with `x < y` of Batcher's odd-even merge sort for
/// `n` inputs, in execution order.
pub fn comparison_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut p = 1;
    while p < n {
        let mut k = p;
        while k >= 1 {
            let mut j = k % p;
            while j + k < n {
                for i in 0..k.min(n - j - k) {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        pairs.push((i + j, i + j + k));
                    }
                }
                j += 2 * k;
            }
            k /= 2;
        }
        p *= 2;
    }
    pairs
}

/// Whether the elements at a comparator must be exchanged. `a` and `b` are
/// the input indices currently at the two positions.
fn must_swap(outcome: Outcome, a: usize, b: usize) -> bool {
    match outcome {
        Outcome::Less => true,
        Outcome::Equal => a > b,
        Outcome::Greater => false,
    }
}

/// Runs the network on `values` and records every outcome.
pub fn sort_outcomes<T: Ord>(values: &[T]) -> Vec<Outcome> {
    let mut at: Vec<usize> = (0..values.len()).collect();
    comparison_pairs(values.len())
        .into_iter()
        .map(|(x, y)| {
            let o = Outcome::from_ordering(values[at[x]].cmp(&values[at[y]]));
            if must_swap(o, at[x], at[y]) {
                at.swap(x, y);
            }
            o
        })
        .collect()
}

/// Replays the network from outcomes only. Returns input indices in
/// descending order of value.
pub fn apply_sort(n: usize, outcomes: &[Outcome]) -> Result<Vec<usize>, CryptoError> {
    Ok(replay(n, outcomes)?.0)
}

/// Outcome of every direct comparison, keyed by the (smaller, larger)
/// input indices involved.
pub type ComparisonLog = HashMap<(usize, usize), Outcome>;

/// Like [`apply_sort`], also returning the outcome of every direct
/// comparison keyed by the (smaller, larger) input indices involved.
pub fn replay(n: usize, outcomes: &[Outcome]) -> Result<(Vec<usize>, ComparisonLog), CryptoError> {
    let pairs = comparison_pairs(n);
    if pairs.len() != outcomes.len() {
        return Err(CryptoError::Outcomes);
    }
    let mut at: Vec<usize> = (0..n).collect();
    let mut seen = HashMap::with_capacity(pairs.len());
    for ((x, y), &o) in pairs.into_iter().zip(outcomes) {
        let (a, b) = (at[x], at[y]);
        let key = if a < b { (a, b, o) } else { (b, a, flip(o)) };
        seen.insert((key.0, key.1), key.2);
        if must_swap(o, a, b) {
            at.swap(x, y);
        }
    }
    Ok((at, seen))
}

fn flip(o: Outcome) -> Outcome {
    match o {
        Outcome::Less => Outcome::Greater,
        Outcome::Equal => Outcome::Equal,
        Outcome::Greater => Outcome::Less,
    }
}
