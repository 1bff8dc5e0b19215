//! Tensor calculus over a semiring.
//!
//! Two backends share one algebra: [`DenseTensor`] stores explicit entries
//! for small dimensions, and [`DeltaExpr`] is a symbolic sum of weighted
//! Kronecker-delta products that composes without ever enumerating the index
//! range. Witness tensors whose dimension is astronomically large (2^i - 1)
//! only ever exist in the symbolic form.

mod delta;
mod dense;
mod perm;

pub use delta::{constant_delta, CrossCheckStats, DeltaExpr, DeltaFactor, DeltaTerm, Relabeling};
pub use dense::DenseTensor;
pub use perm::{
    cycle_dense, cycle_expr, enumerate_full_permutations, enumerate_partial_permutations,
    is_full_permutation, is_partial_permutation,
};

use std::fmt;

use serde::{Deserialize, Serialize};

/// A named tensor index. Names identify which positions are contracted
/// together; within one expression every free index name is distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexName(pub String);

impl IndexName {
    pub fn new(name: impl Into<String>) -> IndexName {
        IndexName(name.into())
    }
}

impl fmt::Display for IndexName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for IndexName {
    fn from(s: &str) -> IndexName {
        IndexName(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    DimMismatch { left: usize, right: usize },
    BadPairing(String),
    NameClash(IndexName),
    UnknownIndex(IndexName),
    ShapeMismatch(String),
    SemiringMismatch,
    DenseLimitExceeded { needed: u128, limit: u128 },
    DimensionRequired,
    UnsupportedSymbolicSum(String),
    InvalidEntry(String),
    EnumerationBound { bound: usize },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::DimMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            TensorError::BadPairing(msg) => write!(f, "bad contraction pairing: {msg}"),
            TensorError::NameClash(n) => write!(f, "index name {n} appears on both operands"),
            TensorError::UnknownIndex(n) => write!(f, "unknown index name {n}"),
            TensorError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            TensorError::SemiringMismatch => write!(f, "operands use different semirings"),
            TensorError::DenseLimitExceeded { needed, limit } => {
                write!(f, "dense tensor would need {needed} entries (limit {limit})")
            }
            TensorError::DimensionRequired => {
                write!(f, "summation over an unconstrained index requires a known dimension")
            }
            TensorError::UnsupportedSymbolicSum(msg) => {
                write!(f, "symbolic summation unsupported here: {msg}")
            }
            TensorError::InvalidEntry(msg) => write!(f, "invalid tensor entry: {msg}"),
            TensorError::EnumerationBound { bound } => {
                write!(f, "enumeration exceeds configured bound of {bound}")
            }
        }
    }
}

impl std::error::Error for TensorError {}

/// Maximum number of explicit entries a dense tensor may hold. Overridable
/// through the `GLUENET_DENSE_LIMIT` environment variable.
pub fn dense_limit() -> u128 {
    std::env::var("GLUENET_DENSE_LIMIT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1_000_000)
}

/// All multi-indices of the given order over `[1, dim]`, lexicographically.
pub fn cells(order: usize, dim: usize) -> Vec<Vec<u32>> {
    dense::multi_indices(order, dim)
}

/// n^order with an overflow guard, for limit checks.
pub(crate) fn entry_count(dim: usize, order: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..order {
        total = total.saturating_mul(dim as u128);
    }
    total
}
