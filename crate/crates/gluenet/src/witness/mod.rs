//! Counterexample algorithms and the top-level decision procedure.
//!
//! Every rejection carries a witness that re-verifies from its own recorded
//! data: the block tensors pass their permutation or covalue predicates, and
//! re-running the recorded contraction reproduces the recorded violation.

mod cycle;
mod decide;
mod disconnect;
mod mix;
mod uniqueness;

pub use cycle::cycle_witness;
pub use decide::{decide, Decision, Mode};
pub use disconnect::disconnect_witness;
pub use mix::{mix_cycle_witness, mix_uniqueness_witness, zero_sum_counterexample, MixPass};
pub use uniqueness::uniqueness_witness;

use std::fmt;

use num::BigUint;

use crate::glue::GlueError;
use crate::logic::{LinComb, LogicError};
use crate::proofnet::NetError;
use crate::rewrite::RewriteError;
use crate::semiring::Scalar;
use crate::tensor::{DeltaExpr, DenseTensor, IndexName, TensorError};

#[derive(Debug)]
pub enum WitnessError {
    Precondition(String),
    /// A self-check failed while building or verifying a witness.
    Internal(String),
    /// The theory does not cover the request (and says so).
    KnownIncomplete(String),
    NotApplicable(String),
    UnsupportedShape(String),
    Tensor(TensorError),
    Glue(GlueError),
    Logic(LogicError),
    Net(NetError),
    Rewrite(RewriteError),
}

impl fmt::Display for WitnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessError::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            WitnessError::Internal(msg) => write!(f, "internal self-check failed: {msg}"),
            WitnessError::KnownIncomplete(msg) => write!(f, "outside the theory: {msg}"),
            WitnessError::NotApplicable(msg) => write!(f, "not applicable: {msg}"),
            WitnessError::UnsupportedShape(msg) => write!(f, "unsupported shape: {msg}"),
            WitnessError::Tensor(e) => write!(f, "{e}"),
            WitnessError::Glue(e) => write!(f, "{e}"),
            WitnessError::Logic(e) => write!(f, "{e}"),
            WitnessError::Net(e) => write!(f, "{e}"),
            WitnessError::Rewrite(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for WitnessError {}

impl From<TensorError> for WitnessError {
    fn from(e: TensorError) -> WitnessError {
        WitnessError::Tensor(e)
    }
}

impl From<GlueError> for WitnessError {
    fn from(e: GlueError) -> WitnessError {
        WitnessError::Glue(e)
    }
}

impl From<LogicError> for WitnessError {
    fn from(e: LogicError) -> WitnessError {
        WitnessError::Logic(e)
    }
}

impl From<NetError> for WitnessError {
    fn from(e: NetError) -> WitnessError {
        WitnessError::Net(e)
    }
}

impl From<RewriteError> for WitnessError {
    fn from(e: RewriteError) -> WitnessError {
        WitnessError::Rewrite(e)
    }
}

/// One probe of a contraction at a constant tuple: the tuple, and the scalar
/// the contraction takes there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub tuple: Vec<BigUint>,
    pub value: Scalar,
}

/// A rejection certificate. Every variant carries enough recorded data for
/// `verify` to reproduce the violation from scratch.
#[derive(Debug, Clone)]
pub enum Witness {
    /// The combination's coefficients sum to something other than 1.
    ScalarSum { sum: Scalar },
    /// A cyclic structure: two probe tuples on one block both produce the
    /// cyclic term's coefficient, where membership allows one nonzero.
    Cycle {
        n: BigUint,
        /// Partial permutations per block, over the block's index names.
        block_tensors: Vec<DeltaExpr>,
        /// The distinguished block left free (0-based).
        block: usize,
        probes: [Probe; 2],
        /// The contraction with every other block's tensor, on the free
        /// block's indices.
        contraction: DeltaExpr,
    },
    /// Disconnected structures: completed full permutations on every block
    /// except the first annihilate the whole combination.
    Disconnect {
        n: BigUint,
        /// One completed permutation per block except the first.
        block_tensors: Vec<DeltaExpr>,
        /// Per nonzero term: the component the contraction collapses in.
        term_components: Vec<Vec<usize>>,
        /// The contraction on the first block's indices (the zero tensor).
        contraction: DeltaExpr,
    },
    /// A proper linear combination of nets: probing the last leaf at the two
    /// recorded values yields two nonzero entries.
    Uniqueness {
        n: BigUint,
        /// Partial permutations per block except the leaf, paired with the
        /// block index they cover.
        block_tensors: Vec<(usize, DeltaExpr)>,
        leaf: usize,
        probes: [Probe; 2],
        contraction: DeltaExpr,
    },
    /// With Mix: a contraction of the pair form fails to be a full
    /// 2-permutation.
    MixUniqueness {
        n: usize,
        /// The pair left free.
        block: usize,
        /// Constants chosen for the other pairs, in pair order.
        constants: Vec<u32>,
        contraction: DenseTensor,
    },
    /// With Mix: the cyclic pair form contracts to the identity where the
    /// value set only allows the constant delta at (1, 1).
    MixCycle {
        gamma_blocks: usize,
        delta_blocks: usize,
        contraction: DenseTensor,
        required: DenseTensor,
    },
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Witness::ScalarSum { .. } => "scalar_sum",
            Witness::Cycle { .. } => "cycle",
            Witness::Disconnect { .. } => "disconnect",
            Witness::Uniqueness { .. } => "uniqueness",
            Witness::MixUniqueness { .. } => "mix_uniqueness",
            Witness::MixCycle { .. } => "mix_cycle",
        }
    }

    /// Verifies the witness against the combination it was issued for (the
    /// rewritten combination when a trace is attached to the rejection).
    pub fn verify(&self, comb: &LinComb) -> Result<(), WitnessError> {
        match self {
            Witness::ScalarSum { sum } => {
                let recomputed = comb.coefficient_sum();
                if recomputed != *sum {
                    return Err(WitnessError::Internal(format!(
                        "recorded sum {sum} but recomputed {recomputed}"
                    )));
                }
                if sum.is_one() {
                    return Err(WitnessError::Internal(
                        "recorded sum is 1, which is no violation".into(),
                    ));
                }
                Ok(())
            }
            Witness::Cycle { .. } => cycle::verify(self, comb),
            Witness::Disconnect { .. } => disconnect::verify(self, comb),
            Witness::Uniqueness { .. } => uniqueness::verify(self, comb),
            Witness::MixUniqueness { .. } => mix::verify_uniqueness(self, comb),
            Witness::MixCycle { .. } => mix::verify_cycle(self, comb),
        }
    }
}

/// Passes exactly when the coefficients sum to the multiplicative unit.
pub fn scalar_sum_check(comb: &LinComb) -> Result<(), Witness> {
    let sum = comb.coefficient_sum();
    if sum.is_one() {
        Ok(())
    } else {
        Err(Witness::ScalarSum { sum })
    }
}

/// The index names of each block of a normal-form sequent, in literal order.
pub(crate) fn block_index_names(comb: &LinComb) -> Result<Vec<Vec<IndexName>>, WitnessError> {
    Ok(crate::glue::MdnfShape::of_sequent(&comb.sequent)?.blocks)
}

/// A structural full-permutation check for symbolic block tensors: a single
/// coefficient-1 term whose factors partition the indices into constants and
/// cycle factors with injective in-range relabelings.
pub(crate) fn is_full_permutation_structural(expr: &DeltaExpr, n: &BigUint) -> bool {
    use crate::tensor::DeltaFactor;
    if expr.terms().len() != 1 {
        return false;
    }
    let term = &expr.terms()[0];
    if !term.coeff.is_one() {
        return false;
    }
    let mut covered: Vec<&IndexName> = Vec::new();
    for factor in &term.factors {
        match factor {
            DeltaFactor::Const { index, value } => {
                if value.clone() < BigUint::from(1u32) || value > n {
                    return false;
                }
                covered.push(index);
            }
            DeltaFactor::Cycle {
                indices,
                relabel,
                modulus,
                ..
            } => {
                if modulus != n {
                    return false;
                }
                for ix in indices {
                    if covered.contains(&ix) || indices.iter().filter(|j| *j == ix).count() > 1 {
                        return false;
                    }
                }
                for map in relabel {
                    if !map.in_range(n) {
                        return false;
                    }
                    let mut images: Vec<&BigUint> = map.pairs().values().collect();
                    images.sort();
                    images.dedup();
                    if images.len() != map.pairs().len() {
                        return false;
                    }
                }
                covered.extend(indices.iter());
            }
            DeltaFactor::Link { .. } => return false,
        }
    }
    let mut covered_sorted: Vec<&IndexName> = covered.clone();
    covered_sorted.sort();
    covered_sorted.dedup();
    covered_sorted.len() == covered.len() && covered.len() == expr.indices().len()
}

/// A structural partial-permutation check for symbolic block tensors given
/// as sums of constant-delta tuples: entries are 0/1 exactly when the tuples
/// are distinct, and lines hold at most one entry exactly when any two
/// tuples differ in at least two coordinates.
pub(crate) fn is_partial_permutation_structural(tuples: &[Vec<BigUint>]) -> bool {
    for (a, t) in tuples.iter().enumerate() {
        for u in tuples.iter().skip(a + 1) {
            let diff = t.iter().zip(u.iter()).filter(|(x, y)| x != y).count();
            if diff < 2 {
                return false;
            }
        }
    }
    true
}

/// Builds the symbolic sum of constant-delta tuples over the given names.
pub(crate) fn tuples_to_expr(
    semiring: crate::semiring::Semiring,
    names: &[IndexName],
    tuples: &[Vec<BigUint>],
) -> DeltaExpr {
    use crate::tensor::{DeltaFactor, DeltaTerm};
    let terms = tuples
        .iter()
        .map(|tuple| {
            let factors = names
                .iter()
                .zip(tuple.iter())
                .map(|(ix, v)| DeltaFactor::Const {
                    index: ix.clone(),
                    value: v.clone(),
                })
                .collect();
            DeltaTerm::new(semiring.one(), factors)
        })
        .collect();
    DeltaExpr::new(semiring, names.to_vec(), terms).expect("tuple expression is well formed")
}


#[cfg(test)]
pub(crate) mod testutil {
    use crate::logic::{parse_sequent, LinComb, Linking};
    use crate::semiring::{Scalar, Semiring};

    pub fn comb(
        semiring: Semiring,
        text: &str,
        terms: &[(i64, &[(u32, u32)])],
    ) -> LinComb {
        let s = parse_sequent(text).unwrap();
        let terms = terms
            .iter()
            .map(|(c, pairs)| {
                (
                    Scalar::int(*c),
                    Linking::new(&s, pairs.to_vec()).unwrap(),
                )
            })
            .collect();
        LinComb::new(semiring, s, terms).unwrap()
    }

    pub fn linking(text: &str, pairs: &[(u32, u32)]) -> Linking {
        let s = parse_sequent(text).unwrap();
        Linking::new(&s, pairs.to_vec()).unwrap()
    }
}
