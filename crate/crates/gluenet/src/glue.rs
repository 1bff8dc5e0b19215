//! Test-object families and value/covalue sets of glued objects.
//!
//! Each glued object pairs a finite set of value tensors with a finite set
//! of covalue tensors. The families used to refute membership are built over
//! basis deltas, and block-wise covalue enumeration drives the membership
//! oracle for disjunctive-normal-form tensors.

use std::fmt;
use std::str::FromStr;

use num::BigUint;

use crate::logic::{Polarity, Sequent};
use crate::semiring::Semiring;
use crate::tensor::{
    enumerate_full_permutations, enumerate_partial_permutations, is_full_permutation, DeltaExpr,
    DeltaFactor, DeltaTerm, DenseTensor, IndexName, TensorError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    A,
    C,
    S,
    D,
    C1,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Family::A => "A",
            Family::C => "C",
            Family::S => "S",
            Family::D => "D",
            Family::C1 => "C1",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Family {
    type Err = GlueError;

    fn from_str(s: &str) -> Result<Family, GlueError> {
        match s {
            "A" | "a" => Ok(Family::A),
            "C" | "c" => Ok(Family::C),
            "S" | "s" => Ok(Family::S),
            "D" | "d" => Ok(Family::D),
            "C1" | "c1" => Ok(Family::C1),
            other => Err(GlueError::UnknownFamily(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlueError {
    UnknownFamily(String),
    InvalidDim { family: Family, n: usize },
    OracleLimit(String),
    UnsupportedShape(String),
    Tensor(TensorError),
}

impl fmt::Display for GlueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlueError::UnknownFamily(s) => write!(f, "unknown test-object family {s:?}"),
            GlueError::InvalidDim { family, n } => {
                write!(f, "family {family} does not exist at dimension {n}")
            }
            GlueError::OracleLimit(msg) => write!(f, "oracle limit exceeded: {msg}"),
            GlueError::UnsupportedShape(msg) => write!(f, "unsupported shape: {msg}"),
            GlueError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for GlueError {}

impl From<TensorError> for GlueError {
    fn from(e: TensorError) -> GlueError {
        GlueError::Tensor(e)
    }
}

/// A glued object presented by finite generator sets of value and covalue
/// tensors, all of one order over one dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedObject {
    pub label: String,
    pub dim: usize,
    pub order: usize,
    pub values: Vec<DenseTensor>,
    pub covalues: Vec<DenseTensor>,
}

fn basis_deltas(n: usize) -> Vec<DenseTensor> {
    (1..=n as u32)
        .map(|x| DenseTensor::basis(Semiring::Nat, n, x))
        .collect()
}

/// Constructs a test-object family member. `D` fixes `n = 2` and `C1` fixes
/// `n = 1`.
pub fn test_object(family: Family, n: usize) -> Result<GluedObject, GlueError> {
    if n < 1 {
        return Err(GlueError::InvalidDim { family, n });
    }
    let object = match family {
        Family::A => {
            let mut gens = basis_deltas(n);
            gens.push(DenseTensor::zero(Semiring::Nat, 1, n));
            GluedObject {
                label: format!("A{n}"),
                dim: n,
                order: 1,
                values: gens.clone(),
                covalues: gens,
            }
        }
        Family::C => GluedObject {
            label: format!("C{n}"),
            dim: n,
            order: 1,
            values: basis_deltas(n),
            covalues: basis_deltas(n),
        },
        Family::S => GluedObject {
            label: format!("S{n}"),
            dim: n,
            order: 1,
            values: basis_deltas(n),
            covalues: vec![DenseTensor::ones(Semiring::Nat, 1, n)],
        },
        Family::D => {
            if n != 2 {
                return Err(GlueError::InvalidDim { family, n });
            }
            let gen = vec![DenseTensor::basis(Semiring::Nat, 2, 1)];
            GluedObject {
                label: "D".to_string(),
                dim: 2,
                order: 1,
                values: gen.clone(),
                covalues: gen,
            }
        }
        Family::C1 => {
            if n != 1 {
                return Err(GlueError::InvalidDim { family, n });
            }
            let gen = vec![DenseTensor::basis(Semiring::Nat, 1, 1)];
            GluedObject {
                label: "C1".to_string(),
                dim: 1,
                order: 1,
                values: gen.clone(),
                covalues: gen,
            }
        }
    };
    Ok(object)
}

/// Negation swaps values and covalues.
pub fn glued_dual(object: &GluedObject) -> GluedObject {
    GluedObject {
        label: format!("{}^", object.label),
        dim: object.dim,
        order: object.order,
        values: object.covalues.clone(),
        covalues: object.values.clone(),
    }
}

fn contains(set: &[DenseTensor], t: &DenseTensor) -> bool {
    set.iter().any(|s| s == t)
}

/// True when the value set contains every basis-delta product, which is what
/// pins the entries of candidate covalues to 0/1 during enumeration.
fn spans_basis(object: &GluedObject) -> bool {
    let cells = crate::tensor::cells(object.order, object.dim);
    cells.iter().all(|cell| {
        let mut t = DenseTensor::zero(Semiring::Nat, object.order, object.dim);
        t.set(cell.clone(), Semiring::Nat.one());
        contains(&object.values, &t)
    })
}

/// The glued tensor product: values are outer products; covalues are all
/// tensors whose contraction against either side's values lands in the other
/// side's covalues. Covalue entries are forced to 0/1 because both operand
/// value sets span the basis deltas, so the enumeration walks 0/1 tensors.
pub fn glued_tensor(left: &GluedObject, right: &GluedObject) -> Result<GluedObject, GlueError> {
    if left.dim != right.dim {
        return Err(GlueError::UnsupportedShape(format!(
            "dimensions {} and {} differ",
            left.dim, right.dim
        )));
    }
    if !spans_basis(left) || !spans_basis(right) {
        return Err(GlueError::UnsupportedShape(
            "covalue enumeration requires both value sets to span the basis deltas".into(),
        ));
    }
    let mut values = Vec::new();
    for u in &left.values {
        for v in &right.values {
            let outer = u.outer(v)?;
            if !contains(&values, &outer) {
                values.push(outer);
            }
        }
    }

    let order = left.order + right.order;
    let n = left.dim;
    let cells = crate::tensor::cells(order, n);
    if cells.len() > 24 {
        return Err(GlueError::OracleLimit(format!(
            "covalue enumeration over 2^{} candidates",
            cells.len()
        )));
    }
    let left_positions: Vec<usize> = (0..left.order).collect();
    let right_positions: Vec<usize> = (left.order..order).collect();
    let mut covalues = Vec::new();
    'candidates: for mask in 0u64..(1u64 << cells.len()) {
        let mut z = DenseTensor::zero(Semiring::Nat, order, n);
        for (b, cell) in cells.iter().enumerate() {
            if mask >> b & 1 == 1 {
                z.set(cell.clone(), Semiring::Nat.one());
            }
        }
        for v in &right.values {
            let pairs: Vec<(usize, usize)> = right_positions
                .iter()
                .enumerate()
                .map(|(k, &p)| (p, k))
                .collect();
            let slice = z.contract(v, &pairs)?;
            if !contains(&left.covalues, &slice) {
                continue 'candidates;
            }
        }
        for u in &left.values {
            let pairs: Vec<(usize, usize)> = left_positions
                .iter()
                .enumerate()
                .map(|(k, &p)| (p, k))
                .collect();
            let slice = z.contract(u, &pairs)?;
            if !contains(&right.covalues, &slice) {
                continue 'candidates;
            }
        }
        covalues.push(z);
    }
    Ok(GluedObject {
        label: format!("({}x{})", left.label, right.label),
        dim: n,
        order,
        values,
        covalues,
    })
}

/// Par is the De Morgan dual of tensor.
pub fn glued_par(left: &GluedObject, right: &GluedObject) -> Result<GluedObject, GlueError> {
    let product = glued_tensor(&glued_dual(left), &glued_dual(right))?;
    let mut out = glued_dual(&product);
    out.label = format!("({}|{})", left.label, right.label);
    Ok(out)
}

/// The block structure of a disjunctive-normal-form sequent, as the tensor
/// index names of each block in literal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdnfShape {
    pub blocks: Vec<Vec<IndexName>>,
}

impl MdnfShape {
    pub fn of_sequent(sequent: &Sequent) -> Result<MdnfShape, GlueError> {
        let blocks = sequent
            .blocks()
            .map_err(|_| GlueError::UnsupportedShape("sequent is not in normal form".into()))?;
        let occs = sequent.occurrences();
        let blocks = blocks
            .into_iter()
            .map(|occ_list| {
                occ_list
                    .into_iter()
                    .map(|o| match occs[(o - 1) as usize].polarity {
                        Polarity::Pos => IndexName::new(format!("i{o}")),
                        Polarity::Neg => IndexName::new(format!("j{o}")),
                    })
                    .collect()
            })
            .collect();
        Ok(MdnfShape { blocks })
    }

    /// Pairs the m-th positive occurrence with the m-th negative occurrence,
    /// the block structure used by the two-literal pair families.
    pub fn pairs_of_sequent(sequent: &Sequent) -> Result<MdnfShape, GlueError> {
        let occs = sequent.occurrences();
        let pos: Vec<u32> = occs
            .iter()
            .enumerate()
            .filter(|(_, o)| o.polarity == Polarity::Pos)
            .map(|(k, _)| k as u32 + 1)
            .collect();
        let neg: Vec<u32> = occs
            .iter()
            .enumerate()
            .filter(|(_, o)| o.polarity == Polarity::Neg)
            .map(|(k, _)| k as u32 + 1)
            .collect();
        if pos.len() != neg.len() {
            return Err(GlueError::UnsupportedShape(
                "polarity counts differ, occurrences cannot be paired".into(),
            ));
        }
        let blocks = pos
            .into_iter()
            .zip(neg)
            .map(|(p, n)| {
                vec![
                    IndexName::new(format!("i{p}")),
                    IndexName::new(format!("j{n}")),
                ]
            })
            .collect();
        Ok(MdnfShape { blocks })
    }

    /// Synthetic shape with the given block sizes, all indices positive.
    pub fn with_sizes(sizes: &[usize]) -> MdnfShape {
        let mut next = 1;
        let blocks = sizes
            .iter()
            .map(|&len| {
                (0..len)
                    .map(|_| {
                        let name = IndexName::new(format!("i{next}"));
                        next += 1;
                        name
                    })
                    .collect()
            })
            .collect();
        MdnfShape { blocks }
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn total_order(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }
}

/// Per-block covalue generators for one family at one dimension.
fn block_covalues(
    family: Family,
    block_size: usize,
    n: usize,
    bound: usize,
) -> Result<Vec<DenseTensor>, GlueError> {
    match family {
        Family::A => {
            enumerate_partial_permutations(block_size, n, bound).map_err(|e| match e {
                TensorError::EnumerationBound { bound } => GlueError::OracleLimit(format!(
                    "partial permutations of order {block_size} over [{n}] exceed {bound}"
                )),
                other => GlueError::Tensor(other),
            })
        }
        Family::C | Family::C1 => Ok(enumerate_full_permutations(block_size, n)),
        Family::S => {
            if block_size != 2 {
                return Err(GlueError::UnsupportedShape(
                    "this family needs two-literal blocks".into(),
                ));
            }
            // delta^x on the positive slot, all-ones on the negative slot.
            Ok((1..=n as u32)
                .map(|x| {
                    DenseTensor::basis(Semiring::Nat, n, x)
                        .outer(&DenseTensor::ones(Semiring::Nat, 1, n))
                        .expect("outer of generators")
                })
                .collect())
        }
        Family::D => match block_size {
            1 => Ok(vec![DenseTensor::basis(Semiring::Nat, 2, 1)]),
            2 => Ok(vec![
                DenseTensor::basis(Semiring::Nat, 2, 1)
                    .outer(&DenseTensor::basis(Semiring::Nat, 2, 1))
                    .expect("outer of generators"),
                DenseTensor::identity(Semiring::Nat, 2),
            ]),
            _ => Err(GlueError::UnsupportedShape(
                "blocks must have one or two literals".into(),
            )),
        },
    }
}

/// Every tuple of per-block covalues for the shape, as one tensor per block.
pub fn covalue_enumerate(
    shape: &MdnfShape,
    family: Family,
    n: usize,
    bound: usize,
) -> Result<Vec<Vec<DenseTensor>>, GlueError> {
    check_bounds(shape, family, n)?;
    let sets: Vec<Vec<DenseTensor>> = shape
        .blocks
        .iter()
        .map(|b| block_covalues(family, b.len(), n, bound))
        .collect::<Result<_, _>>()?;
    let mut total: usize = 1;
    for set in &sets {
        total = total.saturating_mul(set.len());
        if total > bound {
            return Err(GlueError::OracleLimit(format!(
                "covalue tuple count exceeds {bound}"
            )));
        }
    }
    let mut tuples = vec![vec![]];
    for set in &sets {
        let mut next = Vec::with_capacity(tuples.len() * set.len());
        for prefix in &tuples {
            for t in set {
                let mut tuple: Vec<DenseTensor> = prefix.clone();
                tuple.push(t.clone());
                next.push(tuple);
            }
        }
        tuples = next;
    }
    Ok(tuples)
}

fn check_bounds(shape: &MdnfShape, family: Family, n: usize) -> Result<(), GlueError> {
    match family {
        Family::A | Family::C => {
            if n > 3 || shape.total_order() > 6 {
                return Err(GlueError::OracleLimit(format!(
                    "family {family} oracle is bounded to dimension 3 and six literals \
                     (got dimension {n}, {} literals)",
                    shape.total_order()
                )));
            }
        }
        Family::S => {
            if shape.blocks.iter().any(|b| b.len() != 2) {
                return Err(GlueError::UnsupportedShape(
                    "this family needs two-literal blocks".into(),
                ));
            }
            if n > 6 || shape.blocks.len() > 6 {
                return Err(GlueError::OracleLimit(
                    "bounded to six blocks and dimension 6".into(),
                ));
            }
        }
        Family::D => {
            let mut seen_pair = false;
            for b in &shape.blocks {
                match b.len() {
                    1 => {
                        if seen_pair {
                            return Err(GlueError::UnsupportedShape(
                                "one-literal blocks must precede two-literal blocks".into(),
                            ));
                        }
                    }
                    2 => seen_pair = true,
                    _ => {
                        return Err(GlueError::UnsupportedShape(
                            "blocks must have one or two literals".into(),
                        ))
                    }
                }
            }
            if n != 2 {
                return Err(GlueError::InvalidDim { family, n });
            }
        }
        Family::C1 => {
            if n != 1 {
                return Err(GlueError::InvalidDim { family, n });
            }
        }
    }
    Ok(())
}

/// Why a tensor failed membership: the block left free, the covalues chosen
/// for the other blocks, and what the contraction produced.
#[derive(Debug, Clone)]
pub struct MembershipCertificate {
    pub block: usize,
    pub covalues: Vec<(usize, DenseTensor)>,
    pub contraction: DenseTensor,
    pub requirement: String,
}

#[derive(Debug, Clone)]
pub enum Membership {
    Member,
    NonMember(Box<MembershipCertificate>),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member)
    }
}

/// Converts a dense tensor into a symbolic expression over the given names.
pub fn dense_to_delta(t: &DenseTensor, names: &[IndexName]) -> DeltaExpr {
    assert_eq!(names.len(), t.order());
    let terms = t
        .nonzeros()
        .map(|(idx, v)| {
            let factors = names
                .iter()
                .zip(idx.iter())
                .map(|(ix, &c)| DeltaFactor::Const {
                    index: ix.clone(),
                    value: BigUint::from(c),
                })
                .collect();
            DeltaTerm::new(v.clone(), factors)
        })
        .collect();
    DeltaExpr::new(t.semiring(), names.to_vec(), terms).expect("dense entries are in range")
}

fn contract_block(
    expr: &DeltaExpr,
    block_names: &[IndexName],
    covalue: &DenseTensor,
    n: usize,
) -> Result<DeltaExpr, GlueError> {
    let cov = dense_to_delta(covalue, block_names);
    let pairs: Vec<(IndexName, IndexName)> = block_names
        .iter()
        .map(|ix| (ix.clone(), ix.clone()))
        .collect();
    Ok(expr.contract(&cov, &pairs, Some(&BigUint::from(n)))?)
}

fn family_requirement(family: Family) -> &'static str {
    match family {
        Family::A => "a single 1 entry or the zero tensor",
        Family::C | Family::C1 => "exactly one entry equal to 1",
        Family::S => "a full 2-permutation",
        Family::D => "the constant delta at (1, 1)",
    }
}

fn block_result_ok(family: Family, result: &DenseTensor) -> bool {
    match family {
        Family::A => {
            result.is_zero() || (result.nonzero_count() == 1 && result.nonzeros().all(|(_, v)| v.is_one()))
        }
        Family::C | Family::C1 => {
            result.nonzero_count() == 1 && result.nonzeros().all(|(_, v)| v.is_one())
        }
        Family::S => result.order() == 2 && is_full_permutation(result),
        Family::D => {
            result.order() == 2
                && result.nonzero_count() == 1
                && result.get(&[1, 1]).is_one()
        }
    }
}

/// Decides whether a disjunctive-normal-form tensor belongs to the value set
/// of the family's glued object at dimension `n`: for every block, every
/// choice of covalues on the other blocks must contract to the family's
/// required form. A failure ships the violating choice.
pub fn mdnf_value_membership(
    expr: &DeltaExpr,
    shape: &MdnfShape,
    family: Family,
    n: usize,
    bound: usize,
) -> Result<Membership, GlueError> {
    check_bounds(shape, family, n)?;
    let block_count = shape.blocks.len();
    let per_block: Vec<Vec<DenseTensor>> = shape
        .blocks
        .iter()
        .map(|b| block_covalues(family, b.len(), n, bound))
        .collect::<Result<_, _>>()?;

    // For the two-valued family over the fixed pair form, membership only
    // quantifies over the two-literal blocks; the one-literal prefix always
    // takes its sole covalue.
    let focus_blocks: Vec<usize> = match family {
        Family::D => (0..block_count)
            .filter(|&b| shape.blocks[b].len() == 2)
            .collect(),
        _ => (0..block_count).collect(),
    };

    for &k in &focus_blocks {
        let others: Vec<usize> = (0..block_count).filter(|&m| m != k).collect();
        let mut choice = vec![0usize; others.len()];
        loop {
            // Contract every other block's chosen covalue.
            let mut acc = expr.clone();
            let mut chosen = Vec::new();
            for (slot, &m) in others.iter().enumerate() {
                let covalue = &per_block[m][choice[slot]];
                chosen.push((m, covalue.clone()));
                acc = contract_block(&acc, &shape.blocks[m], covalue, n)?;
            }
            let result = acc
                .reorder_indices(&shape.blocks[k])
                .map_err(GlueError::Tensor)?
                .densify(n)?;
            if !block_result_ok(family, &result) {
                return Ok(Membership::NonMember(Box::new(MembershipCertificate {
                    block: k,
                    covalues: chosen,
                    contraction: result,
                    requirement: family_requirement(family).to_string(),
                })));
            }
            // Advance the odometer.
            let mut p = 0;
            loop {
                if p == others.len() {
                    break;
                }
                choice[p] += 1;
                if choice[p] < per_block[others[p]].len() {
                    break;
                }
                choice[p] = 0;
                p += 1;
            }
            if p == others.len() {
                break;
            }
        }
    }

    // The regular pair form also demands the one-literal prefix contract
    // into its value set when the pairs are all consumed.
    if family == Family::D {
        let gamma: Vec<usize> = (0..block_count)
            .filter(|&b| shape.blocks[b].len() == 1)
            .collect();
        if !gamma.is_empty() {
            let deltas: Vec<usize> = (0..block_count)
                .filter(|&b| shape.blocks[b].len() == 2)
                .collect();
            let mut choice = vec![0usize; deltas.len()];
            loop {
                let mut acc = expr.clone();
                let mut chosen = Vec::new();
                for (slot, &m) in deltas.iter().enumerate() {
                    let covalue = &per_block[m][choice[slot]];
                    chosen.push((m, covalue.clone()));
                    acc = contract_block(&acc, &shape.blocks[m], covalue, n)?;
                }
                let gamma_names: Vec<IndexName> = gamma
                    .iter()
                    .flat_map(|&b| shape.blocks[b].iter().cloned())
                    .collect();
                let result = acc
                    .reorder_indices(&gamma_names)
                    .map_err(GlueError::Tensor)?
                    .densify(n)?;
                if !in_xi(&result) {
                    return Ok(Membership::NonMember(Box::new(MembershipCertificate {
                        block: gamma[0],
                        covalues: chosen,
                        contraction: result,
                        requirement: "1 at the all-ones corner, 0 one step away".to_string(),
                    })));
                }
                let mut p = 0;
                loop {
                    if p == deltas.len() {
                        break;
                    }
                    choice[p] += 1;
                    if choice[p] < per_block[deltas[p]].len() {
                        break;
                    }
                    choice[p] = 0;
                    p += 1;
                }
                if p == deltas.len() || deltas.is_empty() {
                    break;
                }
            }
        }
    }
    Ok(Membership::Member)
}

/// Membership in the constraint set of the regular pair form: 1 at the
/// all-ones corner, 0 at every corner exactly one coordinate away.
pub fn in_xi(t: &DenseTensor) -> bool {
    let ones = vec![1u32; t.order()];
    if !t.get(&ones).is_one() {
        return false;
    }
    for k in 0..t.order() {
        for v in 2..=t.dim() as u32 {
            let mut idx = ones.clone();
            idx[k] = v;
            if !t.get(&idx).is_zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{enumerate_linkings, parse_sequent, LinComb, Linking};
    use crate::proofnet::{mdnf_fast_check, CheckMode};
    use crate::semiring::Scalar;

    const BOUND: usize = 200_000;

    #[test]
    fn family_generators_match_their_definitions() {
        let a2 = test_object(Family::A, 2).unwrap();
        assert_eq!(a2.values.len(), 3);
        assert!(a2.values.iter().any(|t| t.is_zero()));
        let c1 = test_object(Family::C1, 1).unwrap();
        assert_eq!(c1.values, vec![DenseTensor::basis(Semiring::Nat, 1, 1)]);
        assert_eq!(c1.values, c1.covalues);
        let s3 = test_object(Family::S, 3).unwrap();
        assert_eq!(s3.covalues, vec![DenseTensor::ones(Semiring::Nat, 1, 3)]);
        assert!(test_object(Family::D, 3).is_err());
        assert!(test_object(Family::C1, 2).is_err());
    }

    #[test]
    fn self_duality_of_the_families() {
        for (family, n) in [
            (Family::A, 2),
            (Family::C, 3),
            (Family::S, 2),
            (Family::D, 2),
            (Family::C1, 1),
        ] {
            let obj = test_object(family, n).unwrap();
            let dual = glued_dual(&obj);
            if matches!(family, Family::A | Family::C | Family::D | Family::C1) {
                assert_eq!(dual.values, obj.covalues);
                assert_eq!(dual.covalues, obj.values);
                assert_eq!(glued_dual(&dual).values, obj.values);
            } else {
                assert_eq!(dual.values, obj.covalues);
            }
        }
    }

    #[test]
    fn squared_c2_covalues_are_the_permutation_matrices() {
        let c2 = test_object(Family::C, 2).unwrap();
        let sq = glued_tensor(&c2, &c2).unwrap();
        let mut expected = enumerate_full_permutations(2, 2);
        expected.sort_by_key(|t| format!("{t:?}"));
        let mut got = sq.covalues.clone();
        got.sort_by_key(|t| format!("{t:?}"));
        assert_eq!(got, expected);
        assert_eq!(sq.values.len(), 4);
    }

    #[test]
    fn squared_a2_covalues_are_the_partial_permutations() {
        let a2 = test_object(Family::A, 2).unwrap();
        let sq = glued_tensor(&a2, &a2).unwrap();
        assert_eq!(sq.covalues.len(), 7);
        for z in &sq.covalues {
            assert!(crate::tensor::is_partial_permutation(z));
        }
        // Values: the 4 constant deltas plus the zero tensor (absorbed dupes).
        assert_eq!(sq.values.len(), 5);
    }

    #[test]
    fn iterated_powers_match_the_permutation_sets() {
        for n in 1..=2usize {
            for steps in 1..=2usize {
                let c = test_object(Family::C, n).unwrap();
                let mut power = c.clone();
                for _ in 0..steps {
                    power = glued_tensor(&power, &c).unwrap();
                }
                let order = steps + 1;
                let mut expected = enumerate_full_permutations(order, n);
                expected.sort_by_key(|t| format!("{t:?}"));
                let mut got = power.covalues.clone();
                got.sort_by_key(|t| format!("{t:?}"));
                assert_eq!(got, expected, "C^{order} over [{n}]");
                // Values: all constant deltas.
                assert_eq!(got.len(), expected.len());
                assert_eq!(power.values.len(), n.pow(order as u32));

                let a = test_object(Family::A, n).unwrap();
                let mut power = a.clone();
                for _ in 0..steps {
                    power = glued_tensor(&power, &a).unwrap();
                }
                let mut expected = enumerate_partial_permutations(order, n, BOUND).unwrap();
                expected.sort_by_key(|t| format!("{t:?}"));
                let mut got = power.covalues.clone();
                got.sort_by_key(|t| format!("{t:?}"));
                assert_eq!(got, expected, "A^{order} over [{n}]");
                assert_eq!(power.values.len(), n.pow(order as u32) + 1);
            }
        }
    }

    #[test]
    fn par_is_the_de_morgan_dual() {
        let c2 = test_object(Family::C, 2).unwrap();
        let par = glued_par(&c2, &c2).unwrap();
        let tensor = glued_tensor(&c2, &c2).unwrap();
        assert_eq!(par.values, tensor.covalues);
        assert_eq!(par.covalues, tensor.values);
    }

    #[test]
    fn covalue_tuple_counts() {
        let two_block = covalue_enumerate(&MdnfShape::with_sizes(&[2]), Family::C, 2, BOUND)
            .unwrap();
        assert_eq!(two_block.len(), 2);
        let a_single = covalue_enumerate(&MdnfShape::with_sizes(&[1]), Family::A, 2, BOUND)
            .unwrap();
        assert_eq!(a_single.len(), 3);
        let s_pairs = covalue_enumerate(&MdnfShape::with_sizes(&[2, 2]), Family::S, 2, BOUND)
            .unwrap();
        assert_eq!(s_pairs.len(), 4);
    }

    #[test]
    fn identity_is_a_pair_value_but_twice_identity_is_not() {
        let s = parse_sequent("a|~a").unwrap();
        let l = Linking::new(&s, vec![(1, 2)]).unwrap();
        let shape = MdnfShape::pairs_of_sequent(&s).unwrap();
        for n in 1..=3usize {
            let c = LinComb::single(Semiring::Nat, s.clone(), l.clone());
            let t = c.to_tensor();
            assert!(mdnf_value_membership(&t, &shape, Family::S, n, BOUND)
                .unwrap()
                .is_member());
            let doubled = LinComb::new(
                Semiring::Nat,
                s.clone(),
                vec![(Scalar::int(2), l.clone())],
            )
            .unwrap()
            .to_tensor();
            let outcome = mdnf_value_membership(&doubled, &shape, Family::S, n, BOUND).unwrap();
            assert!(!outcome.is_member(), "n={n}");
        }
    }

    #[test]
    fn identity_fails_the_pair_family_on_a_tensor_block() {
        let s = parse_sequent("a*~a").unwrap();
        let l = Linking::new(&s, vec![(1, 2)]).unwrap();
        let shape = MdnfShape::of_sequent(&s).unwrap();
        let t = LinComb::single(Semiring::Nat, s, l).to_tensor();
        let outcome = mdnf_value_membership(&t, &shape, Family::D, 2, BOUND).unwrap();
        let Membership::NonMember(cert) = outcome else {
            panic!("identity must not belong to the pair value set");
        };
        assert_eq!(cert.contraction, DenseTensor::identity(Semiring::Nat, 2));
    }

    #[test]
    fn nets_pass_and_non_nets_fail_the_full_families() {
        // Small disjunctive-normal-form structures, every linking.
        for text in ["(a*~a)|(a*~a)", "a|~a|a|~a", "a|(~a*a)|~a"] {
            let s = parse_sequent(text).unwrap();
            let shape = MdnfShape::of_sequent(&s).unwrap();
            for l in enumerate_linkings(&s, 6).unwrap().linkings {
                let is_net = mdnf_fast_check(&s, &l, CheckMode::Mll).unwrap();
                let t = LinComb::single(Semiring::Nat, s.clone(), l).to_tensor();
                for n in 2..=3usize {
                    let a = mdnf_value_membership(&t, &shape, Family::A, n, BOUND)
                        .unwrap()
                        .is_member();
                    let c = mdnf_value_membership(&t, &shape, Family::C, n, BOUND)
                        .unwrap()
                        .is_member();
                    if is_net {
                        assert!(a && c, "{text} at n={n}");
                    } else {
                        assert!(!(a && c), "{text} at n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_dimension_collapses_everything_to_scalar_one() {
        // At dimension 1 every covalue tuple densifies to the single entry 1
        // and a combination is a value exactly when its coefficients sum to 1.
        let s = parse_sequent("(a*~a)|(a*~a)").unwrap();
        let shape = MdnfShape::of_sequent(&s).unwrap();
        for tuple in covalue_enumerate(&shape, Family::C, 1, BOUND).unwrap() {
            for t in tuple {
                assert!(t.nonzeros().all(|(_, v)| v.is_one()));
                assert_eq!(t.nonzero_count(), 1);
            }
        }
        let linkings = enumerate_linkings(&s, 6).unwrap().linkings;
        let good = LinComb::new(
            Semiring::Int,
            s.clone(),
            vec![
                (Scalar::int(2), linkings[0].clone()),
                (Scalar::int(-1), linkings[1].clone()),
            ],
        )
        .unwrap();
        assert!(
            mdnf_value_membership(&good.to_tensor(), &shape, Family::C1, 1, BOUND)
                .unwrap()
                .is_member()
        );
        let bad = LinComb::new(
            Semiring::Int,
            s,
            vec![(Scalar::int(2), linkings[0].clone())],
        )
        .unwrap();
        assert!(
            !mdnf_value_membership(&bad.to_tensor(), &shape, Family::C1, 1, BOUND)
                .unwrap()
                .is_member()
        );
    }

    #[test]
    fn oracle_bounds_error_instead_of_passing() {
        let shape = MdnfShape::with_sizes(&[4, 3]);
        assert!(matches!(
            mdnf_value_membership(
                &DeltaExpr::zero(Semiring::Nat, vec![]),
                &shape,
                Family::A,
                4,
                BOUND
            ),
            Err(GlueError::OracleLimit(_))
        ));
    }
}
