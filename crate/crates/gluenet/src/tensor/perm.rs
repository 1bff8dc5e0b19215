//! Full and partial permutation tensors.
//!
//! A 0/1 tensor of order L is a full permutation when fixing any L-1 indices
//! leaves exactly one entry equal to 1, and a partial permutation when it
//! leaves at most one. The predicates here test literal 0/1 entries of the
//! ambient semiring; see the module docs in `glue` for why that matches the
//! covalue enumerations.

use std::collections::BTreeMap;

use num::{BigUint, Zero};

use crate::semiring::Semiring;

use super::delta::{DeltaExpr, DeltaFactor, DeltaTerm, Relabeling};
use super::{entry_count, DenseTensor, IndexName, TensorError};

fn lines_ok(t: &DenseTensor, require_total: bool) -> bool {
    for (_, v) in t.nonzeros() {
        if !v.is_one() {
            return false;
        }
    }
    if t.order() == 0 {
        return !require_total || t.get(&[]).is_one();
    }
    for k in 0..t.order() {
        let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for (idx, _) in t.nonzeros() {
            let mut rest = idx.clone();
            rest.remove(k);
            *counts.entry(rest).or_insert(0) += 1;
        }
        if counts.values().any(|&c| c > 1) {
            return false;
        }
        if require_total {
            let expected = entry_count(t.dim(), t.order() - 1);
            if counts.len() as u128 != expected {
                return false;
            }
        }
    }
    true
}

/// Entries are 0/1 and every line (all-but-one index fixed) has exactly one 1.
pub fn is_full_permutation(t: &DenseTensor) -> bool {
    lines_ok(t, true)
}

/// Entries are 0/1 and every line has at most one 1.
pub fn is_partial_permutation(t: &DenseTensor) -> bool {
    lines_ok(t, false)
}

/// All full permutations of the given order over `[1, n]`, in a fixed order.
/// Order 1 gives the basis deltas; order 2 the permutation matrices; higher
/// orders the Latin hypercubes.
pub fn enumerate_full_permutations(order: usize, n: usize) -> Vec<DenseTensor> {
    let semiring = Semiring::Nat;
    assert!(order >= 1 && n >= 1);
    // Choose, for every prefix in [n]^(order-1), the final coordinate, subject
    // to every line of the resulting assignment being injective.
    let prefixes = super::dense::multi_indices(order - 1, n);
    let mut out = Vec::new();
    let mut choice: Vec<u32> = Vec::with_capacity(prefixes.len());

    fn consistent(prefixes: &[Vec<u32>], choice: &[u32], y: u32) -> bool {
        let cur = &prefixes[choice.len()];
        for (prev, &py) in prefixes.iter().zip(choice.iter()) {
            if py != y {
                continue;
            }
            // Same final coordinate: prefixes must differ in at least two
            // places (or the full cells collide on a line).
            let diff = prev.iter().zip(cur.iter()).filter(|(a, b)| a != b).count();
            if diff <= 1 {
                return false;
            }
        }
        true
    }

    fn recurse(
        prefixes: &[Vec<u32>],
        n: usize,
        choice: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if choice.len() == prefixes.len() {
            out.push(choice.clone());
            return;
        }
        for y in 1..=n as u32 {
            if consistent(prefixes, choice, y) {
                choice.push(y);
                recurse(prefixes, n, choice, out);
                choice.pop();
            }
        }
    }

    let mut assignments = Vec::new();
    recurse(&prefixes, n, &mut choice, &mut assignments);
    for assignment in assignments {
        let mut t = DenseTensor::zero(semiring, order, n);
        for (prefix, y) in prefixes.iter().zip(assignment.iter()) {
            let mut idx = prefix.clone();
            idx.push(*y);
            t.set(idx, semiring.one());
        }
        debug_assert!(is_full_permutation(&t));
        out.push(t);
    }
    out
}

/// All partial permutations of the given order over `[1, n]`, i.e. all sets
/// of cells that pairwise differ in at least two coordinates. Errors when the
/// result would exceed `bound` tensors.
pub fn enumerate_partial_permutations(
    order: usize,
    n: usize,
    bound: usize,
) -> Result<Vec<DenseTensor>, TensorError> {
    let semiring = Semiring::Nat;
    let cells = super::dense::multi_indices(order, n);
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();

    fn emit(
        cells: &[Vec<u32>],
        chosen: &[usize],
        order: usize,
        n: usize,
        semiring: Semiring,
        out: &mut Vec<DenseTensor>,
        bound: usize,
    ) -> Result<(), TensorError> {
        if out.len() >= bound {
            return Err(TensorError::EnumerationBound { bound });
        }
        let mut t = DenseTensor::zero(semiring, order, n);
        for &c in chosen {
            t.set(cells[c].clone(), semiring.one());
        }
        out.push(t);
        Ok(())
    }

    fn recurse(
        cells: &[Vec<u32>],
        start: usize,
        chosen: &mut Vec<usize>,
        order: usize,
        n: usize,
        semiring: Semiring,
        out: &mut Vec<DenseTensor>,
        bound: usize,
    ) -> Result<(), TensorError> {
        emit(cells, chosen, order, n, semiring, out, bound)?;
        for c in start..cells.len() {
            let ok = chosen.iter().all(|&p| {
                cells[p]
                    .iter()
                    .zip(cells[c].iter())
                    .filter(|(a, b)| a != b)
                    .count()
                    >= 2
            });
            if ok {
                chosen.push(c);
                recurse(cells, c + 1, chosen, order, n, semiring, out, bound)?;
                chosen.pop();
            }
        }
        Ok(())
    }

    recurse(&cells, 0, &mut chosen, order, n, semiring, &mut out, bound)?;
    Ok(out)
}

/// The dense cycle tensor: 1 exactly where the coordinates sum to `r` mod `n`.
pub fn cycle_dense(order: usize, n: usize, r: usize) -> DenseTensor {
    let semiring = Semiring::Nat;
    let mut t = DenseTensor::zero(semiring, order, n);
    for idx in super::dense::multi_indices(order, n) {
        let sum: usize = idx.iter().map(|&c| c as usize).sum();
        if sum % n == r % n {
            t.set(idx, semiring.one());
        }
    }
    t
}

/// The symbolic cycle tensor over the given index names, with identity
/// relabelings on every slot.
pub fn cycle_expr(
    semiring: Semiring,
    names: &[IndexName],
    n: &BigUint,
    r: &BigUint,
) -> DeltaExpr {
    assert!(!n.is_zero());
    let factor = DeltaFactor::Cycle {
        indices: names.to_vec(),
        relabel: vec![Relabeling::identity(); names.len()],
        modulus: n.clone(),
        residue: r % n,
    };
    DeltaExpr::new(
        semiring,
        names.to_vec(),
        vec![DeltaTerm::new(semiring.one(), vec![factor])],
    )
    .expect("cycle expression is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::Scalar;

    #[test]
    fn identity_matrix_is_a_full_permutation() {
        for n in 1..=4 {
            assert!(is_full_permutation(&DenseTensor::identity(Semiring::Nat, n)));
        }
    }

    #[test]
    fn double_one_row_fails_both_predicates() {
        let t = DenseTensor::from_rows(Semiring::Nat, &[vec![1, 1], vec![0, 0]]);
        assert!(!is_full_permutation(&t));
        assert!(!is_partial_permutation(&t));
    }

    #[test]
    fn zero_tensor_is_partial_but_not_full() {
        let z = DenseTensor::zero(Semiring::Nat, 2, 2);
        assert!(is_partial_permutation(&z));
        assert!(!is_full_permutation(&z));
    }

    #[test]
    fn every_full_permutation_is_partial() {
        for t in enumerate_full_permutations(2, 3) {
            assert!(is_partial_permutation(&t));
        }
    }

    #[test]
    fn cycle_2_3_0_support() {
        let t = cycle_dense(2, 3, 0);
        let mut support: Vec<Vec<u32>> = t.nonzeros().map(|(i, _)| i.clone()).collect();
        support.sort();
        assert_eq!(support, vec![vec![1, 2], vec![2, 1], vec![3, 3]]);
    }

    #[test]
    fn cycle_2_2_0_is_identity() {
        assert_eq!(cycle_dense(2, 2, 0), DenseTensor::identity(Semiring::Nat, 2));
    }

    #[test]
    fn cycle_order_one_is_basis_delta() {
        for n in 1..=4usize {
            for x in 1..=n {
                let t = cycle_dense(1, n, x % n);
                assert_eq!(t, DenseTensor::basis(Semiring::Nat, n, x as u32));
            }
        }
    }

    #[test]
    fn cycles_are_full_permutations() {
        for (order, n, r) in [(1, 3, 2), (2, 3, 1), (3, 2, 0), (3, 3, 2)] {
            assert!(is_full_permutation(&cycle_dense(order, n, r)));
        }
    }

    #[test]
    fn cycle_expr_matches_cycle_dense() {
        for (order, n, r) in [(1usize, 3usize, 2usize), (2, 3, 0), (3, 2, 1), (3, 3, 2)] {
            let names: Vec<IndexName> = (0..order)
                .map(|k| IndexName::new(format!("c{k}")))
                .collect();
            let e = cycle_expr(
                Semiring::Nat,
                &names,
                &BigUint::from(n),
                &BigUint::from(r),
            );
            assert_eq!(e.densify(n).unwrap(), cycle_dense(order, n, r));
        }
    }

    #[test]
    fn permutation_counts_match_enumeration_oracles() {
        // |Perm(2, n)| = n! checked against filtering all 0/1 matrices.
        for n in 1..=4usize {
            let fast = enumerate_full_permutations(2, n).len();
            let factorial: usize = (1..=n).product();
            assert_eq!(fast, factorial);
        }
        // Brute-force filter over all 0/1 squares for n <= 3 as an
        // independent route to the same counts.
        for n in 1..=3usize {
            let cells = super::super::dense::multi_indices(2, n);
            let mut full = 0usize;
            let mut partial = 0usize;
            for mask in 0..(1u32 << cells.len()) {
                let mut t = DenseTensor::zero(Semiring::Nat, 2, n);
                for (b, c) in cells.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        t.set(c.clone(), Scalar::int(1));
                    }
                }
                if is_full_permutation(&t) {
                    full += 1;
                }
                if is_partial_permutation(&t) {
                    partial += 1;
                }
            }
            assert_eq!(full, enumerate_full_permutations(2, n).len());
            assert_eq!(
                partial,
                enumerate_partial_permutations(2, n, 100_000).unwrap().len()
            );
        }
        assert_eq!(enumerate_partial_permutations(2, 2, 100).unwrap().len(), 7);
        assert_eq!(enumerate_full_permutations(3, 2).len(), 2);
    }

    #[test]
    fn relabeled_full_permutation_stays_full() {
        // Relabel one index family of a cycle by a sampled bijection.
        let t = cycle_dense(2, 4, 1);
        let relabel = [3u32, 1, 4, 2]; // image of 1..4
        let mut r = DenseTensor::zero(Semiring::Nat, 2, 4);
        for (idx, v) in t.nonzeros() {
            r.set(vec![relabel[(idx[0] - 1) as usize], idx[1]], v.clone());
        }
        assert!(is_full_permutation(&r));
    }

    #[test]
    fn enumeration_bound_is_reported() {
        assert!(matches!(
            enumerate_partial_permutations(2, 3, 5),
            Err(TensorError::EnumerationBound { bound: 5 })
        ));
    }
}
