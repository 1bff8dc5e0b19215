//! The acyclicity refutation: numbering the links of a cyclic linking
//! produces partial permutations whose contraction with the combination has
//! two nonzero entries on one block, one more than a value may have.

use num::BigUint;

use crate::logic::{LinComb, Linking};
use crate::proofnet::SwitchingCycle;
use crate::tensor::{DeltaExpr, IndexName};

use super::{
    block_index_names, is_partial_permutation_structural, tuples_to_expr, Probe, Witness,
    WitnessError,
};

/// Runs the link-numbering procedure for a cyclic linking `lambda` with
/// minimal cycle `cycle`, then verifies the two probe contractions.
pub fn cycle_witness(
    comb: &LinComb,
    lambda: &Linking,
    cycle: &SwitchingCycle,
) -> Result<Witness, WitnessError> {
    if !comb.sequent.is_mdnf() {
        return Err(WitnessError::Precondition(
            "combination must be in disjunctive normal form".into(),
        ));
    }
    let coeff = comb
        .terms()
        .iter()
        .find(|(_, l)| l == lambda)
        .map(|(c, _)| c.clone())
        .ok_or_else(|| WitnessError::Precondition("chosen linking is not a term".into()))?;
    if coeff.is_zero() {
        return Err(WitnessError::Precondition(
            "chosen linking has coefficient zero".into(),
        ));
    }
    let cycle_pairs = cycle.sorted_pairs();
    if cycle_pairs.is_empty() {
        return Err(WitnessError::Precondition("cycle has no links".into()));
    }
    for pair in &cycle_pairs {
        let in_lambda = lambda
            .pairs()
            .iter()
            .any(|&(p, n)| (p.min(n), p.max(n)) == *pair);
        if !in_lambda {
            return Err(WitnessError::Precondition(format!(
                "cycle link {pair:?} is not in the chosen linking"
            )));
        }
    }

    // Number the links: one shared number per link outside the cycle, two
    // per link on it, assigned to both endpoints.
    let total = comb.sequent.literal_count();
    let mut numbers: Vec<Vec<u64>> = vec![vec![]; total + 1];
    let mut next: u64 = 0;
    for &(p, n) in lambda.pairs() {
        if !cycle_pairs.contains(&(p.min(n), p.max(n))) {
            next += 1;
            numbers[p as usize].push(next);
            numbers[n as usize].push(next);
        }
    }
    for &(p, n) in &cycle_pairs {
        numbers[p as usize].push(next + 1);
        numbers[p as usize].push(next + 2);
        numbers[n as usize].push(next + 1);
        numbers[n as usize].push(next + 2);
        next += 2;
    }
    let n = BigUint::from(next);

    // One tuple per untouched block, two per block on the cycle.
    let blocks = comb.sequent.blocks()?;
    let block_names = block_index_names(comb)?;
    let on_cycle: Vec<bool> = blocks
        .iter()
        .map(|occs| {
            occs.iter().any(|&o| {
                cycle_pairs
                    .iter()
                    .any(|&(a, b)| a == o || b == o)
            })
        })
        .collect();
    let mut block_tuples: Vec<Vec<Vec<BigUint>>> = Vec::with_capacity(blocks.len());
    for (b, occs) in blocks.iter().enumerate() {
        let low: Vec<BigUint> = occs
            .iter()
            .map(|&o| BigUint::from(*numbers[o as usize].iter().min().expect("numbered")))
            .collect();
        if on_cycle[b] {
            let high: Vec<BigUint> = occs
                .iter()
                .map(|&o| BigUint::from(*numbers[o as usize].iter().max().expect("numbered")))
                .collect();
            block_tuples.push(vec![low, high]);
        } else {
            block_tuples.push(vec![low]);
        }
    }
    let block_tensors: Vec<DeltaExpr> = block_tuples
        .iter()
        .zip(block_names.iter())
        .map(|(tuples, names)| tuples_to_expr(comb.semiring, names, tuples))
        .collect();

    let block = on_cycle
        .iter()
        .position(|&c| c)
        .expect("cycle touches a block");
    let x1 = block_tuples[block][0].clone();
    let x2 = block_tuples[block][1].clone();
    if x1 == x2 {
        return Err(WitnessError::Internal(
            "the two probe tuples coincide".into(),
        ));
    }

    let contraction = contract_all_but(comb, &block_tensors, &block_names, block, &n)?;
    let probes = [
        probe(&contraction, &block_names[block], &x1, &n)?,
        probe(&contraction, &block_names[block], &x2, &n)?,
    ];
    for p in &probes {
        if p.value != coeff {
            return Err(WitnessError::Internal(format!(
                "probe at {:?} produced {} instead of the coefficient {}",
                p.tuple, p.value, coeff
            )));
        }
    }
    let witness = Witness::Cycle {
        n,
        block_tensors,
        block,
        probes,
        contraction,
    };
    verify(&witness, comb)?;
    Ok(witness)
}

fn contract_all_but(
    comb: &LinComb,
    block_tensors: &[DeltaExpr],
    block_names: &[Vec<IndexName>],
    skip: usize,
    n: &BigUint,
) -> Result<DeltaExpr, WitnessError> {
    let mut acc = comb.to_tensor();
    for (b, tensor) in block_tensors.iter().enumerate() {
        if b == skip {
            continue;
        }
        let pairs: Vec<(IndexName, IndexName)> = block_names[b]
            .iter()
            .map(|ix| (ix.clone(), ix.clone()))
            .collect();
        acc = acc.contract(tensor, &pairs, Some(n))?;
    }
    Ok(acc.reorder_indices(&block_names[skip])?)
}

fn probe(
    contraction: &DeltaExpr,
    names: &[IndexName],
    tuple: &[BigUint],
    n: &BigUint,
) -> Result<Probe, WitnessError> {
    let point = tuples_to_expr(contraction.semiring(), names, &[tuple.to_vec()]);
    let pairs: Vec<(IndexName, IndexName)> =
        names.iter().map(|ix| (ix.clone(), ix.clone())).collect();
    let scalar = contraction
        .contract(&point, &pairs, Some(n))?
        .as_scalar()
        .ok_or_else(|| WitnessError::Internal("probe did not reduce to a scalar".into()))?;
    Ok(Probe {
        tuple: tuple.to_vec(),
        value: scalar,
    })
}

/// Re-verifies a cycle witness from its recorded data alone.
pub(super) fn verify(witness: &Witness, comb: &LinComb) -> Result<(), WitnessError> {
    let Witness::Cycle {
        n,
        block_tensors,
        block,
        probes,
        contraction,
    } = witness
    else {
        return Err(WitnessError::Internal("wrong witness kind".into()));
    };
    let block_names = block_index_names(comb)?;
    if block_tensors.len() != block_names.len() {
        return Err(WitnessError::Internal(
            "block tensor count does not match the sequent".into(),
        ));
    }
    // Every block tensor is a partial permutation.
    for tensor in block_tensors {
        let tuples = expr_tuples(tensor)?;
        if !is_partial_permutation_structural(&tuples) {
            return Err(WitnessError::Internal(
                "a recorded block tensor is not a partial permutation".into(),
            ));
        }
    }
    // The recorded contraction recomputes identically.
    let recomputed = contract_all_but(comb, block_tensors, &block_names, *block, n)?;
    if &recomputed != contraction {
        return Err(WitnessError::Internal(
            "recorded contraction does not recompute".into(),
        ));
    }
    // Both probes reproduce and are nonzero at distinct tuples.
    if probes[0].tuple == probes[1].tuple {
        return Err(WitnessError::Internal("probe tuples coincide".into()));
    }
    for p in probes {
        let fresh = probe(contraction, &block_names[*block], &p.tuple, n)?;
        if fresh.value != p.value {
            return Err(WitnessError::Internal(format!(
                "probe at {:?} recomputed to {} instead of {}",
                p.tuple, fresh.value, p.value
            )));
        }
        if p.value.is_zero() {
            return Err(WitnessError::Internal(
                "a recorded probe value is zero".into(),
            ));
        }
    }
    Ok(())
}

/// Extracts the constant tuples of a sum-of-constant-deltas expression.
pub(super) fn expr_tuples(expr: &DeltaExpr) -> Result<Vec<Vec<BigUint>>, WitnessError> {
    use crate::tensor::DeltaFactor;
    let mut tuples = Vec::new();
    for term in expr.terms() {
        if !term.coeff.is_one() {
            return Err(WitnessError::Internal(
                "block tensor has a coefficient other than 1".into(),
            ));
        }
        let mut tuple = Vec::new();
        for ix in expr.indices() {
            let value = term
                .factors
                .iter()
                .find_map(|f| match f {
                    DeltaFactor::Const { index, value } if index == ix => Some(value.clone()),
                    _ => None,
                })
                .ok_or_else(|| {
                    WitnessError::Internal("block tensor is not a sum of constant deltas".into())
                })?;
            tuple.push(value);
        }
        tuples.push(tuple);
    }
    Ok(tuples)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::comb;
    use super::*;
    use crate::proofnet::{find_minimal_cycle, DEFAULT_PAR_BOUND};
    use crate::semiring::Semiring;
    use crate::tensor::CrossCheckStats;

    fn tuples_of(expr: &DeltaExpr) -> Vec<Vec<u64>> {
        expr_tuples(expr)
            .unwrap()
            .into_iter()
            .map(|t| t.iter().map(|v| u64::try_from(v).unwrap()).collect())
            .collect()
    }

    #[test]
    fn self_linked_pair_gets_both_diagonal_probes() {
        let c = comb(Semiring::Nat, "a*~a", &[(1, &[(1, 2)])]);
        let lambda = c.terms()[0].1.clone();
        let cycle = find_minimal_cycle(&c.sequent, &lambda, DEFAULT_PAR_BOUND).unwrap();
        let w = cycle_witness(&c, &lambda, &cycle).unwrap();
        let Witness::Cycle {
            n, probes, block, ..
        } = &w
        else {
            panic!("wrong kind")
        };
        assert_eq!(n, &BigUint::from(2u32));
        assert_eq!(*block, 0);
        assert_eq!(probes[0].tuple, vec![BigUint::from(1u32); 2]);
        assert_eq!(probes[1].tuple, vec![BigUint::from(2u32); 2]);
        assert!(probes.iter().all(|p| p.value.is_one()));
        w.verify(&c).unwrap();
    }

    #[test]
    fn five_block_example_reproduces_the_block_tensors() {
        CrossCheckStats::enable();
        let c = comb(
            Semiring::Nat,
            "a|~a|(a*~a)|(a*~a*a)|~a",
            &[(1, &[(1, 2), (3, 6), (5, 4), (7, 8)])],
        );
        let lambda = c.terms()[0].1.clone();
        let cycle = find_minimal_cycle(&c.sequent, &lambda, DEFAULT_PAR_BOUND).unwrap();
        assert_eq!(cycle.sorted_pairs(), vec![(3, 6), (4, 5)]);
        let w = cycle_witness(&c, &lambda, &cycle).unwrap();
        let Witness::Cycle {
            n,
            block_tensors,
            block,
            probes,
            ..
        } = &w
        else {
            panic!("wrong kind")
        };
        assert_eq!(n, &BigUint::from(6u32));
        assert_eq!(*block, 2);
        assert_eq!(tuples_of(&block_tensors[0]), vec![vec![1]]);
        assert_eq!(tuples_of(&block_tensors[1]), vec![vec![1]]);
        assert_eq!(tuples_of(&block_tensors[2]), vec![vec![3, 5], vec![4, 6]]);
        assert_eq!(
            tuples_of(&block_tensors[3]),
            vec![vec![5, 3, 2], vec![6, 4, 2]]
        );
        assert_eq!(tuples_of(&block_tensors[4]), vec![vec![2]]);
        assert_eq!(probes[0].tuple, vec![BigUint::from(3u32), BigUint::from(5u32)]);
        assert_eq!(probes[1].tuple, vec![BigUint::from(4u32), BigUint::from(6u32)]);
        w.verify(&c).unwrap();
        CrossCheckStats::disable();
    }

    #[test]
    fn shared_tail_linkings_are_told_apart() {
        // Three linkings where one shares all links away from the probed
        // block with the chosen one; the probes still isolate it.
        let c = comb(
            Semiring::Nat,
            "~a|(a*a)|(~a*~a*a)",
            &[
                (1, &[(2, 1), (3, 4), (6, 5)]),
                (1, &[(6, 1), (2, 5), (3, 4)]),
                (1, &[(6, 1), (2, 4), (3, 5)]),
            ],
        );
        let lambda = c.terms()[1].1.clone();
        let cycle = find_minimal_cycle(&c.sequent, &lambda, DEFAULT_PAR_BOUND).unwrap();
        assert_eq!(cycle.sorted_pairs(), vec![(2, 5), (3, 4)]);
        let w = cycle_witness(&c, &lambda, &cycle).unwrap();
        let Witness::Cycle {
            n,
            block_tensors,
            block,
            probes,
            ..
        } = &w
        else {
            panic!("wrong kind")
        };
        assert_eq!(n, &BigUint::from(5u32));
        assert_eq!(*block, 1);
        assert_eq!(tuples_of(&block_tensors[0]), vec![vec![1]]);
        assert_eq!(tuples_of(&block_tensors[1]), vec![vec![2, 4], vec![3, 5]]);
        assert_eq!(
            tuples_of(&block_tensors[2]),
            vec![vec![4, 2, 1], vec![5, 3, 1]]
        );
        assert!(probes.iter().all(|p| p.value.is_one()));
        w.verify(&c).unwrap();
    }

    #[test]
    fn preconditions_are_enforced() {
        let c = comb(Semiring::Nat, "a|~a", &[(1, &[(1, 2)])]);
        let lambda = c.terms()[0].1.clone();
        let fake = crate::proofnet::SwitchingCycle {
            links: vec![(1, 2)],
        };
        // The structure is acyclic; its only "cycle" is not one the checker
        // would produce, and the probes cannot both be nonzero.
        assert!(cycle_witness(&c, &lambda, &fake).is_err());
    }
}
