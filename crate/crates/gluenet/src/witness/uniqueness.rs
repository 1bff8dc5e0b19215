//! The uniqueness refutation: a valency-driven two-pass numbering of two
//! distinct linkings yields partial permutations for every block except the
//! last leaf; probing the leaf at the two offered values exposes two nonzero
//! entries.

use num::BigUint;

use crate::logic::{LinComb, Linking};
use crate::semiring::Scalar;
use crate::tensor::{DeltaExpr, IndexName};

use super::cycle::expr_tuples as block_expr_tuples;
use super::{
    block_index_names, is_partial_permutation_structural, tuples_to_expr, Probe, Witness,
    WitnessError,
};

/// Runs the two-pass numbering over the first two distinct nonzero-weight
/// terms, producing the leaf probes and verifying the full contraction.
pub fn uniqueness_witness(comb: &LinComb) -> Result<Witness, WitnessError> {
    if !comb.sequent.is_mdnf() {
        return Err(WitnessError::Precondition(
            "combination must be in disjunctive normal form".into(),
        ));
    }
    let nonzero: Vec<(Scalar, Linking)> = comb
        .terms()
        .iter()
        .filter(|(c, _)| !c.is_zero())
        .cloned()
        .collect();
    if nonzero.len() < 2 {
        return Err(WitnessError::Precondition(
            "need at least two distinct nonzero terms".into(),
        ));
    }
    let blocks = comb.sequent.blocks()?;
    let block_names = block_index_names(comb)?;
    let Some(leaf) = (0..blocks.len()).rev().find(|&b| blocks[b].len() == 1) else {
        return Err(WitnessError::UnsupportedShape(
            "no one-literal block exists to probe; the combination is outside \
             the shape this refutation handles"
                .into(),
        ));
    };

    let lambda1 = &nonzero[0].1;
    let lambda2 = &nonzero[1].1;
    let total = comb.sequent.literal_count();
    let block_of = comb.sequent.block_of_occurrence()?;

    // Tuples accumulated per block; each pass contributes at most one.
    let mut tuples: Vec<Vec<Vec<u64>>> = vec![vec![]; blocks.len()];
    let mut offered: Vec<u64> = Vec::new();
    let mut next: u64 = 0;

    for linking in [lambda1, lambda2] {
        let mut labels: Vec<Option<u64>> = vec![None; total + 1];
        let mut valency: Vec<i64> = blocks.iter().map(|occs| occs.len() as i64).collect();
        valency[leaf] = 0;
        let budget = 4 * (total + 2);
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > budget {
                return Err(WitnessError::Internal(
                    "numbering did not settle within its budget".into(),
                ));
            }
            let Some(m) = (0..blocks.len()).find(|&m| valency[m] == 1) else {
                break;
            };
            let exit_pos = blocks[m]
                .iter()
                .position(|&o| labels[o as usize].is_none())
                .ok_or_else(|| {
                    WitnessError::Internal("valency-one block has no unlabeled literal".into())
                })?;
            let exit_occ = blocks[m][exit_pos];
            // Reuse the matching tuple's spare value, else take a fresh one.
            let matching = tuples[m].iter().find(|t| {
                blocks[m].iter().enumerate().all(|(p, &o)| {
                    p == exit_pos || labels[o as usize] == Some(t[p])
                })
            });
            let value = match matching {
                Some(t) => t[exit_pos],
                None => {
                    next += 1;
                    next
                }
            };
            labels[exit_occ as usize] = Some(value);
            valency[m] -= 1;
            let partner = linking.partner(exit_occ).ok_or_else(|| {
                WitnessError::Precondition("term does not link every literal".into())
            })?;
            let pb = block_of[partner as usize];
            if pb == leaf {
                offered.push(value);
            } else {
                labels[partner as usize] = Some(value);
            }
            valency[pb] -= 1;
        }
        // Record this pass's tuples.
        for (m, occs) in blocks.iter().enumerate() {
            if m == leaf {
                continue;
            }
            let tuple: Option<Vec<u64>> = occs
                .iter()
                .map(|&o| labels[o as usize])
                .collect();
            let Some(tuple) = tuple else {
                return Err(WitnessError::Internal(format!(
                    "block {m} finished the pass with unlabeled literals"
                )));
            };
            if !tuples[m].contains(&tuple) {
                tuples[m].push(tuple);
            }
        }
    }
    if offered.len() != 2 {
        return Err(WitnessError::Internal(format!(
            "expected two offers to the leaf, saw {}",
            offered.len()
        )));
    }
    if offered[0] == offered[1] {
        return Err(WitnessError::Internal(
            "the two leaf offers coincide".into(),
        ));
    }
    let n = BigUint::from(next.max(1));

    let block_tensors: Vec<(usize, DeltaExpr)> = (0..blocks.len())
        .filter(|&m| m != leaf)
        .map(|m| {
            let tuples_big: Vec<Vec<BigUint>> = tuples[m]
                .iter()
                .map(|t| t.iter().map(|&v| BigUint::from(v)).collect())
                .collect();
            (
                m,
                tuples_to_expr(comb.semiring, &block_names[m], &tuples_big),
            )
        })
        .collect();

    let contraction = contract_all_but_leaf(comb, &block_tensors, &block_names, leaf, &n)?;
    let probes = [
        leaf_probe(&contraction, &block_names[leaf], offered[0], &n)?,
        leaf_probe(&contraction, &block_names[leaf], offered[1], &n)?,
    ];
    // The probes reproduce the two chosen coefficients.
    for (p, expected) in probes.iter().zip([&nonzero[0].0, &nonzero[1].0]) {
        if &p.value != expected {
            return Err(WitnessError::Internal(format!(
                "leaf probe produced {} instead of coefficient {}",
                p.value, expected
            )));
        }
    }
    let witness = Witness::Uniqueness {
        n,
        block_tensors,
        leaf,
        probes,
        contraction,
    };
    verify(&witness, comb)?;
    Ok(witness)
}

fn contract_all_but_leaf(
    comb: &LinComb,
    block_tensors: &[(usize, DeltaExpr)],
    block_names: &[Vec<IndexName>],
    leaf: usize,
    n: &BigUint,
) -> Result<DeltaExpr, WitnessError> {
    let mut acc = comb.to_tensor();
    for (b, tensor) in block_tensors {
        let pairs: Vec<(IndexName, IndexName)> = block_names[*b]
            .iter()
            .map(|ix| (ix.clone(), ix.clone()))
            .collect();
        acc = acc.contract(tensor, &pairs, Some(n))?;
    }
    Ok(acc.reorder_indices(&block_names[leaf])?)
}

fn leaf_probe(
    contraction: &DeltaExpr,
    names: &[IndexName],
    value: u64,
    n: &BigUint,
) -> Result<Probe, WitnessError> {
    let tuple = vec![BigUint::from(value)];
    let point = tuples_to_expr(contraction.semiring(), names, &[tuple.clone()]);
    let pairs: Vec<(IndexName, IndexName)> =
        names.iter().map(|ix| (ix.clone(), ix.clone())).collect();
    let scalar = contraction
        .contract(&point, &pairs, Some(n))?
        .as_scalar()
        .ok_or_else(|| WitnessError::Internal("leaf probe did not reduce to a scalar".into()))?;
    Ok(Probe {
        tuple,
        value: scalar,
    })
}

pub(super) fn verify(witness: &Witness, comb: &LinComb) -> Result<(), WitnessError> {
    let Witness::Uniqueness {
        n,
        block_tensors,
        leaf,
        probes,
        contraction,
    } = witness
    else {
        return Err(WitnessError::Internal("wrong witness kind".into()));
    };
    let block_names = block_index_names(comb)?;
    for (_, tensor) in block_tensors {
        let tuples = block_expr_tuples(tensor)?;
        if !is_partial_permutation_structural(&tuples) {
            return Err(WitnessError::Internal(
                "a recorded block tensor is not a partial permutation".into(),
            ));
        }
    }
    let recomputed = contract_all_but_leaf(comb, block_tensors, &block_names, *leaf, n)?;
    if &recomputed != contraction {
        return Err(WitnessError::Internal(
            "recorded contraction does not recompute".into(),
        ));
    }
    if probes[0].tuple == probes[1].tuple {
        return Err(WitnessError::Internal("probe tuples coincide".into()));
    }
    for p in probes {
        if p.tuple.len() != 1 {
            return Err(WitnessError::Internal("leaf probes are order one".into()));
        }
        let fresh = leaf_probe(
            contraction,
            &block_names[*leaf],
            u64::try_from(&p.tuple[0]).map_err(|_| {
                WitnessError::Internal("probe value out of range".into())
            })?,
            n,
        )?;
        if fresh.value != p.value {
            return Err(WitnessError::Internal(format!(
                "leaf probe recomputed to {} instead of {}",
                fresh.value, p.value
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

#[cfg(test)]
mod tests {
    use super::super::testutil::comb;
    use super::*;
    use crate::semiring::Semiring;
    use crate::tensor::CrossCheckStats;

    fn tuples_of(expr: &DeltaExpr) -> Vec<Vec<u64>> {
        super::super::cycle::expr_tuples(expr)
            .unwrap()
            .into_iter()
            .map(|t| t.iter().map(|v| u64::try_from(v).unwrap()).collect())
            .collect()
    }

    const SIX_BLOCK: &str = "a|(~a*~a)|(a*a*~a)|a|(~a*~a)|a";
    const L1: &[(u32, u32)] = &[(1, 2), (4, 3), (5, 8), (7, 6), (10, 9)];
    const L2: &[(u32, u32)] = &[(1, 3), (4, 2), (5, 8), (7, 6), (10, 9)];
    const L3: &[(u32, u32)] = &[(1, 2), (4, 3), (5, 9), (7, 6), (10, 8)];

    #[test]
    fn three_term_example_reproduces_offers_five_and_eight() {
        CrossCheckStats::enable();
        let c = comb(
            Semiring::Nat,
            SIX_BLOCK,
            &[(1, L1), (1, L2), (1, L3)],
        );
        let w = uniqueness_witness(&c).unwrap();
        let Witness::Uniqueness {
            n,
            block_tensors,
            leaf,
            probes,
            contraction,
        } = &w
        else {
            panic!("wrong kind")
        };
        assert_eq!(n, &BigUint::from(8u32));
        assert_eq!(*leaf, 5);
        let by_block: std::collections::BTreeMap<usize, Vec<Vec<u64>>> = block_tensors
            .iter()
            .map(|(b, t)| (*b, tuples_of(t)))
            .collect();
        assert_eq!(by_block[&0], vec![vec![1]]);
        assert_eq!(by_block[&1], vec![vec![1, 2], vec![6, 1]]);
        assert_eq!(by_block[&2], vec![vec![2, 4, 3], vec![6, 7, 3]]);
        assert_eq!(by_block[&3], vec![vec![3]]);
        assert_eq!(by_block[&4], vec![vec![4, 5], vec![7, 8]]);
        assert_eq!(probes[0].tuple, vec![BigUint::from(5u32)]);
        assert_eq!(probes[1].tuple, vec![BigUint::from(8u32)]);
        assert!(probes.iter().all(|p| p.value.is_one()));
        // The third linking is annihilated: the contraction has exactly the
        // two probe entries.
        let dense = contraction.densify(8).unwrap();
        assert_eq!(dense.nonzero_count(), 2);
        w.verify(&c).unwrap();
        CrossCheckStats::disable();
    }

    #[test]
    fn two_net_example_offers_two_and_three() {
        let c = comb(
            Semiring::Nat,
            "a|(~a*~a)|a",
            &[(1, &[(1, 2), (4, 3)]), (1, &[(1, 3), (4, 2)])],
        );
        let w = uniqueness_witness(&c).unwrap();
        let Witness::Uniqueness {
            probes, contraction, ..
        } = &w
        else {
            panic!("wrong kind")
        };
        assert_eq!(probes[0].tuple, vec![BigUint::from(2u32)]);
        assert_eq!(probes[1].tuple, vec![BigUint::from(3u32)]);
        let dense = contraction.densify(3).unwrap();
        assert_eq!(dense.nonzero_count(), 2);
        w.verify(&c).unwrap();
    }

    #[test]
    fn rational_weights_show_up_in_the_probes() {
        use crate::logic::{parse_sequent, LinComb, Linking};
        let s = parse_sequent("a|(~a*~a)|a").unwrap();
        let third = Semiring::Rat.parse("1/3").unwrap();
        let two_thirds = Semiring::Rat.parse("2/3").unwrap();
        let c = LinComb::new(
            Semiring::Rat,
            s.clone(),
            vec![
                (third.clone(), Linking::new(&s, vec![(1, 2), (4, 3)]).unwrap()),
                (two_thirds.clone(), Linking::new(&s, vec![(1, 3), (4, 2)]).unwrap()),
            ],
        )
        .unwrap();
        let w = uniqueness_witness(&c).unwrap();
        let Witness::Uniqueness { probes, .. } = &w else {
            panic!("wrong kind")
        };
        assert_eq!(probes[0].value, third);
        assert_eq!(probes[1].value, two_thirds);
        w.verify(&c).unwrap();
    }

    #[test]
    fn leafless_shapes_are_reported_as_unsupported() {
        let c = comb(
            Semiring::Nat,
            "(a*~a)|(a*~a)",
            &[(1, &[(1, 2), (3, 4)]), (1, &[(1, 4), (3, 2)])],
        );
        assert!(matches!(
            uniqueness_witness(&c),
            Err(WitnessError::UnsupportedShape(_))
        ));
    }

    #[test]
    fn fewer_than_two_terms_is_a_precondition_error() {
        let c = comb(Semiring::Nat, "a|~a", &[(1, &[(1, 2)])]);
        assert!(matches!(
            uniqueness_witness(&c),
            Err(WitnessError::Precondition(_))
        ));
    }
}
