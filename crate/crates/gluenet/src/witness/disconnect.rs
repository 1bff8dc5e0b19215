//! The connectedness refutation: for acyclic, disconnected structures a
//! numbering pass per linking builds partial permutations whose completions
//! to full permutations annihilate every term — the contraction on the first
//! block is the zero tensor, which no value set admits.
//!
//! The completed permutations live at dimension `2^i - 1` for the final
//! label counter `i`, far beyond dense storage; everything here stays in the
//! symbolic backend and verification contracts block by block in tree order.

use std::collections::BTreeMap;

use num::{BigUint, One, Zero};

use crate::logic::{LinComb, Linking};
use crate::proofnet::block_components;
use crate::semiring::Scalar;
use crate::tensor::{cycle_expr, DeltaExpr, DeltaFactor, DeltaTerm, IndexName, Relabeling};

use super::{block_index_names, is_full_permutation_structural, Witness, WitnessError};

#[derive(Debug, Clone)]
struct BlockTuples {
    /// Distinct label tuples, in creation order.
    values: Vec<Vec<u64>>,
    /// Exit markers per tuple position, merged across linkings.
    marks: Vec<Vec<bool>>,
}

impl BlockTuples {
    fn new() -> BlockTuples {
        BlockTuples {
            values: vec![],
            marks: vec![],
        }
    }

    fn record(&mut self, tuple: Vec<u64>, exit_pos: Option<usize>) {
        if let Some(at) = self.values.iter().position(|t| *t == tuple) {
            if let Some(p) = exit_pos {
                self.marks[at][p] = true;
            }
            return;
        }
        let mut marks = vec![false; tuple.len()];
        if let Some(p) = exit_pos {
            marks[p] = true;
        }
        self.values.push(tuple);
        self.marks.push(marks);
    }
}

/// Runs the numbering over every nonzero term and completes the resulting
/// partial permutations; the witness records the completions and the verified
/// zero contraction.
pub fn disconnect_witness(comb: &LinComb) -> Result<Witness, WitnessError> {
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
    if nonzero.is_empty() {
        return Err(WitnessError::Precondition("no nonzero terms".into()));
    }
    let blocks = comb.sequent.blocks()?;
    let block_of = comb.sequent.block_of_occurrence()?;
    let block_names = block_index_names(comb)?;
    for (_, linking) in &nonzero {
        if !crate::proofnet::mdnf_fast_check(
            &comb.sequent,
            linking,
            crate::proofnet::CheckMode::Mix,
        )? {
            return Err(WitnessError::Precondition(
                "every term must be acyclic".into(),
            ));
        }
        if block_components(&comb.sequent, linking)?.len() < 2 {
            return Err(WitnessError::Precondition(
                "every term must be disconnected once one is".into(),
            ));
        }
    }

    // Leaves take 1..B in block order; fresh labels continue from B+1.
    let leaves: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() == 1).collect();
    let leaf_value: BTreeMap<usize, u64> = leaves
        .iter()
        .enumerate()
        .map(|(k, &b)| (b, k as u64 + 1))
        .collect();
    let mut next: u64 = leaves.len() as u64 + 1;
    let mut tuples: Vec<BlockTuples> = (0..blocks.len()).map(|_| BlockTuples::new()).collect();
    let mut term_components: Vec<Vec<usize>> = Vec::new();

    for (_, linking) in &nonzero {
        let total = comb.sequent.literal_count();
        let mut labels: Vec<Option<u64>> = vec![None; total + 1];
        for &b in &leaves {
            labels[blocks[b][0] as usize] = Some(leaf_value[&b]);
        }
        let mut valency: Vec<i64> = blocks.iter().map(|occs| occs.len() as i64).collect();
        for &b in &leaves {
            valency[b] = 1;
        }
        let components = block_components(&comb.sequent, linking)?;
        let chosen = components
            .iter()
            .filter(|c| !c.contains(&0))
            .min_by_key(|c| *c.iter().min().expect("components are nonempty"))
            .ok_or_else(|| WitnessError::Internal("no component avoids the first block".into()))?
            .clone();
        let terminal = *chosen
            .iter()
            .filter(|b| blocks[**b].len() == 1)
            .max_by_key(|b| leaf_value[b])
            .ok_or_else(|| {
                WitnessError::Internal("an acyclic component always contains a leaf".into())
            })?;
        valency[terminal] = 0;

        // Per-block exit position discovered during this pass.
        let mut pass_exits: BTreeMap<usize, usize> = BTreeMap::new();
        let budget = 4 * (total + 2);
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > budget {
                return Err(WitnessError::Internal(
                    "numbering did not settle within its budget".into(),
                ));
            }
            let Some(&m) = chosen.iter().find(|&&m| valency[m] == 1) else {
                break;
            };
            if blocks[m].len() == 1 {
                valency[m] = 0;
                let occ = blocks[m][0];
                let partner = linking
                    .partner(occ)
                    .ok_or_else(|| WitnessError::Precondition("unlinked literal".into()))?;
                let pb = block_of[partner as usize];
                if blocks[pb].len() != 1 {
                    labels[partner as usize] = Some(leaf_value[&m]);
                    valency[pb] -= 1;
                }
                continue;
            }
            let exit_pos = blocks[m]
                .iter()
                .position(|&o| labels[o as usize].is_none())
                .ok_or_else(|| {
                    WitnessError::Internal("valency-one block has no unlabeled literal".into())
                })?;
            let exit_occ = blocks[m][exit_pos];
            let matching = tuples[m].values.iter().find(|t| {
                blocks[m]
                    .iter()
                    .enumerate()
                    .all(|(p, &o)| p == exit_pos || labels[o as usize] == Some(t[p]))
            });
            let value = match matching {
                Some(t) => t[exit_pos],
                None => {
                    let v = next;
                    next += 1;
                    v
                }
            };
            labels[exit_occ as usize] = Some(value);
            valency[m] -= 1;
            pass_exits.insert(m, exit_pos);
            let partner = linking
                .partner(exit_occ)
                .ok_or_else(|| WitnessError::Precondition("unlinked literal".into()))?;
            let pb = block_of[partner as usize];
            if blocks[pb].len() != 1 {
                labels[partner as usize] = Some(value);
            }
            valency[pb] -= 1;
        }

        for &m in &chosen {
            let tuple: Option<Vec<u64>> =
                blocks[m].iter().map(|&o| labels[o as usize]).collect();
            let Some(tuple) = tuple else {
                return Err(WitnessError::Internal(format!(
                    "block {m} ended the pass with unlabeled literals"
                )));
            };
            tuples[m].record(tuple, pass_exits.get(&m).copied());
        }
        term_components.push(chosen);
    }

    // Dimension 2^i - 1 for the final counter.
    let n = (BigUint::one() << next) - BigUint::one();

    // Complete every non-first block to a full permutation.
    let mut block_tensors = Vec::with_capacity(blocks.len().saturating_sub(1));
    for m in 1..blocks.len() {
        block_tensors.push(complete_block(
            comb,
            &block_names[m],
            blocks[m].len(),
            leaf_value.get(&m).copied(),
            &tuples[m],
            &n,
        )?);
    }
    for tensor in &block_tensors {
        if !is_full_permutation_structural(tensor, &n) {
            return Err(WitnessError::Internal(
                "a completed block tensor is not structurally a full permutation".into(),
            ));
        }
    }

    let contraction = contract_terms(comb, &nonzero, &block_tensors, &n)?;
    if !contraction.is_zero() {
        return Err(WitnessError::Internal(
            "the total contraction did not vanish".into(),
        ));
    }
    let witness = Witness::Disconnect {
        n,
        block_tensors,
        term_components,
        contraction,
    };
    verify(&witness, comb)?;
    Ok(witness)
}

/// Builds the completed permutation for one block: leaves keep their basis
/// delta, tuple-less blocks take a plain cycle, and tuple-carrying blocks get
/// the relabeled congruence pinned to 1 at every tuple.
fn complete_block(
    comb: &LinComb,
    names: &[IndexName],
    block_size: usize,
    leaf_value: Option<u64>,
    tuples: &BlockTuples,
    n: &BigUint,
) -> Result<DeltaExpr, WitnessError> {
    if let Some(v) = leaf_value {
        return Ok(DeltaExpr::new(
            comb.semiring,
            names.to_vec(),
            vec![DeltaTerm::new(
                comb.semiring.one(),
                vec![DeltaFactor::Const {
                    index: names[0].clone(),
                    value: BigUint::from(v),
                }],
            )],
        )?);
    }
    if tuples.values.is_empty() {
        return Ok(cycle_expr(comb.semiring, names, n, &BigUint::zero()));
    }

    // Power assignments for unmarked cells: alpha_l(v) = 2^p, p = 1, 2, ...
    let mut alpha: Vec<BTreeMap<u64, BigUint>> = vec![BTreeMap::new(); block_size];
    let mut power: u32 = 1;
    for (tuple, marks) in tuples.values.iter().zip(tuples.marks.iter()) {
        for (l, (&v, &marked)) in tuple.iter().zip(marks.iter()).enumerate() {
            if !marked && !alpha[l].contains_key(&v) {
                let image = BigUint::one() << power;
                if &image > n {
                    return Err(WitnessError::Internal(
                        "power relabeling escapes the index range".into(),
                    ));
                }
                alpha[l].insert(v, image);
                power += 1;
            }
        }
    }
    // Marked cells close each tuple's congruence to 0 mod n; tuples with one
    // open cell resolve first, possibly unlocking others.
    loop {
        let mut progressed = false;
        let mut stuck = false;
        for tuple in &tuples.values {
            let open: Vec<usize> = (0..block_size)
                .filter(|&l| !alpha[l].contains_key(&tuple[l]))
                .collect();
            match open.len() {
                0 => {
                    let sum: BigUint = (0..block_size)
                        .map(|l| alpha[l][&tuple[l]].clone())
                        .fold(BigUint::zero(), |a, b| a + b);
                    if !(sum % n).is_zero() {
                        return Err(WitnessError::Internal(
                            "a completed tuple misses its congruence".into(),
                        ));
                    }
                }
                1 => {
                    let l = open[0];
                    let others: BigUint = (0..block_size)
                        .filter(|&j| j != l)
                        .map(|j| alpha[j][&tuple[j]].clone())
                        .fold(BigUint::zero(), |a, b| a + b);
                    let residue = (n - (others % n)) % n;
                    let image = if residue.is_zero() { n.clone() } else { residue };
                    alpha[l].insert(tuple[l], image);
                    progressed = true;
                }
                _ => stuck = true,
            }
        }
        if !stuck {
            break;
        }
        if !progressed {
            return Err(WitnessError::Internal(
                "tuple completion deadlocked on multiply-marked cells".into(),
            ));
        }
    }
    // Injectivity per position, demanded of any relabeling.
    let relabel: Vec<Relabeling> = alpha
        .into_iter()
        .map(|m| {
            Relabeling::from_pairs(m.into_iter().map(|(v, im)| (BigUint::from(v), im)))
                .map_err(|_| WitnessError::Internal("relabeling is not injective".into()))
        })
        .collect::<Result<_, _>>()?;
    for map in &relabel {
        if !map.in_range(n) {
            return Err(WitnessError::Internal(
                "relabeling escapes the index range".into(),
            ));
        }
    }
    let expr = DeltaExpr::new(
        comb.semiring,
        names.to_vec(),
        vec![DeltaTerm::new(
            comb.semiring.one(),
            vec![DeltaFactor::Cycle {
                indices: names.to_vec(),
                relabel,
                modulus: n.clone(),
                residue: BigUint::zero(),
            }],
        )],
    )?;
    // The completion still holds 1 at every recorded tuple.
    for tuple in &tuples.values {
        let assignment: BTreeMap<IndexName, BigUint> = names
            .iter()
            .cloned()
            .zip(tuple.iter().map(|&v| BigUint::from(v)))
            .collect();
        if !expr.evaluate(&assignment).is_one() {
            return Err(WitnessError::Internal(
                "completion lost a recorded tuple".into(),
            ));
        }
    }
    Ok(expr)
}

/// Contracts the combination with every non-first block tensor, term by term
/// in tree order, and returns the total on the first block's indices.
fn contract_terms(
    comb: &LinComb,
    nonzero: &[(Scalar, Linking)],
    block_tensors: &[DeltaExpr],
    n: &BigUint,
) -> Result<DeltaExpr, WitnessError> {
    let blocks = comb.sequent.blocks()?;
    let block_names = block_index_names(comb)?;
    let mut total = DeltaExpr::zero(comb.semiring, block_names[0].clone());
    for (coeff, linking) in nonzero {
        let single = LinComb::new(
            comb.semiring,
            comb.sequent.clone(),
            vec![(coeff.clone(), linking.clone())],
        )?;
        let mut acc = single.to_tensor();
        for tensor in block_tensors {
            acc = acc.pointwise_mul(tensor)?;
        }
        // Sum components leafward-in, so every congruence resolves with one
        // free slot at a time.
        for component in block_components(&comb.sequent, linking)? {
            let root = if component.contains(&0) {
                0
            } else {
                *component.iter().min().expect("nonempty component")
            };
            for m in post_order(&component, root, linking, &blocks)? {
                if m == 0 {
                    continue;
                }
                for ix in &block_names[m] {
                    acc = acc.sum_over(ix, Some(n))?;
                }
            }
        }
        let acc = acc.reorder_indices(&block_names[0])?;
        total = total.add(&acc)?;
    }
    Ok(total)
}

/// Post-order traversal of a component's block tree from `root`.
fn post_order(
    component: &[usize],
    root: usize,
    linking: &Linking,
    blocks: &[Vec<u32>],
) -> Result<Vec<usize>, WitnessError> {
    // Adjacency through links, restricted to the component.
    let mut adjacent: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &m in component {
        adjacent.entry(m).or_default();
    }
    let block_of = |occ: u32| -> usize {
        blocks
            .iter()
            .position(|occs| occs.contains(&occ))
            .expect("occurrence in a block")
    };
    for &m in component {
        for &occ in &blocks[m] {
            if let Some(partner) = linking.partner(occ) {
                let pb = block_of(partner);
                if pb != m && component.contains(&pb) {
                    adjacent.get_mut(&m).expect("registered").push(pb);
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![(root, usize::MAX, false)];
    let mut seen = vec![root];
    while let Some((m, parent, expanded)) = stack.pop() {
        if expanded {
            out.push(m);
            continue;
        }
        stack.push((m, parent, true));
        for &c in &adjacent[&m] {
            if c != parent && !seen.contains(&c) {
                seen.push(c);
                stack.push((c, m, false));
            }
        }
    }
    if out.len() != component.len() {
        return Err(WitnessError::Internal(
            "component traversal missed a block".into(),
        ));
    }
    Ok(out)
}

pub(super) fn verify(witness: &Witness, comb: &LinComb) -> Result<(), WitnessError> {
    let Witness::Disconnect {
        n,
        block_tensors,
        term_components: _,
        contraction,
    } = witness
    else {
        return Err(WitnessError::Internal("wrong witness kind".into()));
    };
    let blocks = comb.sequent.blocks()?;
    if block_tensors.len() + 1 != blocks.len() {
        return Err(WitnessError::Internal(
            "block tensor count does not match the sequent".into(),
        ));
    }
    for tensor in block_tensors {
        if !is_full_permutation_structural(tensor, n) {
            return Err(WitnessError::Internal(
                "a recorded block tensor is not structurally a full permutation".into(),
            ));
        }
    }
    let nonzero: Vec<(Scalar, Linking)> = comb
        .terms()
        .iter()
        .filter(|(c, _)| !c.is_zero())
        .cloned()
        .collect();
    let recomputed = contract_terms(comb, &nonzero, block_tensors, n)?;
    if &recomputed != contraction {
        return Err(WitnessError::Internal(
            "recorded contraction does not recompute".into(),
        ));
    }
    if !recomputed.is_zero() {
        return Err(WitnessError::Internal(
            "the recomputed contraction is not the zero tensor".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::testutil::comb;
    use super::*;
    use crate::semiring::Semiring;
    use crate::tensor::CrossCheckStats;

    fn eval_at(expr: &DeltaExpr, names: &[IndexName], tuple: &[u64]) -> Scalar {
        let assignment: BTreeMap<IndexName, BigUint> = names
            .iter()
            .cloned()
            .zip(tuple.iter().map(|&v| BigUint::from(v)))
            .collect();
        expr.evaluate(&assignment)
    }

    #[test]
    fn two_components_annihilate_via_the_leaf_values() {
        CrossCheckStats::enable();
        let c = comb(Semiring::Nat, "a|~a|a|~a", &[(1, &[(1, 2), (3, 4)])]);
        let w = disconnect_witness(&c).unwrap();
        let Witness::Disconnect {
            n,
            block_tensors,
            term_components,
            contraction,
        } = &w
        else {
            panic!("wrong kind")
        };
        // Four leaves, no fresh labels: dimension 2^5 - 1.
        assert_eq!(n, &BigUint::from(31u32));
        assert_eq!(term_components[0], vec![2, 3]);
        assert!(contraction.is_zero());
        // The leaf tensors carry the leaf values 2, 3, 4.
        let names = super::super::block_index_names(&c).unwrap();
        for (b, expected) in [(1usize, 2u64), (2, 3), (3, 4)] {
            assert!(eval_at(&block_tensors[b - 1], &names[b], &[expected]).is_one());
        }
        w.verify(&c).unwrap();
        CrossCheckStats::disable();
    }

    #[test]
    fn three_linking_example_reproduces_the_tuples() {
        // Seven blocks; three linkings sharing the disconnected shape.
        let text = "a|~a|~a|(a*a)|(~a*~a*~a)|a|a";
        let c = comb(
            Semiring::Nat,
            text,
            &[
                (1, &[(1, 2), (4, 3), (5, 6), (9, 8), (10, 7)]),
                (1, &[(1, 3), (4, 2), (5, 6), (9, 8), (10, 7)]),
                (1, &[(1, 2), (4, 3), (5, 7), (9, 8), (10, 6)]),
            ],
        );
        let w = disconnect_witness(&c).unwrap();
        let Witness::Disconnect {
            n,
            block_tensors,
            contraction,
            ..
        } = &w
        else {
            panic!("wrong kind")
        };
        // Labels reach 10, so the dimension is 2^11 - 1.
        assert_eq!(n, &BigUint::from(2047u32));
        assert!(contraction.is_zero());
        let names = super::super::block_index_names(&c).unwrap();
        // Leaves keep their values.
        assert!(eval_at(&block_tensors[0], &names[1], &[2]).is_one());
        assert!(eval_at(&block_tensors[1], &names[2], &[3]).is_one());
        assert!(eval_at(&block_tensors[4], &names[5], &[4]).is_one());
        assert!(eval_at(&block_tensors[5], &names[6], &[5]).is_one());
        // The two-literal block holds exactly its recorded tuples.
        let b4 = &block_tensors[2];
        assert!(eval_at(b4, &names[3], &[3, 6]).is_one());
        assert!(eval_at(b4, &names[3], &[2, 8]).is_one());
        assert!(eval_at(b4, &names[3], &[3, 8]).is_zero());
        assert!(eval_at(b4, &names[3], &[2, 6]).is_zero());
        // The three-literal block holds its three tuples.
        let b5 = &block_tensors[3];
        assert!(eval_at(b5, &names[4], &[6, 7, 4]).is_one());
        assert!(eval_at(b5, &names[4], &[8, 9, 4]).is_one());
        assert!(eval_at(b5, &names[4], &[10, 6, 4]).is_one());
        assert!(eval_at(b5, &names[4], &[6, 9, 4]).is_zero());
        w.verify(&c).unwrap();
    }

    #[test]
    fn seven_block_structure_collapses_to_zero() {
        let text = "~a|(a*a)|(~a*~a*~a)|a|a|a|~a";
        let c = comb(
            Semiring::Nat,
            text,
            &[(1, &[(2, 1), (3, 4), (8, 5), (7, 6), (9, 10)])],
        );
        let w = disconnect_witness(&c).unwrap();
        let Witness::Disconnect { contraction, .. } = &w else {
            panic!("wrong kind")
        };
        assert!(contraction.is_zero());
        w.verify(&c).unwrap();
    }

    #[test]
    fn preconditions_are_enforced() {
        // Connected input.
        let connected = comb(Semiring::Nat, "a|~a", &[(1, &[(1, 2)])]);
        assert!(matches!(
            disconnect_witness(&connected),
            Err(WitnessError::Precondition(_))
        ));
        // Cyclic input.
        let cyclic = comb(
            Semiring::Nat,
            "(a*~a)|b|~b",
            &[(1, &[(1, 2), (3, 4)])],
        );
        assert!(matches!(
            disconnect_witness(&cyclic),
            Err(WitnessError::Precondition(_))
        ));
    }
}
