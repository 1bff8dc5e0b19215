//! Refutations in the mode where connectedness is waived: the pair-form
//! uniqueness search over a zero-sum-free semiring, the cyclic pair-form
//! contraction, and the six-term combination showing why additive inverses
//! put uniqueness out of reach.

use num::BigUint;

use crate::glue::{in_xi, mdnf_value_membership, MdnfShape, Membership};
use crate::logic::{LinComb, Linking, Polarity, Sequent};
use crate::semiring::{Scalar, Semiring};
use crate::tensor::{
    is_full_permutation, DeltaExpr, DeltaFactor, DeltaTerm, DenseTensor, IndexName,
};

use super::{Witness, WitnessError};

/// Outcome of the pair-form uniqueness check.
#[derive(Debug)]
pub enum MixPass {
    Pass,
    Reject(Witness),
}

/// The pair blocks of an all-par sequent: m-th positive with m-th negative.
fn pair_shape(sequent: &Sequent) -> Result<Vec<(u32, u32)>, WitnessError> {
    if sequent.blocks()?.iter().any(|b| b.len() != 1) {
        return Err(WitnessError::Precondition(
            "pair-form input must contain no tensor connective".into(),
        ));
    }
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
    if pos.len() != neg.len() || pos.is_empty() {
        return Err(WitnessError::Precondition(
            "pair-form input needs matching positive and negative counts".into(),
        ));
    }
    Ok(pos.into_iter().zip(neg).collect())
}

fn pair_names(pairs: &[(u32, u32)]) -> Vec<(IndexName, IndexName)> {
    pairs
        .iter()
        .map(|&(p, n)| {
            (
                IndexName::new(format!("i{p}")),
                IndexName::new(format!("j{n}")),
            )
        })
        .collect()
}

/// Contracts the combination with `delta^{x_m} (x) ones` on every pair except
/// `k`, returning the dense matrix on pair `k`.
fn pair_contraction(
    comb: &LinComb,
    pairs: &[(u32, u32)],
    k: usize,
    constants: &[u32],
    n: usize,
) -> Result<DenseTensor, WitnessError> {
    let names = pair_names(pairs);
    let dim = BigUint::from(n);
    let mut acc = comb.to_tensor();
    let mut slot = 0;
    for (m, (iname, jname)) in names.iter().enumerate() {
        if m == k {
            continue;
        }
        let x = constants[slot];
        slot += 1;
        // delta at x on the positive index, all-ones on the negative one.
        let covalue = DeltaExpr::new(
            comb.semiring,
            vec![iname.clone(), jname.clone()],
            vec![DeltaTerm::new(
                comb.semiring.one(),
                vec![DeltaFactor::Const {
                    index: iname.clone(),
                    value: BigUint::from(x),
                }],
            )],
        )?;
        let pairing = vec![
            (iname.clone(), iname.clone()),
            (jname.clone(), jname.clone()),
        ];
        acc = acc.contract(&covalue, &pairing, Some(&dim))?;
    }
    let (iname, jname) = &names[k];
    Ok(acc
        .reorder_indices(&[iname.clone(), jname.clone()])?
        .densify(n)?)
}

/// Searches the pair form for a contraction that fails to be a full
/// 2-permutation. Passes a single unit-weight term outright; over a semiring
/// with additive inverses the search is refused.
pub fn mix_uniqueness_witness(comb: &LinComb) -> Result<MixPass, WitnessError> {
    if !comb.semiring.is_zero_sum_free() {
        return Err(WitnessError::KnownIncomplete(format!(
            "the {} semiring has additive inverses; with connectedness waived, \
             combinations can hide behind cancellation and these tests cannot \
             reject them",
            comb.semiring.name()
        )));
    }
    let nonzero = comb.drop_zero_terms();
    if nonzero.terms().len() == 1 && nonzero.terms()[0].0.is_one() {
        return Ok(MixPass::Pass);
    }
    let pairs = pair_shape(&comb.sequent)?;
    let m = pairs.len();
    let n = m.max(1);
    if m > 8 {
        return Err(WitnessError::UnsupportedShape(format!(
            "pair-form search over {m} pairs is beyond the configured scale"
        )));
    }

    for k in 0..m {
        // The natural first candidate gives every remaining pair its own
        // index; the exhaustive sweep follows.
        let others: Vec<usize> = (0..m).filter(|&q| q != k).collect();
        let wlog: Vec<u32> = others.iter().map(|&q| q as u32 + 1).collect();
        let mut candidates = vec![wlog.clone()];
        let mut vector = vec![1u32; others.len()];
        loop {
            if vector != wlog {
                candidates.push(vector.clone());
            }
            let mut p = 0;
            loop {
                if p == vector.len() {
                    break;
                }
                vector[p] += 1;
                if vector[p] <= n as u32 {
                    break;
                }
                vector[p] = 1;
                p += 1;
            }
            if p == vector.len() {
                break;
            }
        }
        for constants in candidates {
            let result = pair_contraction(&nonzero, &pairs, k, &constants, n)?;
            if !is_full_permutation(&result) {
                let witness = Witness::MixUniqueness {
                    n,
                    block: k,
                    constants,
                    contraction: result,
                };
                verify_uniqueness(&witness, &nonzero)?;
                return Ok(MixPass::Reject(witness));
            }
        }
    }
    Err(WitnessError::Internal(
        "no violating pair contraction found for a non-simple combination".into(),
    ))
}

pub(super) fn verify_uniqueness(witness: &Witness, comb: &LinComb) -> Result<(), WitnessError> {
    let Witness::MixUniqueness {
        n,
        block,
        constants,
        contraction,
    } = witness
    else {
        return Err(WitnessError::Internal("wrong witness kind".into()));
    };
    let pairs = pair_shape(&comb.sequent)?;
    if *block >= pairs.len() || constants.len() + 1 != pairs.len() {
        return Err(WitnessError::Internal("witness indices out of shape".into()));
    }
    if constants.iter().any(|&x| x == 0 || x as usize > *n) {
        return Err(WitnessError::Internal("witness constants out of range".into()));
    }
    let recomputed = pair_contraction(comb, &pairs, *block, constants, *n)?;
    if &recomputed != contraction {
        return Err(WitnessError::Internal(
            "recorded contraction does not recompute".into(),
        ));
    }
    if is_full_permutation(&recomputed) {
        return Err(WitnessError::Internal(
            "recorded contraction is a full permutation after all".into(),
        ));
    }
    Ok(())
}

/// The acyclicity refutation after the pair normal form: contract the one
/// leading covalue and per-pair identities; the leftover identity matrix is
/// not the sole admitted value.
pub fn mix_cycle_witness(comb: &LinComb) -> Result<Witness, WitnessError> {
    let blocks = comb.sequent.blocks()?;
    let gamma: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() == 1).collect();
    let delta: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() == 2).collect();
    if gamma.len() + delta.len() != blocks.len() || delta.is_empty() {
        return Err(WitnessError::Precondition(
            "expected one-literal blocks followed by two-literal blocks".into(),
        ));
    }
    if gamma.iter().any(|&g| delta.iter().any(|&d| d < g)) {
        return Err(WitnessError::Precondition(
            "one-literal blocks must precede two-literal blocks".into(),
        ));
    }
    if comb.terms().len() != 1 {
        return Err(WitnessError::Precondition("expected a single term".into()));
    }
    let linking = &comb.terms()[0].1;
    let block_of = comb.sequent.block_of_occurrence()?;
    // Every one-literal block links among the one-literal blocks, and the
    // two-literal blocks are chained in one cycle.
    for &g in &gamma {
        let occ = blocks[g][0];
        let partner = linking
            .partner(occ)
            .ok_or_else(|| WitnessError::Precondition("unlinked literal".into()))?;
        if blocks[block_of[partner as usize]].len() != 1 {
            return Err(WitnessError::Precondition(
                "a one-literal block links into the cycle part".into(),
            ));
        }
    }
    let mut visited = vec![delta[0]];
    let mut cur = delta[0];
    loop {
        let exit_occ = blocks[cur][1];
        let partner = linking
            .partner(exit_occ)
            .ok_or_else(|| WitnessError::Precondition("unlinked literal".into()))?;
        let next = block_of[partner as usize];
        if !delta.contains(&next) {
            return Err(WitnessError::Precondition(
                "the cycle escapes the two-literal blocks".into(),
            ));
        }
        if next == delta[0] {
            break;
        }
        if visited.contains(&next) {
            return Err(WitnessError::Precondition(
                "the two-literal blocks do not form one cycle".into(),
            ));
        }
        visited.push(next);
        cur = next;
    }
    if visited.len() != delta.len() {
        return Err(WitnessError::Precondition(
            "the cycle misses a two-literal block".into(),
        ));
    }

    let contraction = cycle_contraction(comb, &gamma, &delta)?;
    let required = {
        let mut t = DenseTensor::zero(comb.semiring, 2, 2);
        t.set(vec![1, 1], comb.semiring.one());
        t
    };
    if contraction == required {
        return Err(WitnessError::Internal(
            "cyclic contraction landed on the admitted value".into(),
        ));
    }
    let witness = Witness::MixCycle {
        gamma_blocks: gamma.len(),
        delta_blocks: delta.len(),
        contraction,
        required,
    };
    verify_cycle(&witness, comb)?;
    Ok(witness)
}

/// Contracts with the all-ones-corner covalue on the one-literal prefix and
/// the identity on every two-literal block except the first.
fn cycle_contraction(
    comb: &LinComb,
    gamma: &[usize],
    delta: &[usize],
) -> Result<DenseTensor, WitnessError> {
    let names = super::block_index_names(comb)?;
    let dim = BigUint::from(2u32);
    let mut acc = comb.to_tensor();
    for &g in gamma {
        let name = &names[g][0];
        let covalue = DeltaExpr::new(
            comb.semiring,
            vec![name.clone()],
            vec![DeltaTerm::new(
                comb.semiring.one(),
                vec![DeltaFactor::Const {
                    index: name.clone(),
                    value: BigUint::from(1u32),
                }],
            )],
        )?;
        acc = acc.contract(&covalue, &[(name.clone(), name.clone())], Some(&dim))?;
    }
    for &d in delta.iter().skip(1) {
        let (a, b) = (&names[d][0], &names[d][1]);
        // The identity covalue on the pair; it satisfies the corner
        // constraints (1 at (1,1), 0 at (1,2) and (2,1)).
        let identity = DeltaExpr::new(
            comb.semiring,
            vec![a.clone(), b.clone()],
            vec![DeltaTerm::new(
                comb.semiring.one(),
                vec![DeltaFactor::link(a.clone(), b.clone())],
            )],
        )?;
        debug_assert!(in_xi(&identity.densify(2).expect("2x2 identity")));
        acc = acc.contract(
            &identity,
            &[(a.clone(), a.clone()), (b.clone(), b.clone())],
            Some(&dim),
        )?;
    }
    let first = delta[0];
    Ok(acc.reorder_indices(&names[first])?.densify(2)?)
}

pub(super) fn verify_cycle(witness: &Witness, comb: &LinComb) -> Result<(), WitnessError> {
    let Witness::MixCycle {
        gamma_blocks,
        delta_blocks,
        contraction,
        required,
    } = witness
    else {
        return Err(WitnessError::Internal("wrong witness kind".into()));
    };
    let blocks = comb.sequent.blocks()?;
    let gamma: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() == 1).collect();
    let delta: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() == 2).collect();
    if gamma.len() != *gamma_blocks || delta.len() != *delta_blocks {
        return Err(WitnessError::Internal(
            "recorded block split does not match the sequent".into(),
        ));
    }
    let recomputed = cycle_contraction(comb, &gamma, &delta)?;
    if &recomputed != contraction {
        return Err(WitnessError::Internal(
            "recorded contraction does not recompute".into(),
        ));
    }
    let mut expected_required = DenseTensor::zero(comb.semiring, 2, 2);
    expected_required.set(vec![1, 1], comb.semiring.one());
    if required != &expected_required {
        return Err(WitnessError::Internal(
            "recorded required value is not the (1,1) delta".into(),
        ));
    }
    if contraction == required {
        return Err(WitnessError::Internal(
            "recorded contraction equals the admitted value".into(),
        ));
    }
    Ok(())
}

/// The verification log of the six-term counterexample combination.
#[derive(Debug, Clone)]
pub struct ZeroSumReport {
    pub coefficient_sum: Scalar,
    /// Membership of the combination in the pair-form value sets at the
    /// sampled dimensions.
    pub pair_memberships: Vec<(usize, bool)>,
    /// Per-pair corner checks against the two-dimensional self-dual object.
    pub corner_checks: Vec<(usize, bool)>,
    /// Dense entries at the home diagonal, labeled by the negative-slot
    /// pattern they sit on.
    pub diagonal_entries: Vec<(String, Scalar)>,
}

impl ZeroSumReport {
    pub fn verified(&self) -> bool {
        self.coefficient_sum.is_one()
            && self.pair_memberships.iter().all(|(_, ok)| *ok)
            && self.corner_checks.iter().all(|(_, ok)| *ok)
    }
}

/// Builds the six-term combination over three axiom pairs whose coefficients
/// exploit an additive inverse of `s`: the identity pattern gets `1 + s`, the
/// other even patterns `s`, the odd patterns `-s`. The combination passes
/// every pair-form and corner test although it is visibly non-simple.
pub fn zero_sum_counterexample(
    semiring: Semiring,
    s: &Scalar,
) -> Result<(LinComb, ZeroSumReport), WitnessError> {
    if semiring.is_zero_sum_free() {
        return Err(WitnessError::NotApplicable(format!(
            "the {} semiring is zero-sum-free; no element has an additive inverse",
            semiring.name()
        )));
    }
    if s.is_zero() {
        return Err(WitnessError::Precondition(
            "the chosen element must be nonzero".into(),
        ));
    }
    let minus_s = semiring.additive_inverse(s).ok_or_else(|| {
        WitnessError::Precondition("the chosen element has no additive inverse".into())
    })?;
    let sequent = crate::logic::parse_sequent("a|~a|a|~a|a|~a")
        .expect("fixed sequent parses");

    // Permutations of three pairs in one-line notation, with their parity.
    let patterns: [([usize; 3], bool); 6] = [
        ([1, 2, 3], true),
        ([2, 3, 1], true),
        ([3, 1, 2], true),
        ([1, 3, 2], false),
        ([3, 2, 1], false),
        ([2, 1, 3], false),
    ];
    let mut terms = Vec::new();
    for (pattern, even) in patterns {
        let coeff = if pattern == [1, 2, 3] {
            semiring.add(&semiring.one(), s)
        } else if even {
            s.clone()
        } else {
            minus_s.clone()
        };
        let pairs: Vec<(u32, u32)> = pattern
            .iter()
            .enumerate()
            .map(|(k, &image)| (2 * k as u32 + 1, 2 * image as u32))
            .collect();
        let linking = Linking::new(&sequent, pairs)?;
        terms.push((coeff, linking));
    }
    let comb = LinComb::new(semiring, sequent.clone(), terms)?;

    let coefficient_sum = comb.coefficient_sum();
    let shape = MdnfShape::pairs_of_sequent(&sequent)?;
    let mut pair_memberships = Vec::new();
    for n in 1..=3usize {
        let member = matches!(
            mdnf_value_membership(&comb.to_tensor(), &shape, crate::glue::Family::S, n, 100_000)?,
            Membership::Member
        );
        pair_memberships.push((n, member));
    }
    // Corner checks: fix the all-(1,1) covalue on every other pair; the
    // leftover matrix must carry 1 at (1,1) and 0 at (1,2) and (2,1).
    let pairs = pair_shape(&sequent)?;
    let names = pair_names(&pairs);
    let mut corner_checks = Vec::new();
    for k in 0..pairs.len() {
        let mut acc = comb.to_tensor();
        for (m, (iname, jname)) in names.iter().enumerate() {
            if m == k {
                continue;
            }
            let covalue = DeltaExpr::new(
                semiring,
                vec![iname.clone(), jname.clone()],
                vec![DeltaTerm::new(
                    semiring.one(),
                    vec![
                        DeltaFactor::Const {
                            index: iname.clone(),
                            value: BigUint::from(1u32),
                        },
                        DeltaFactor::Const {
                            index: jname.clone(),
                            value: BigUint::from(1u32),
                        },
                    ],
                )],
            )?;
            acc = acc.contract(
                &covalue,
                &[
                    (iname.clone(), iname.clone()),
                    (jname.clone(), jname.clone()),
                ],
                Some(&BigUint::from(2u32)),
            )?;
        }
        let dense = acc
            .reorder_indices(&[names[k].0.clone(), names[k].1.clone()])?
            .densify(2)?;
        corner_checks.push((k, in_xi(&dense)));
    }
    // Entries over the home diagonal at dimension 3.
    let dense = comb.to_tensor().densify(3)?;
    let mut diagonal_entries = Vec::new();
    for (pattern, _) in patterns {
        let mut idx = vec![1u32, 2, 3];
        // Index order of the tensor: positive occurrences then negative ones;
        // the entry at i = (1,2,3), j = inverse images of the pattern.
        let mut j = vec![0u32; 3];
        for (k, &image) in pattern.iter().enumerate() {
            j[image - 1] = k as u32 + 1;
        }
        idx.extend(j.iter());
        diagonal_entries.push((
            format!("{}{}{}", pattern[0], pattern[1], pattern[2]),
            dense.get(&idx),
        ));
    }
    let report = ZeroSumReport {
        coefficient_sum,
        pair_memberships,
        corner_checks,
        diagonal_entries,
    };
    Ok((comb, report))
}
