//! The top-level decision procedure: scalar gate, acyclicity, connectedness,
//! uniqueness — every rejection carries a verified witness together with the
//! rewrite trace leading from the input to the structure the witness speaks
//! about.

use crate::logic::{LinComb, Linking};
use crate::proofnet::{
    block_components, find_minimal_cycle, is_mix_net, is_mll_net, mdnf_fast_check, CheckMode,
    NetError, DEFAULT_PAR_BOUND,
};
use crate::rewrite::{
    apply_step, mix_normal_form, normalize_mdnf, normalize_preserving_cycle, RewriteStep,
    RewriteTrace, Rule,
};

use super::{
    cycle_witness, disconnect_witness, mix_cycle_witness, mix_uniqueness_witness, scalar_sum_check,
    uniqueness_witness, MixPass, Witness, WitnessError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Mll,
    Mix,
}

/// The decision: either the single unit-weight linking of a correct
/// structure, or a verified witness over the rewritten combination reached
/// through the recorded trace, or a statement that the theory cannot decide
/// the input.
#[derive(Debug)]
pub enum Decision {
    Accept {
        linking: Linking,
    },
    Reject {
        witness: Witness,
        trace: RewriteTrace,
        /// The combination (after the trace) the witness verifies against.
        normalized: LinComb,
    },
    OutsideTheory {
        reason: String,
    },
}

impl Decision {
    pub fn exit_code(&self) -> i32 {
        match self {
            Decision::Accept { .. } => 0,
            Decision::Reject { .. } => 1,
            Decision::OutsideTheory { .. } => 3,
        }
    }
}

fn reject(witness: Witness, trace: RewriteTrace, normalized: LinComb) -> Decision {
    Decision::Reject {
        witness,
        trace,
        normalized,
    }
}

/// Decides whether the combination denotes a correct structure, in the plain
/// mode or with connectedness waived.
pub fn decide(comb: &LinComb, mode: Mode) -> Result<Decision, WitnessError> {
    // The degenerate evaluation applies in both modes: coefficients must sum
    // to the unit.
    if let Err(witness) = scalar_sum_check(comb) {
        return Ok(reject(witness, RewriteTrace::default(), comb.clone()));
    }
    let comb = comb.drop_zero_terms();
    if comb.terms().is_empty() {
        return Err(WitnessError::Internal(
            "coefficients summing to 1 cannot all be zero".into(),
        ));
    }

    match mode {
        Mode::Mll => decide_mll(comb),
        Mode::Mix => decide_mix(comb),
    }
}

fn decide_mll(comb: LinComb) -> Result<Decision, WitnessError> {
    // Acyclicity: pick the least cyclic linking, carry one of its minimal
    // cycles into normal form, and refute there.
    let cyclic: Option<&Linking> = {
        let mut cyclic_terms: Vec<&Linking> = Vec::new();
        for (_, linking) in comb.terms() {
            if !is_mix_net(&comb.sequent, linking, DEFAULT_PAR_BOUND)? {
                cyclic_terms.push(linking);
            }
        }
        cyclic_terms.sort();
        cyclic_terms.first().copied()
    };
    if let Some(lambda) = cyclic {
        let cycle = find_minimal_cycle(&comb.sequent, lambda, DEFAULT_PAR_BOUND)?;
        let lambda_index = comb
            .terms()
            .iter()
            .position(|(_, l)| l == lambda)
            .expect("chosen linking is a term");
        let (freed, _freed_cycle, mut trace) = normalize_preserving_cycle(&comb, &cycle)?;
        let (normalized, mdnf_trace) = normalize_mdnf(&freed)?;
        trace.steps.extend(mdnf_trace.steps);
        let lambda_now = normalized.terms()[lambda_index].1.clone();
        let fresh_cycle = find_minimal_cycle(&normalized.sequent, &lambda_now, DEFAULT_PAR_BOUND)?;
        let witness = cycle_witness(&normalized, &lambda_now, &fresh_cycle)?;
        return Ok(reject(witness, trace, normalized));
    }

    // Connectedness: switching-edge counting makes disconnection a property
    // of the normal form shared by every term.
    let (normalized, trace) = normalize_mdnf(&comb)?;
    let disconnected = normalized
        .terms()
        .iter()
        .any(|(_, l)| match block_components(&normalized.sequent, l) {
            Ok(components) => components.len() > 1,
            Err(_) => false,
        });
    if disconnected {
        let witness = disconnect_witness(&normalized)?;
        return Ok(reject(witness, trace, normalized));
    }

    // Uniqueness: two or more surviving nets cannot share the value sets.
    if normalized.terms().len() >= 2 {
        let witness = uniqueness_witness(&normalized)?;
        return Ok(reject(witness, trace, normalized));
    }

    accept(&comb, CheckMode::Mll)
}

fn decide_mix(comb: LinComb) -> Result<Decision, WitnessError> {
    // Uniqueness comes first here: the pair-form argument needs no
    // acyclicity, while the cyclic refutation needs a single term.
    if comb.terms().len() >= 2 {
        let (paired, trace) = to_pair_form(&comb)?;
        return match mix_uniqueness_witness(&paired) {
            Ok(MixPass::Reject(witness)) => Ok(reject(witness, trace, paired)),
            Ok(MixPass::Pass) => Err(WitnessError::Internal(
                "a multi-term combination passed the pair-form search".into(),
            )),
            Err(WitnessError::KnownIncomplete(reason)) => {
                Ok(Decision::OutsideTheory { reason })
            }
            Err(other) => Err(other),
        };
    }

    let linking = comb.terms()[0].1.clone();
    if !is_mix_net(&comb.sequent, &linking, DEFAULT_PAR_BOUND)? {
        let cycle = find_minimal_cycle(&comb.sequent, &linking, DEFAULT_PAR_BOUND)?;
        let (freed, _freed_cycle, mut trace) = normalize_preserving_cycle(&comb, &cycle)?;
        let (mdnf, mdnf_trace) = normalize_mdnf(&freed)?;
        trace.steps.extend(mdnf_trace.steps);
        let normal = mix_normal_form(&mdnf)?;
        trace.steps.extend(normal.trace.steps);
        let witness = mix_cycle_witness(&normal.comb)?;
        return Ok(reject(witness, trace, normal.comb));
    }

    accept(&comb, CheckMode::Mix)
}

fn accept(comb: &LinComb, mode: CheckMode) -> Result<Decision, WitnessError> {
    let linking = comb.terms()[0].1.clone();
    if !comb.terms()[0].0.is_one() {
        return Err(WitnessError::Internal(
            "a single surviving term must carry the unit coefficient".into(),
        ));
    }
    // What survives the pipeline is a correct structure; check it anyway.
    let ok = match mode {
        CheckMode::Mll => is_mll_net(&comb.sequent, &linking, DEFAULT_PAR_BOUND),
        CheckMode::Mix => is_mix_net(&comb.sequent, &linking, DEFAULT_PAR_BOUND),
    };
    match ok {
        Ok(true) => Ok(Decision::Accept { linking }),
        Ok(false) => Err(WitnessError::Internal(
            "the surviving term fails the switching criterion".into(),
        )),
        Err(NetError::SwitchingBound { .. }) => {
            // Too many pars to enumerate: fall back to the normal form.
            let (normalized, _) = normalize_mdnf(comb)?;
            let mode = match mode {
                CheckMode::Mll => CheckMode::Mll,
                CheckMode::Mix => CheckMode::Mix,
            };
            if mdnf_fast_check(&normalized.sequent, &normalized.terms()[0].1, mode)? {
                Ok(Decision::Accept { linking })
            } else {
                Err(WitnessError::Internal(
                    "the surviving term fails the block criterion".into(),
                ))
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// Applies mix steps until no tensor connective remains, so the pair-form
/// search applies.
fn to_pair_form(comb: &LinComb) -> Result<(LinComb, RewriteTrace), WitnessError> {
    let mut cur = comb.clone();
    let mut trace = RewriteTrace::default();
    loop {
        let positions = crate::rewrite::preorder_tensor_positions(&cur.sequent);
        let Some(path) = positions.first() else {
            return Ok((cur, trace));
        };
        let step = RewriteStep::new(Rule::Mix, path.formula, path.inner.clone());
        let (next, map) = apply_step(&cur, &step)?;
        trace.steps.push(crate::rewrite::TraceStep {
            step,
            occ_map: map,
        });
        cur = next;
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::comb;
    use super::*;
    use crate::semiring::Semiring;
    use crate::witness::Witness;

    fn expect_reject(decision: Decision, kind: &str) -> (Witness, LinComb) {
        match decision {
            Decision::Reject {
                witness,
                normalized,
                ..
            } => {
                assert_eq!(witness.kind(), kind);
                witness.verify(&normalized).expect("witness verifies");
                (witness, normalized)
            }
            other => panic!("expected a {kind} rejection, got {other:?}"),
        }
    }

    #[test]
    fn axiom_pair_is_accepted() {
        let c = comb(Semiring::Nat, "a|~a", &[(1, &[(1, 2)])]);
        assert!(matches!(
            decide(&c, Mode::Mll).unwrap(),
            Decision::Accept { .. }
        ));
        assert!(matches!(
            decide(&c, Mode::Mix).unwrap(),
            Decision::Accept { .. }
        ));
    }

    #[test]
    fn crossed_links_produce_a_cycle_witness() {
        let c = comb(Semiring::Nat, "(a*~a)|(a*~a)", &[(1, &[(1, 4), (3, 2)])]);
        expect_reject(decide(&c, Mode::Mll).unwrap(), "cycle");
        expect_reject(decide(&c, Mode::Mix).unwrap(), "mix_cycle");
    }

    #[test]
    fn scalar_gate_fires_first() {
        let c = comb(
            Semiring::Nat,
            "a|~a|a|~a",
            &[(1, &[(1, 2), (3, 4)]), (1, &[(1, 4), (3, 2)])],
        );
        expect_reject(decide(&c, Mode::Mll).unwrap(), "scalar_sum");
        expect_reject(decide(&c, Mode::Mix).unwrap(), "scalar_sum");
    }

    #[test]
    fn zero_terms_are_dropped_before_deciding() {
        let c = comb(
            Semiring::Nat,
            "a|~a|a|~a",
            &[(1, &[(1, 2), (3, 4)]), (0, &[(1, 4), (3, 2)])],
        );
        // One nonzero disconnected term: plain mode rejects, mix accepts.
        expect_reject(decide(&c, Mode::Mll).unwrap(), "disconnect");
        assert!(matches!(
            decide(&c, Mode::Mix).unwrap(),
            Decision::Accept { .. }
        ));
    }

    #[test]
    fn multi_term_nets_get_a_uniqueness_witness() {
        let c = comb(
            Semiring::Int,
            "a|(~a*~a)|a",
            &[(2, &[(1, 2), (4, 3)]), (-1, &[(1, 3), (4, 2)])],
        );
        expect_reject(decide(&c, Mode::Mll).unwrap(), "uniqueness");
    }

    #[test]
    fn mix_mode_rejects_multi_term_over_zero_sum_free() {
        let c = comb(
            Semiring::Nat,
            "(a*~a)|(a*~a)",
            &[(0, &[(1, 2), (3, 4)]), (1, &[(1, 4), (3, 2)])],
        );
        // A single cyclic term after dropping zeros: normal form + witness.
        expect_reject(decide(&c, Mode::Mix).unwrap(), "mix_cycle");
    }

    #[test]
    fn mix_mode_steps_outside_for_invertible_scalars() {
        use crate::logic::{parse_sequent, LinComb, Linking};
        let s = parse_sequent("a|~a|a|~a").unwrap();
        let half = Semiring::Rat.parse("1/2").unwrap();
        let c = LinComb::new(
            Semiring::Rat,
            s.clone(),
            vec![
                (half.clone(), Linking::new(&s, vec![(1, 2), (3, 4)]).unwrap()),
                (half, Linking::new(&s, vec![(1, 4), (3, 2)]).unwrap()),
            ],
        )
        .unwrap();
        assert!(matches!(
            decide(&c, Mode::Mix).unwrap(),
            Decision::OutsideTheory { .. }
        ));
        // The same combination over a zero-sum-free semiring is rejected
        // with a concrete witness.
        let s2 = parse_sequent("a|~a|a|~a").unwrap();
        let half = Semiring::NonnegRat.parse("1/2").unwrap();
        let c2 = LinComb::new(
            Semiring::NonnegRat,
            s2.clone(),
            vec![
                (half.clone(), Linking::new(&s2, vec![(1, 2), (3, 4)]).unwrap()),
                (half, Linking::new(&s2, vec![(1, 4), (3, 2)]).unwrap()),
            ],
        )
        .unwrap();
        expect_reject(decide(&c2, Mode::Mix).unwrap(), "mix_uniqueness");
    }

    #[test]
    fn cyclic_inside_pars_normalizes_before_refuting() {
        let c = comb(Semiring::Nat, "a*((~a*a)|~a)", &[(1, &[(1, 2), (3, 4)])]);
        let (_, normalized) = expect_reject(decide(&c, Mode::Mll).unwrap(), "cycle");
        assert!(normalized.sequent.is_mdnf());
        expect_reject(decide(&c, Mode::Mix).unwrap(), "mix_cycle");
    }

    #[test]
    fn disconnected_nets_accept_only_with_mix() {
        let c = comb(Semiring::Nat, "a|~a|b|~b", &[(1, &[(1, 2), (3, 4)])]);
        expect_reject(decide(&c, Mode::Mll).unwrap(), "disconnect");
        assert!(matches!(
            decide(&c, Mode::Mix).unwrap(),
            Decision::Accept { .. }
        ));
    }

    #[test]
    fn rejection_traces_replay_to_the_normalized_combination() {
        let c = comb(Semiring::Nat, "a*((~a*a)|~a)", &[(1, &[(1, 2), (3, 4)])]);
        match decide(&c, Mode::Mll).unwrap() {
            Decision::Reject {
                trace, normalized, ..
            } => {
                assert_eq!(trace.replay(&c).unwrap(), normalized);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
