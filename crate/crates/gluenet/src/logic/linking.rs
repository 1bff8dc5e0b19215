//! Linkings (fixed-point-free pairings of complementary literals) and
//! weighted linear combinations of them.

use std::collections::BTreeMap;

use crate::semiring::{Scalar, Semiring};
use crate::tensor::{DeltaExpr, DeltaFactor, DeltaTerm, IndexName};

use super::formula::{Polarity, Sequent};
use super::LogicError;

/// A complete pairing of positive with negative occurrences of the same
/// atom. Pairs are stored `(positive, negative)` sorted by the positive
/// occurrence, which doubles as the canonical form for comparisons.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Linking {
    pairs: Vec<(u32, u32)>,
}

impl Linking {
    pub fn new(sequent: &Sequent, pairs: Vec<(u32, u32)>) -> Result<Linking, LogicError> {
        let occs = sequent.occurrences();
        let total = occs.len() as u32;
        let mut used = vec![false; occs.len() + 1];
        for &(p, n) in &pairs {
            if p == 0 || p > total {
                return Err(LogicError::OccurrenceOutOfRange(p));
            }
            if n == 0 || n > total {
                return Err(LogicError::OccurrenceOutOfRange(n));
            }
            let pos = &occs[(p - 1) as usize];
            let neg = &occs[(n - 1) as usize];
            if pos.polarity != Polarity::Pos {
                return Err(LogicError::WrongPolarity(p));
            }
            if neg.polarity != Polarity::Neg {
                return Err(LogicError::WrongPolarity(n));
            }
            if pos.atom != neg.atom {
                return Err(LogicError::NotComplementary { pos: p, neg: n });
            }
            for o in [p, n] {
                if used[o as usize] {
                    return Err(LogicError::OccurrenceRepeated(o));
                }
                used[o as usize] = true;
            }
        }
        if let Some(o) = (1..=total).find(|&o| !used[o as usize]) {
            return Err(LogicError::OccurrenceUnpaired(o));
        }
        let mut pairs = pairs;
        pairs.sort();
        Ok(Linking { pairs })
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// The occurrence linked to `occ`, if any.
    pub fn partner(&self, occ: u32) -> Option<u32> {
        self.pairs.iter().find_map(|&(p, n)| {
            if p == occ {
                Some(n)
            } else if n == occ {
                Some(p)
            } else {
                None
            }
        })
    }

    /// Applies an occurrence permutation, `map[old as usize] = new` (1-based
    /// with a dummy slot 0), and restores canonical order.
    pub fn transport(&self, map: &[u32]) -> Linking {
        let mut pairs: Vec<(u32, u32)> = self
            .pairs
            .iter()
            .map(|&(p, n)| (map[p as usize], map[n as usize]))
            .collect();
        pairs.sort();
        Linking { pairs }
    }
}

/// The result of enumerating all valid linkings of a sequent: possibly an
/// empty list with a diagnostic explaining the mismatch.
#[derive(Debug, Clone)]
pub struct LinkingEnumeration {
    pub linkings: Vec<Linking>,
    pub diagnostic: Option<String>,
}

/// Enumerates every perfect matching of complementary occurrences, atom by
/// atom, in a fixed lexicographic order.
pub fn enumerate_linkings(
    sequent: &Sequent,
    bound: usize,
) -> Result<LinkingEnumeration, LogicError> {
    let occs = sequent.occurrences();
    if occs.len() > bound {
        return Err(LogicError::BoundExceeded {
            literals: occs.len(),
            bound,
        });
    }
    let mut by_atom: BTreeMap<&str, (Vec<u32>, Vec<u32>)> = BTreeMap::new();
    for (k, occ) in occs.iter().enumerate() {
        let slot = by_atom.entry(occ.atom.as_str()).or_default();
        match occ.polarity {
            Polarity::Pos => slot.0.push(k as u32 + 1),
            Polarity::Neg => slot.1.push(k as u32 + 1),
        }
    }
    for (atom, (pos, neg)) in &by_atom {
        if pos.len() != neg.len() {
            return Ok(LinkingEnumeration {
                linkings: vec![],
                diagnostic: Some(format!(
                    "atom {atom:?} has {} positive but {} negative occurrences",
                    pos.len(),
                    neg.len()
                )),
            });
        }
    }

    // Lexicographic permutations of each atom's negative occurrences, then
    // the cartesian product across atoms.
    fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
        if items.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (k, &item) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(k);
            for mut tail in permutations(&rest) {
                tail.insert(0, item);
                out.push(tail);
            }
        }
        out
    }

    let atoms: Vec<(&str, (Vec<u32>, Vec<u32>))> = by_atom
        .into_iter()
        .map(|(a, v)| (a, v))
        .collect();
    let mut partial: Vec<Vec<(u32, u32)>> = vec![vec![]];
    for (_, (pos, neg)) in &atoms {
        let mut next = Vec::new();
        for chosen in &partial {
            for perm in permutations(neg) {
                let mut extended = chosen.clone();
                extended.extend(pos.iter().copied().zip(perm.iter().copied()));
                next.push(extended);
            }
        }
        partial = next;
    }
    let linkings = partial
        .into_iter()
        .map(|pairs| Linking::new(sequent, pairs).expect("enumerated linking is valid"))
        .collect();
    Ok(LinkingEnumeration {
        linkings,
        diagnostic: None,
    })
}

/// A semiring-weighted list of distinct linkings over one sequent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinComb {
    pub semiring: Semiring,
    pub sequent: Sequent,
    terms: Vec<(Scalar, Linking)>,
}

impl LinComb {
    pub fn new(
        semiring: Semiring,
        sequent: Sequent,
        terms: Vec<(Scalar, Linking)>,
    ) -> Result<LinComb, LogicError> {
        for window in 0..terms.len() {
            for later in window + 1..terms.len() {
                if terms[window].1 == terms[later].1 {
                    return Err(LogicError::DuplicateLinking);
                }
            }
        }
        for (coeff, _) in &terms {
            if !semiring.contains(coeff) {
                return Err(LogicError::InvalidCoefficient(format!(
                    "{coeff} is not a {} element",
                    semiring.name()
                )));
            }
        }
        Ok(LinComb {
            semiring,
            sequent,
            terms,
        })
    }

    pub fn single(semiring: Semiring, sequent: Sequent, linking: Linking) -> LinComb {
        LinComb {
            semiring,
            terms: vec![(semiring.one(), linking)],
            sequent,
        }
    }

    pub fn terms(&self) -> &[(Scalar, Linking)] {
        &self.terms
    }

    pub fn coefficient_sum(&self) -> Scalar {
        let mut total = self.semiring.zero();
        for (coeff, _) in &self.terms {
            total = self.semiring.add(&total, coeff);
        }
        total
    }

    /// The combination with zero-coefficient terms removed.
    pub fn drop_zero_terms(&self) -> LinComb {
        LinComb {
            semiring: self.semiring,
            sequent: self.sequent.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| !c.is_zero())
                .cloned()
                .collect(),
        }
    }

    /// Replaces the sequent and transports every linking through an
    /// occurrence permutation.
    pub fn transported(&self, sequent: Sequent, occ_map: &[u32]) -> LinComb {
        LinComb {
            semiring: self.semiring,
            sequent,
            terms: self
                .terms
                .iter()
                .map(|(c, l)| (c.clone(), l.transport(occ_map)))
                .collect(),
        }
    }
}

/// The index name carried by a positive literal occurrence.
pub(crate) fn pos_index(occ: u32) -> IndexName {
    IndexName::new(format!("i{occ}"))
}

/// The index name carried by a negative literal occurrence.
pub(crate) fn neg_index(occ: u32) -> IndexName {
    IndexName::new(format!("j{occ}"))
}

impl LinComb {
    /// The symbolic tensor of the combination: one index per literal
    /// (`i<occ>` positive, `j<occ>` negative, positives listed first), one
    /// term per linking with a delta factor per axiom link.
    pub fn to_tensor(&self) -> DeltaExpr {
        let occs = self.sequent.occurrences();
        let mut indices = Vec::new();
        for (k, occ) in occs.iter().enumerate() {
            if occ.polarity == Polarity::Pos {
                indices.push(pos_index(k as u32 + 1));
            }
        }
        for (k, occ) in occs.iter().enumerate() {
            if occ.polarity == Polarity::Neg {
                indices.push(neg_index(k as u32 + 1));
            }
        }
        let terms = self
            .terms
            .iter()
            .map(|(coeff, linking)| {
                let factors = linking
                    .pairs()
                    .iter()
                    .map(|&(p, n)| DeltaFactor::link(pos_index(p), neg_index(n)))
                    .collect();
                DeltaTerm::new(coeff.clone(), factors)
            })
            .collect();
        DeltaExpr::new(self.semiring, indices, terms).expect("linking tensor is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse::parse_sequent;
    use crate::tensor::DenseTensor;

    fn linkings_of(text: &str) -> Vec<Linking> {
        enumerate_linkings(&parse_sequent(text).unwrap(), 16)
            .unwrap()
            .linkings
    }

    #[test]
    fn unique_linking_for_axiom_pair() {
        assert_eq!(linkings_of("a | ~a").len(), 1);
    }

    #[test]
    fn two_matchings_for_doubled_pair() {
        assert_eq!(linkings_of("a | ~a | a | ~a").len(), 2);
    }

    #[test]
    fn atom_mismatch_gives_empty_with_diagnostic() {
        let e = enumerate_linkings(&parse_sequent("a | ~b").unwrap(), 16).unwrap();
        assert!(e.linkings.is_empty());
        assert!(e.diagnostic.is_some());
    }

    /// Independent matching counter: backtracking over positions rather than
    /// permutations.
    fn count_matchings(text: &str) -> usize {
        let s = parse_sequent(text).unwrap();
        let occs = s.occurrences();
        fn go(occs: &[(String, Polarity)], used: &mut Vec<bool>) -> usize {
            let Some(first) = used.iter().position(|u| !u) else {
                return 1;
            };
            used[first] = true;
            let mut total = 0;
            for other in first + 1..occs.len() {
                if used[other] {
                    continue;
                }
                if occs[first].0 == occs[other].0 && occs[first].1 != occs[other].1 {
                    used[other] = true;
                    total += go(occs, used);
                    used[other] = false;
                }
            }
            used[first] = false;
            total
        }
        let flat: Vec<(String, Polarity)> = occs
            .into_iter()
            .map(|o| (o.atom, o.polarity))
            .collect();
        let mut used = vec![false; flat.len()];
        go(&flat, &mut used)
    }

    #[test]
    fn enumeration_count_matches_independent_matcher() {
        for text in [
            "a|~a",
            "a|~a|a|~a",
            "a|~a|a|~a|a|~a",
            "a|~a|b|~b",
            "(a*~a)|(a*b*~b)|~a",
            "a|~b",
        ] {
            let got = linkings_of(text).len();
            assert_eq!(got, count_matchings(text), "{text}");
        }
    }

    #[test]
    fn enumerated_linkings_are_valid_and_distinct() {
        let s = parse_sequent("a|~a|a|~a|b|~b").unwrap();
        let all = enumerate_linkings(&s, 16).unwrap().linkings;
        for (i, l) in all.iter().enumerate() {
            assert!(Linking::new(&s, l.pairs().to_vec()).is_ok());
            for other in &all[i + 1..] {
                assert_ne!(l, other);
            }
        }
    }

    #[test]
    fn linking_invariants_rejected() {
        let s = parse_sequent("a|~a|a|~a").unwrap();
        assert!(Linking::new(&s, vec![(1, 2)]).is_err()); // unpaired
        assert!(Linking::new(&s, vec![(1, 2), (1, 4)]).is_err()); // repeated
        assert!(Linking::new(&s, vec![(2, 1), (3, 4)]).is_err()); // polarity
        let s2 = parse_sequent("a|~b|b|~a").unwrap();
        assert!(Linking::new(&s2, vec![(1, 2), (3, 4)]).is_err()); // atoms
        assert!(Linking::new(&s2, vec![(1, 4), (3, 2)]).is_ok());
    }

    #[test]
    fn single_link_tensor_densifies_to_identity() {
        let s = parse_sequent("a|~a").unwrap();
        let l = Linking::new(&s, vec![(1, 2)]).unwrap();
        let c = LinComb::single(Semiring::Nat, s, l);
        let t = c.to_tensor();
        for n in 1..=4 {
            assert_eq!(t.densify(n).unwrap(), DenseTensor::identity(Semiring::Nat, n));
        }
    }

    #[test]
    fn empty_combination_is_the_zero_tensor() {
        let s = parse_sequent("a|~a").unwrap();
        let c = LinComb::new(Semiring::Int, s, vec![]).unwrap();
        assert!(c.to_tensor().is_zero());
    }

    #[test]
    fn tensor_of_merged_combination_is_sum_of_parts() {
        let s = parse_sequent("a|~a|a|~a").unwrap();
        let all = enumerate_linkings(&s, 16).unwrap().linkings;
        let c1 = LinComb::new(Semiring::Nat, s.clone(), vec![(Scalar::int(2), all[0].clone())])
            .unwrap();
        let c2 = LinComb::new(Semiring::Nat, s.clone(), vec![(Scalar::int(3), all[1].clone())])
            .unwrap();
        let merged = LinComb::new(
            Semiring::Nat,
            s,
            vec![
                (Scalar::int(2), all[0].clone()),
                (Scalar::int(3), all[1].clone()),
            ],
        )
        .unwrap();
        for n in 1..=3 {
            let sum = c1
                .to_tensor()
                .add(&c2.to_tensor())
                .unwrap()
                .densify(n)
                .unwrap();
            assert_eq!(merged.to_tensor().densify(n).unwrap(), sum);
        }
    }

    #[test]
    fn duplicate_linkings_rejected() {
        let s = parse_sequent("a|~a").unwrap();
        let l = Linking::new(&s, vec![(1, 2)]).unwrap();
        assert!(LinComb::new(
            Semiring::Nat,
            s,
            vec![(Scalar::int(1), l.clone()), (Scalar::int(1), l)]
        )
        .is_err());
    }
}
