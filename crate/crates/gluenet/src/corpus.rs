//! Bounded corpora for the oracle suites: the exhaustive family of small
//! sequents over two atoms, and seeded random generators.

use rand::Rng;

use crate::logic::{Formula, Polarity, Sequent};

#[derive(Debug, Clone)]
enum Tree {
    Leaf,
    Node(Box<Tree>, Box<Tree>),
}

fn trees(leaves: usize) -> Vec<Tree> {
    if leaves == 1 {
        return vec![Tree::Leaf];
    }
    let mut out = Vec::new();
    for left in 1..leaves {
        for l in trees(left) {
            for r in trees(leaves - left) {
                out.push(Tree::Node(Box::new(l.clone()), Box::new(r)));
            }
        }
    }
    out
}

/// Builds the formula for one tree shape, connective mask (bit per internal
/// node in preorder, 1 = par), and leaf labeling (2 bits per leaf in order:
/// atom then polarity).
fn build(tree: &Tree, mask: u32, labels: u32, node: &mut u32, leaf: &mut u32) -> Formula {
    match tree {
        Tree::Leaf => {
            let code = labels >> (2 * *leaf) & 3;
            *leaf += 1;
            let atom = if code & 2 == 0 { "a" } else { "b" };
            let polarity = if code & 1 == 0 {
                Polarity::Pos
            } else {
                Polarity::Neg
            };
            Formula::lit(atom, polarity)
        }
        Tree::Node(l, r) => {
            let par = mask >> *node & 1 == 1;
            *node += 1;
            let left = build(l, mask, labels, node, leaf);
            let right = build(r, mask, labels, node, leaf);
            if par {
                Formula::par(left, right)
            } else {
                Formula::tensor(left, right)
            }
        }
    }
}

/// Swaps the two atoms in a labeling, for canonicalization.
fn swap_atoms(labels: u32, leaves: usize) -> u32 {
    let mut out = 0u32;
    for k in 0..leaves {
        let code = labels >> (2 * k) & 3;
        out |= (code ^ 2) << (2 * k);
    }
    out
}

/// Whether every atom has matching positive and negative counts, so the
/// sequent admits linkings at all.
fn matchable(labels: u32, leaves: usize) -> bool {
    let mut counts = [0i32; 4];
    for k in 0..leaves {
        counts[(labels >> (2 * k) & 3) as usize] += 1;
    }
    counts[0] == counts[1] && counts[2] == counts[3]
}

/// Every single-formula sequent over at most two atoms with 2, 4, or 6
/// literals that admits a linking, one representative per atom swap, as
/// parseable texts.
pub fn exhaustive_corpus() -> Vec<String> {
    let mut out = Vec::new();
    for leaves in [2usize, 4, 6] {
        for tree in trees(leaves) {
            for mask in 0..(1u32 << (leaves - 1)) {
                for labels in 0..(1u32 << (2 * leaves)) {
                    if !matchable(labels, leaves) {
                        continue;
                    }
                    if swap_atoms(labels, leaves) < labels {
                        continue;
                    }
                    let mut node = 0;
                    let mut leaf = 0;
                    let formula = build(&tree, mask, labels, &mut node, &mut leaf);
                    let sequent = Sequent::new(vec![formula]).expect("nonempty");
                    out.push(sequent.to_string());
                }
            }
        }
    }
    out
}

/// A uniformly-shaped random formula over `literals` leaves.
pub fn random_sequent(rng: &mut impl Rng, literals: usize, matchable_atoms: bool) -> Sequent {
    fn random_tree(rng: &mut impl Rng, leaves: usize) -> Tree {
        if leaves == 1 {
            return Tree::Leaf;
        }
        let left = rng.gen_range(1..leaves);
        Tree::Node(
            Box::new(random_tree(rng, left)),
            Box::new(random_tree(rng, leaves - left)),
        )
    }
    let tree = random_tree(rng, literals);
    let mask: u32 = rng.gen_range(0..(1u32 << (literals - 1)));
    let labels: u32 = if matchable_atoms {
        // Pair up leaves: half the positions positive, half negative, with a
        // random atom per pair and a random arrangement.
        let mut codes: Vec<u32> = Vec::with_capacity(literals);
        for _ in 0..literals / 2 {
            let atom = rng.gen_range(0..2u32) << 1;
            codes.push(atom);
            codes.push(atom | 1);
        }
        if literals % 2 == 1 {
            codes.push(rng.gen_range(0..4));
        }
        for k in (1..codes.len()).rev() {
            let j = rng.gen_range(0..=k);
            codes.swap(k, j);
        }
        codes
            .iter()
            .enumerate()
            .fold(0u32, |acc, (k, &c)| acc | c << (2 * k))
    } else {
        rng.gen_range(0..(1u32 << (2 * literals)))
    };
    let mut node = 0;
    let mut leaf = 0;
    let formula = build(&tree, mask, labels, &mut node, &mut leaf);
    Sequent::new(vec![formula]).expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_sequent;
    use rand::SeedableRng;

    #[test]
    fn corpus_texts_parse_and_stay_in_bounds() {
        let corpus = exhaustive_corpus();
        assert!(corpus.len() > 1000);
        for text in corpus.iter().step_by(997) {
            let s = parse_sequent(text).unwrap();
            assert!(s.literal_count() <= 6);
            assert!(s.literal_count() % 2 == 0);
        }
    }

    #[test]
    fn corpus_has_no_atom_swap_duplicates() {
        let corpus = exhaustive_corpus();
        let own: std::collections::BTreeSet<&String> = corpus.iter().collect();
        assert_eq!(own.len(), corpus.len());
    }

    #[test]
    fn random_matchable_sequents_admit_linkings() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = random_sequent(&mut rng, 6, true);
            let e = crate::logic::enumerate_linkings(&s, 8).unwrap();
            assert!(e.diagnostic.is_none());
            assert!(!e.linkings.is_empty());
        }
    }
}
