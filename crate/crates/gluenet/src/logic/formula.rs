//! Formula trees and sequents in negation normal form.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::LogicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }
}

/// Negation appears only on literals; `~` on compounds is eliminated by the
/// parser before a `Formula` is ever built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Lit { atom: String, polarity: Polarity },
    Tensor(Box<Formula>, Box<Formula>),
    Par(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn lit(atom: impl Into<String>, polarity: Polarity) -> Formula {
        Formula::Lit {
            atom: atom.into(),
            polarity,
        }
    }

    pub fn tensor(left: Formula, right: Formula) -> Formula {
        Formula::Tensor(Box::new(left), Box::new(right))
    }

    pub fn par(left: Formula, right: Formula) -> Formula {
        Formula::Par(Box::new(left), Box::new(right))
    }

    pub fn negate(&self) -> Formula {
        match self {
            Formula::Lit { atom, polarity } => Formula::lit(atom.clone(), polarity.flip()),
            Formula::Tensor(l, r) => Formula::par(l.negate(), r.negate()),
            Formula::Par(l, r) => Formula::tensor(l.negate(), r.negate()),
        }
    }

    pub fn literal_count(&self) -> usize {
        match self {
            Formula::Lit { .. } => 1,
            Formula::Tensor(l, r) | Formula::Par(l, r) => {
                l.literal_count() + r.literal_count()
            }
        }
    }

    pub fn connective_counts(&self) -> (usize, usize) {
        match self {
            Formula::Lit { .. } => (0, 0),
            Formula::Tensor(l, r) => {
                let (lt, lp) = l.connective_counts();
                let (rt, rp) = r.connective_counts();
                (lt + rt + 1, lp + rp)
            }
            Formula::Par(l, r) => {
                let (lt, lp) = l.connective_counts();
                let (rt, rp) = r.connective_counts();
                (lt + rt, lp + rp + 1)
            }
        }
    }

    pub fn subformula(&self, path: &[u8]) -> Option<&Formula> {
        let mut cur = self;
        for &step in path {
            cur = match cur {
                Formula::Tensor(l, r) | Formula::Par(l, r) => {
                    if step == 0 {
                        l
                    } else {
                        r
                    }
                }
                Formula::Lit { .. } => return None,
            };
        }
        Some(cur)
    }

    /// Replaces the subformula at `path`, returning the rebuilt tree.
    pub fn replace_at(&self, path: &[u8], replacement: Formula) -> Option<Formula> {
        if path.is_empty() {
            return Some(replacement);
        }
        match self {
            Formula::Lit { .. } => None,
            Formula::Tensor(l, r) => {
                if path[0] == 0 {
                    Some(Formula::tensor(l.replace_at(&path[1..], replacement)?, (**r).clone()))
                } else {
                    Some(Formula::tensor((**l).clone(), r.replace_at(&path[1..], replacement)?))
                }
            }
            Formula::Par(l, r) => {
                if path[0] == 0 {
                    Some(Formula::par(l.replace_at(&path[1..], replacement)?, (**r).clone()))
                } else {
                    Some(Formula::par((**l).clone(), r.replace_at(&path[1..], replacement)?))
                }
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // Precedence: literals bind tightest, then `*`, then `|`.
        let prec = match self {
            Formula::Lit { .. } => 2,
            Formula::Tensor(..) => 1,
            Formula::Par(..) => 0,
        };
        let parens = prec < parent;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Formula::Lit { atom, polarity } => {
                if *polarity == Polarity::Neg {
                    write!(f, "~")?;
                }
                write!(f, "{atom}")?;
            }
            Formula::Tensor(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, "*")?;
                // Left-associative: right child needs parens at equal level.
                r.fmt_prec(f, 2)?;
            }
            Formula::Par(l, r) => {
                l.fmt_prec(f, 0)?;
                write!(f, "|")?;
                r.fmt_prec(f, 1)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// One literal occurrence of a sequent, numbered left to right from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub atom: String,
    pub polarity: Polarity,
}

/// A nonempty ordered list of formulas. Commas behave as `|` for every graph
/// and tensor purpose but are kept for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequent {
    formulas: Vec<Formula>,
}

impl Sequent {
    pub fn new(formulas: Vec<Formula>) -> Result<Sequent, LogicError> {
        if formulas.is_empty() {
            return Err(LogicError::EmptySequent);
        }
        Ok(Sequent { formulas })
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    /// Left-to-right literal occurrences, 1-based when addressed by index.
    pub fn occurrences(&self) -> Vec<Occurrence> {
        fn walk(formula: &Formula, out: &mut Vec<Occurrence>) {
            match formula {
                Formula::Lit { atom, polarity } => out.push(Occurrence {
                    atom: atom.clone(),
                    polarity: *polarity,
                }),
                Formula::Tensor(l, r) | Formula::Par(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        for formula in &self.formulas {
            walk(formula, &mut out);
        }
        out
    }

    pub fn literal_count(&self) -> usize {
        self.formulas.iter().map(|f| f.literal_count()).sum()
    }

    /// Total tensor and par connective counts across all formulas.
    pub fn connective_counts(&self) -> (usize, usize) {
        self.formulas
            .iter()
            .map(|f| f.connective_counts())
            .fold((0, 0), |(at, ap), (t, p)| (at + t, ap + p))
    }

    /// True when every formula is a par of tensor-only blocks.
    pub fn is_mdnf(&self) -> bool {
        fn pars_of_blocks(f: &Formula) -> bool {
            match f {
                Formula::Par(l, r) => pars_of_blocks(l) && pars_of_blocks(r),
                other => tensor_only(other),
            }
        }
        fn tensor_only(f: &Formula) -> bool {
            match f {
                Formula::Lit { .. } => true,
                Formula::Tensor(l, r) => tensor_only(l) && tensor_only(r),
                Formula::Par(..) => false,
            }
        }
        self.formulas.iter().all(pars_of_blocks)
    }

    /// The blocks of a disjunctive-normal-form sequent, each given as its
    /// list of occurrence numbers in left-to-right order.
    pub fn blocks(&self) -> Result<Vec<Vec<u32>>, LogicError> {
        if !self.is_mdnf() {
            return Err(LogicError::NotMdnf);
        }
        fn walk(f: &Formula, next: &mut u32, blocks: &mut Vec<Vec<u32>>) {
            match f {
                Formula::Par(l, r) => {
                    walk(l, next, blocks);
                    walk(r, next, blocks);
                }
                block => {
                    let size = block.literal_count() as u32;
                    blocks.push((*next..*next + size).collect());
                    *next += size;
                }
            }
        }
        let mut blocks = Vec::new();
        let mut next = 1u32;
        for formula in &self.formulas {
            walk(formula, &mut next, &mut blocks);
        }
        Ok(blocks)
    }

    /// The block index (0-based) containing each occurrence (1-based).
    pub fn block_of_occurrence(&self) -> Result<Vec<usize>, LogicError> {
        let blocks = self.blocks()?;
        let mut map = vec![usize::MAX; self.literal_count() + 1];
        for (b, occs) in blocks.iter().enumerate() {
            for &o in occs {
                map[o as usize] = b;
            }
        }
        Ok(map)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, formula) in self.formulas.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{formula}")?;
        }
        Ok(())
    }
}
