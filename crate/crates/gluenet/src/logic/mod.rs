//! Sequents, linkings, and weighted linear combinations.

mod formula;
mod linking;
mod parse;

pub use formula::{Formula, Polarity, Sequent};
pub use linking::{enumerate_linkings, LinComb, Linking, LinkingEnumeration};
pub use parse::{parse_sequent, ParseError};

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogicError {
    EmptySequent,
    OccurrenceOutOfRange(u32),
    NotComplementary { pos: u32, neg: u32 },
    WrongPolarity(u32),
    OccurrenceUnpaired(u32),
    OccurrenceRepeated(u32),
    DuplicateLinking,
    NotMdnf,
    BoundExceeded { literals: usize, bound: usize },
    InvalidCoefficient(String),
}

impl fmt::Display for LogicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicError::EmptySequent => write!(f, "sequent has no formulas"),
            LogicError::OccurrenceOutOfRange(o) => {
                write!(f, "literal occurrence {o} is out of range")
            }
            LogicError::NotComplementary { pos, neg } => write!(
                f,
                "occurrences {pos} and {neg} are not complementary literals of one atom"
            ),
            LogicError::WrongPolarity(o) => write!(
                f,
                "occurrence {o} does not have the polarity its pair position requires"
            ),
            LogicError::OccurrenceUnpaired(o) => write!(f, "occurrence {o} is not paired"),
            LogicError::OccurrenceRepeated(o) => {
                write!(f, "occurrence {o} appears in more than one pair")
            }
            LogicError::DuplicateLinking => {
                write!(f, "the same linking appears in several terms")
            }
            LogicError::NotMdnf => write!(f, "sequent is not in disjunctive normal form"),
            LogicError::BoundExceeded { literals, bound } => write!(
                f,
                "sequent has {literals} literals, above the enumeration bound {bound}"
            ),
            LogicError::InvalidCoefficient(msg) => write!(f, "invalid coefficient: {msg}"),
        }
    }
}

impl std::error::Error for LogicError {}
