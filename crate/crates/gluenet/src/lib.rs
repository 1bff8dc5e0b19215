//! Workbench for semiring-weighted axiom linkings over unit-free
//! multiplicative sequents: tensor calculus, correctness checking,
//! normalization rewrites, and self-verifying rejection witnesses.

pub mod semiring;
pub mod witness;
pub mod tensor;
pub mod corpus;
pub mod glue;
pub mod logic;
pub mod proofnet;
pub mod rewrite;
