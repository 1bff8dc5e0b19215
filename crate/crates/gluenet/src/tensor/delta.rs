//! Symbolic tensors: weighted sums of Kronecker-delta products.
//!
//! A [`DeltaExpr`] denotes, at every uniform dimension `n`, the tensor whose
//! entry at a multi-index assignment is the sum over terms of the term
//! coefficient times a product of 0/1 factor values. Composition reduces
//! factor-by-factor, so expressions stay small even when `n` does not fit in
//! machine memory.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use num::{BigUint, Zero};
use serde::{Deserialize, Serialize};

use crate::semiring::{Scalar, Semiring};

use super::dense::multi_indices;
use super::{dense_limit, entry_count, DenseTensor, IndexName, TensorError};

/// A partial injection on `[1, n]`, read as the bijection obtained by
/// extending it canonically: the lowest unmapped preimage goes to the lowest
/// unused image, and so on. An empty relabeling is the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Relabeling {
    pairs: BTreeMap<BigUint, BigUint>,
}

impl Relabeling {
    pub fn identity() -> Relabeling {
        Relabeling::default()
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (BigUint, BigUint)>,
    ) -> Result<Relabeling, TensorError> {
        let mut map = BTreeMap::new();
        let mut images = BTreeSet::new();
        for (x, y) in pairs {
            if x.is_zero() || y.is_zero() {
                return Err(TensorError::InvalidEntry(
                    "relabeling values are 1-based".into(),
                ));
            }
            if !images.insert(y.clone()) {
                return Err(TensorError::InvalidEntry(format!(
                    "relabeling image {y} repeated"
                )));
            }
            if map.insert(x.clone(), y).is_some() {
                return Err(TensorError::InvalidEntry(format!(
                    "relabeling preimage {x} repeated"
                )));
            }
        }
        Ok(Relabeling { pairs: map })
    }

    pub fn pairs(&self) -> &BTreeMap<BigUint, BigUint> {
        &self.pairs
    }

    pub fn in_range(&self, n: &BigUint) -> bool {
        self.pairs.iter().all(|(x, y)| x <= n && y <= n)
    }

    /// The `rank`-th (1-based) element of `[1, n]` minus `excluded`.
    fn nth_outside(excluded: &BTreeSet<BigUint>, rank: &BigUint) -> BigUint {
        let mut rank = rank.clone();
        let mut prev = BigUint::zero();
        for s in excluded {
            let gap = s - &prev - 1u32;
            if rank <= gap {
                return &prev + rank;
            }
            rank -= gap;
            prev = s.clone();
        }
        &prev + rank
    }

    pub fn apply(&self, x: &BigUint) -> BigUint {
        if let Some(y) = self.pairs.get(x) {
            return y.clone();
        }
        let below = self.pairs.range(..x.clone()).count();
        let rank = x - BigUint::from(below);
        let images: BTreeSet<BigUint> = self.pairs.values().cloned().collect();
        Relabeling::nth_outside(&images, &rank)
    }

    pub fn invert(&self, y: &BigUint) -> BigUint {
        if let Some((x, _)) = self.pairs.iter().find(|(_, v)| *v == y) {
            return x.clone();
        }
        let below = self.pairs.values().filter(|v| *v < y).count();
        let rank = y - BigUint::from(below);
        let domain: BTreeSet<BigUint> = self.pairs.keys().cloned().collect();
        Relabeling::nth_outside(&domain, &rank)
    }
}

/// One 0/1 multiplicative factor of a term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeltaFactor {
    /// 1 exactly when the index equals the constant.
    Const { index: IndexName, value: BigUint },
    /// 1 exactly when the two indices agree.
    Link { a: IndexName, b: IndexName },
    /// 1 exactly when the relabeled coordinates sum to `residue` mod
    /// `modulus`. One relabeling per slot; slots may repeat an index name.
    Cycle {
        indices: Vec<IndexName>,
        relabel: Vec<Relabeling>,
        modulus: BigUint,
        residue: BigUint,
    },
}

impl DeltaFactor {
    pub fn link(a: impl Into<IndexName>, b: impl Into<IndexName>) -> DeltaFactor {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            DeltaFactor::Link { a, b }
        } else {
            DeltaFactor::Link { a: b, b: a }
        }
    }

    pub fn constant(index: impl Into<IndexName>, value: u64) -> DeltaFactor {
        DeltaFactor::Const {
            index: index.into(),
            value: BigUint::from(value),
        }
    }

    fn mentions(&self, name: &IndexName) -> bool {
        match self {
            DeltaFactor::Const { index, .. } => index == name,
            DeltaFactor::Link { a, b } => a == name || b == name,
            DeltaFactor::Cycle { indices, .. } => indices.contains(name),
        }
    }

    fn rename(&mut self, from: &IndexName, to: &IndexName) {
        match self {
            DeltaFactor::Const { index, .. } => {
                if index == from {
                    *index = to.clone();
                }
            }
            DeltaFactor::Link { a, b } => {
                if a == from {
                    *a = to.clone();
                }
                if b == from {
                    *b = to.clone();
                }
                if a > b {
                    std::mem::swap(a, b);
                }
            }
            DeltaFactor::Cycle { indices, .. } => {
                for ix in indices.iter_mut() {
                    if ix == from {
                        *ix = to.clone();
                    }
                }
            }
        }
    }

    fn evaluate(&self, assignment: &BTreeMap<IndexName, BigUint>) -> bool {
        match self {
            DeltaFactor::Const { index, value } => assignment[index] == *value,
            DeltaFactor::Link { a, b } => assignment[a] == assignment[b],
            DeltaFactor::Cycle {
                indices,
                relabel,
                modulus,
                residue,
            } => {
                let mut sum = BigUint::zero();
                for (ix, map) in indices.iter().zip(relabel.iter()) {
                    sum += map.apply(&assignment[ix]);
                }
                &sum % modulus == residue % modulus
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaTerm {
    pub coeff: Scalar,
    pub factors: Vec<DeltaFactor>,
}

impl DeltaTerm {
    pub fn new(coeff: Scalar, factors: Vec<DeltaFactor>) -> DeltaTerm {
        DeltaTerm { coeff, factors }
    }
}

/// A symbolic tensor: an ordered list of free index names plus a sum of
/// weighted factor products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaExpr {
    semiring: Semiring,
    indices: Vec<IndexName>,
    terms: Vec<DeltaTerm>,
}

impl DeltaExpr {
    pub fn new(
        semiring: Semiring,
        indices: Vec<IndexName>,
        terms: Vec<DeltaTerm>,
    ) -> Result<DeltaExpr, TensorError> {
        let known: BTreeSet<&IndexName> = indices.iter().collect();
        if known.len() != indices.len() {
            return Err(TensorError::BadPairing(
                "free index names must be distinct".into(),
            ));
        }
        for term in &terms {
            for factor in &term.factors {
                let mentioned: Vec<&IndexName> = match factor {
                    DeltaFactor::Const { index, .. } => vec![index],
                    DeltaFactor::Link { a, b } => vec![a, b],
                    DeltaFactor::Cycle { indices, relabel, .. } => {
                        if indices.len() != relabel.len() {
                            return Err(TensorError::InvalidEntry(
                                "cycle factor needs one relabeling per slot".into(),
                            ));
                        }
                        indices.iter().collect()
                    }
                };
                for name in mentioned {
                    if !known.contains(name) {
                        return Err(TensorError::UnknownIndex(name.clone()));
                    }
                }
            }
        }
        let mut expr = DeltaExpr {
            semiring,
            indices,
            terms,
        };
        expr.normalize();
        Ok(expr)
    }

    pub fn zero(semiring: Semiring, indices: Vec<IndexName>) -> DeltaExpr {
        DeltaExpr {
            semiring,
            indices,
            terms: vec![],
        }
    }

    pub fn scalar(semiring: Semiring, value: Scalar) -> DeltaExpr {
        let terms = if value.is_zero() {
            vec![]
        } else {
            vec![DeltaTerm::new(value, vec![])]
        };
        DeltaExpr {
            semiring,
            indices: vec![],
            terms,
        }
    }

    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn indices(&self) -> &[IndexName] {
        &self.indices
    }

    pub fn terms(&self) -> &[DeltaTerm] {
        &self.terms
    }

    pub fn order(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value of an order-0 expression.
    pub fn as_scalar(&self) -> Option<Scalar> {
        if !self.indices.is_empty() {
            return None;
        }
        let mut total = self.semiring.zero();
        for term in &self.terms {
            if !term.factors.is_empty() {
                return None;
            }
            total = self.semiring.add(&total, &term.coeff);
        }
        Some(total)
    }

    pub fn rename_index(&mut self, from: &IndexName, to: &IndexName) -> Result<(), TensorError> {
        if from == to {
            return Ok(());
        }
        if self.indices.contains(to) {
            return Err(TensorError::NameClash(to.clone()));
        }
        let Some(pos) = self.indices.iter().position(|ix| ix == from) else {
            return Err(TensorError::UnknownIndex(from.clone()));
        };
        self.indices[pos] = to.clone();
        for term in self.terms.iter_mut() {
            for factor in term.factors.iter_mut() {
                factor.rename(from, to);
            }
        }
        Ok(())
    }

    /// Reorders the free-index list to the given permutation of itself.
    /// Factor semantics do not depend on index order, so only the list moves.
    pub fn reorder_indices(&self, names: &[IndexName]) -> Result<DeltaExpr, TensorError> {
        if names.len() != self.indices.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "{} names for order {}",
                names.len(),
                self.indices.len()
            )));
        }
        for name in names {
            if !self.indices.contains(name) {
                return Err(TensorError::UnknownIndex(name.clone()));
            }
        }
        let mut unique = names.to_vec();
        unique.sort();
        unique.dedup();
        if unique.len() != names.len() {
            return Err(TensorError::BadPairing("repeated index name".into()));
        }
        Ok(DeltaExpr {
            semiring: self.semiring,
            indices: names.to_vec(),
            terms: self.terms.clone(),
        })
    }

    /// Replaces the whole index list, positionally.
    pub fn with_indices(mut self, names: Vec<IndexName>) -> Result<DeltaExpr, TensorError> {
        if names.len() != self.indices.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "{} names for order {}",
                names.len(),
                self.indices.len()
            )));
        }
        // Two-phase rename through fresh temporaries so swaps are safe.
        let temps: Vec<IndexName> = (0..names.len())
            .map(|k| IndexName::new(format!("__tmp{k}")))
            .collect();
        let old = self.indices.clone();
        for (o, t) in old.iter().zip(temps.iter()) {
            self.rename_index(o, t)?;
        }
        for (t, n) in temps.iter().zip(names.iter()) {
            self.rename_index(t, n)?;
        }
        Ok(self)
    }

    pub fn add(&self, other: &DeltaExpr) -> Result<DeltaExpr, TensorError> {
        if self.semiring != other.semiring {
            return Err(TensorError::SemiringMismatch);
        }
        if self.indices != other.indices {
            return Err(TensorError::ShapeMismatch(
                "addition requires identical index lists".into(),
            ));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        DeltaExpr::new(self.semiring, self.indices.clone(), terms)
    }

    pub fn scale(&self, s: &Scalar) -> DeltaExpr {
        let terms = self
            .terms
            .iter()
            .map(|t| DeltaTerm::new(self.semiring.mul(s, &t.coeff), t.factors.clone()))
            .collect();
        let mut out = DeltaExpr {
            semiring: self.semiring,
            indices: self.indices.clone(),
            terms,
        };
        out.normalize();
        out
    }

    pub fn outer(&self, other: &DeltaExpr) -> Result<DeltaExpr, TensorError> {
        if self.semiring != other.semiring {
            return Err(TensorError::SemiringMismatch);
        }
        if let Some(clash) = other.indices.iter().find(|ix| self.indices.contains(ix)) {
            return Err(TensorError::NameClash(clash.clone()));
        }
        let mut indices = self.indices.clone();
        indices.extend(other.indices.iter().cloned());
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for lt in &self.terms {
            for rt in &other.terms {
                let mut factors = lt.factors.clone();
                factors.extend(rt.factors.iter().cloned());
                terms.push(DeltaTerm::new(
                    self.semiring.mul(&lt.coeff, &rt.coeff),
                    factors,
                ));
            }
        }
        DeltaExpr::new(self.semiring, indices, terms)
    }

    /// Pointwise product of two expressions over one shared index space:
    /// indices with the same name refer to the same coordinate. The result's
    /// index list is the union, `self`'s names first.
    pub fn pointwise_mul(&self, other: &DeltaExpr) -> Result<DeltaExpr, TensorError> {
        if self.semiring != other.semiring {
            return Err(TensorError::SemiringMismatch);
        }
        let mut indices = self.indices.clone();
        let extra: Vec<IndexName> = other
            .indices
            .iter()
            .filter(|ix| !indices.contains(ix))
            .cloned()
            .collect();
        indices.extend(extra);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for lt in &self.terms {
            for rt in &other.terms {
                let mut factors = lt.factors.clone();
                factors.extend(rt.factors.iter().cloned());
                terms.push(DeltaTerm::new(
                    self.semiring.mul(&lt.coeff, &rt.coeff),
                    factors,
                ));
            }
        }
        DeltaExpr::new(self.semiring, indices, terms)
    }

    /// Einstein summation of one index over `[1, n]`. The dimension is only
    /// needed when a term does not constrain the index at all.
    pub fn sum_over(
        &self,
        name: &IndexName,
        dim: Option<&BigUint>,
    ) -> Result<DeltaExpr, TensorError> {
        let Some(pos) = self.indices.iter().position(|ix| ix == name) else {
            return Err(TensorError::UnknownIndex(name.clone()));
        };
        let mut indices = self.indices.clone();
        indices.remove(pos);

        let mut out_terms = Vec::new();
        for term in &self.terms {
            let mut term = term.clone();
            // Within-term normalization has already run; factors mentioning
            // the summed index are now in one of the shapes below.
            let holders: Vec<usize> = term
                .factors
                .iter()
                .enumerate()
                .filter(|(_, f)| f.mentions(name))
                .map(|(k, _)| k)
                .collect();
            if holders.is_empty() {
                let n = dim.ok_or(TensorError::DimensionRequired)?;
                term.coeff = self
                    .semiring
                    .mul(&term.coeff, &self.semiring.from_natural(n));
                out_terms.push(term);
                continue;
            }
            if let Some(&k) = holders
                .iter()
                .find(|&&k| matches!(term.factors[k], DeltaFactor::Const { .. }))
            {
                // Normalization substituted the constant everywhere else, so
                // the sum collapses to that single admissible value.
                debug_assert_eq!(holders.len(), 1);
                term.factors.remove(k);
                out_terms.push(term);
                continue;
            }
            if let Some(&k) = holders
                .iter()
                .find(|&&k| matches!(term.factors[k], DeltaFactor::Link { .. }))
            {
                let DeltaFactor::Link { a, b } = term.factors[k].clone() else {
                    unreachable!()
                };
                let partner = if a == *name { b } else { a };
                term.factors.remove(k);
                for f in term.factors.iter_mut() {
                    f.rename(name, &partner);
                }
                out_terms.push(term);
                continue;
            }
            // Only cycle factors mention the index.
            if holders.len() > 1 {
                return Err(TensorError::UnsupportedSymbolicSum(format!(
                    "index {name} is shared by {} cycle factors",
                    holders.len()
                )));
            }
            let k = holders[0];
            let DeltaFactor::Cycle {
                indices: slots, ..
            } = &term.factors[k]
            else {
                unreachable!()
            };
            if slots.iter().filter(|ix| *ix == name).count() > 1 {
                return Err(TensorError::UnsupportedSymbolicSum(format!(
                    "index {name} occupies several slots of one cycle factor"
                )));
            }
            // Exactly one admissible value exists for every assignment of the
            // other slots, so the summed factor contributes 1 regardless of
            // them: the whole factor disappears.
            term.factors.remove(k);
            out_terms.push(term);
        }
        let result = DeltaExpr::new(self.semiring, indices, out_terms)?;
        maybe_cross_check_sum(self, name, dim, &result);
        Ok(result)
    }

    /// Contracts `self` with `other` over the named index pairs.
    pub fn contract(
        &self,
        other: &DeltaExpr,
        pairs: &[(IndexName, IndexName)],
        dim: Option<&BigUint>,
    ) -> Result<DeltaExpr, TensorError> {
        let mut other = other.clone();
        // Identify each paired index of `other` with its partner in `self`;
        // the pointwise product then sums over those shared names.
        for (l, r) in pairs {
            if !self.indices.contains(l) {
                return Err(TensorError::UnknownIndex(l.clone()));
            }
            if l != r {
                other.rename_index(r, l)?;
            }
        }
        for ix in other.indices.iter() {
            if self.indices.contains(ix) && !pairs.iter().any(|(l, _)| l == ix) {
                return Err(TensorError::NameClash(ix.clone()));
            }
        }
        let mut indices = self.indices.clone();
        let extra: Vec<IndexName> = other
            .indices
            .iter()
            .filter(|ix| !indices.contains(ix))
            .cloned()
            .collect();
        indices.extend(extra);
        let mut terms = Vec::new();
        for lt in &self.terms {
            for rt in &other.terms {
                let mut factors = lt.factors.clone();
                factors.extend(rt.factors.iter().cloned());
                terms.push(DeltaTerm::new(
                    self.semiring.mul(&lt.coeff, &rt.coeff),
                    factors,
                ));
            }
        }
        let mut result = DeltaExpr::new(self.semiring, indices, terms)?;
        for (l, _) in pairs {
            result = result.sum_over(l, dim)?;
        }
        maybe_cross_check(self, &other, pairs, dim, &result);
        Ok(result)
    }

    pub fn evaluate(&self, assignment: &BTreeMap<IndexName, BigUint>) -> Scalar {
        let mut total = self.semiring.zero();
        for term in &self.terms {
            if term.factors.iter().all(|f| f.evaluate(assignment)) {
                total = self.semiring.add(&total, &term.coeff);
            }
        }
        total
    }

    /// Pointwise evaluation at every multi-index over `[1, n]`.
    pub fn densify(&self, n: usize) -> Result<DenseTensor, TensorError> {
        let needed = entry_count(n, self.order());
        let limit = dense_limit();
        if needed > limit {
            return Err(TensorError::DenseLimitExceeded { needed, limit });
        }
        let mut out = DenseTensor::zero(self.semiring, self.order(), n.max(1));
        for idx in multi_indices(self.order(), n) {
            let assignment: BTreeMap<IndexName, BigUint> = self
                .indices
                .iter()
                .cloned()
                .zip(idx.iter().map(|&c| BigUint::from(c)))
                .collect();
            let v = self.evaluate(&assignment);
            out.set(idx, v);
        }
        Ok(out)
    }

    /// Brings every term to a canonical saturated form and merges equal
    /// factor products. Terms whose factors are unsatisfiable are dropped.
    fn normalize(&mut self) {
        let semiring = self.semiring;
        let mut rewritten = Vec::with_capacity(self.terms.len());
        'terms: for term in self.terms.drain(..) {
            let coeff = term.coeff;
            let mut factors = term.factors;
            loop {
                let mut changed = false;

                // Constants per index; conflicting constants kill the term.
                let mut consts: BTreeMap<IndexName, BigUint> = BTreeMap::new();
                for f in &factors {
                    if let DeltaFactor::Const { index, value } = f {
                        match consts.get(index) {
                            Some(seen) if seen != value => continue 'terms,
                            _ => {
                                consts.insert(index.clone(), value.clone());
                            }
                        }
                    }
                }

                let mut next: Vec<DeltaFactor> = Vec::with_capacity(factors.len());
                for f in factors.drain(..) {
                    match f {
                        DeltaFactor::Link { a, b } if a == b => {
                            changed = true;
                        }
                        DeltaFactor::Link { a, b } => {
                            let va = consts.get(&a).cloned();
                            let vb = consts.get(&b).cloned();
                            match (va, vb) {
                                (Some(v), Some(w)) => {
                                    if v != w {
                                        continue 'terms;
                                    }
                                    changed = true;
                                }
                                (Some(v), None) => {
                                    consts.insert(b.clone(), v.clone());
                                    next.push(DeltaFactor::Const { index: b, value: v });
                                    changed = true;
                                }
                                (None, Some(w)) => {
                                    consts.insert(a.clone(), w.clone());
                                    next.push(DeltaFactor::Const { index: a, value: w });
                                    changed = true;
                                }
                                (None, None) => next.push(DeltaFactor::link(a, b)),
                            }
                        }
                        DeltaFactor::Cycle {
                            indices,
                            relabel,
                            modulus,
                            residue,
                        } => {
                            let mut kept_ix = Vec::new();
                            let mut kept_maps = Vec::new();
                            let mut residue = residue % &modulus;
                            for (ix, map) in indices.into_iter().zip(relabel.into_iter()) {
                                if let Some(v) = consts.get(&ix) {
                                    let image = map.apply(v) % &modulus;
                                    residue = (residue + &modulus - image) % &modulus;
                                    changed = true;
                                } else {
                                    kept_ix.push(ix);
                                    kept_maps.push(map);
                                }
                            }
                            if kept_ix.is_empty() {
                                if !residue.is_zero() {
                                    continue 'terms;
                                }
                                changed = true;
                            } else if kept_ix.len() == 1
                                && kept_ix.iter().filter(|ix| **ix == kept_ix[0]).count() == 1
                            {
                                // One free slot left: solve the congruence.
                                let target = if residue.is_zero() {
                                    modulus.clone()
                                } else {
                                    residue.clone()
                                };
                                let value = kept_maps[0].invert(&target);
                                let index = kept_ix.pop().unwrap();
                                consts.insert(index.clone(), value.clone());
                                next.push(DeltaFactor::Const { index, value });
                                changed = true;
                            } else {
                                next.push(DeltaFactor::Cycle {
                                    indices: kept_ix,
                                    relabel: kept_maps,
                                    modulus,
                                    residue,
                                });
                            }
                        }
                        keep @ DeltaFactor::Const { .. } => next.push(keep),
                    }
                }
                factors = next;
                if !changed {
                    break;
                }
            }
            if coeff.is_zero() {
                continue;
            }
            factors.sort();
            factors.dedup();
            // Merge with an existing identical factor product.
            let existing = rewritten
                .iter_mut()
                .find(|entry: &&mut (Scalar, Vec<DeltaFactor>)| entry.1 == factors);
            if let Some(entry) = existing {
                entry.0 = semiring.add(&entry.0, &coeff);
            } else {
                rewritten.push((coeff, factors));
            }
        }
        self.terms = rewritten
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(coeff, factors)| DeltaTerm { coeff, factors })
            .collect();
    }
}

thread_local! {
    static CROSS_CHECK: Cell<bool> = const { Cell::new(false) };
    static CROSS_CHECK_RUNS: Cell<u64> = const { Cell::new(0) };
}

/// Statistics from backend cross-validation, for tests that want to assert
/// the validation actually exercised contractions.
pub struct CrossCheckStats;

impl CrossCheckStats {
    /// Enables densified re-evaluation of every symbolic contraction on this
    /// thread (when the dimension fits the dense limit).
    pub fn enable() {
        CROSS_CHECK.with(|c| c.set(true));
    }

    pub fn disable() {
        CROSS_CHECK.with(|c| c.set(false));
    }

    pub fn runs() -> u64 {
        CROSS_CHECK_RUNS.with(|c| c.get())
    }
}

fn maybe_cross_check(
    left: &DeltaExpr,
    right_renamed: &DeltaExpr,
    pairs: &[(IndexName, IndexName)],
    dim: Option<&BigUint>,
    symbolic: &DeltaExpr,
) {
    if !CROSS_CHECK.with(|c| c.get()) {
        return;
    }
    let Some(n) = dim.and_then(|n| usize::try_from(n).ok()) else {
        return;
    };
    let limit = dense_limit();
    let worst = left.order().max(right_renamed.order()).max(symbolic.order());
    if entry_count(n, worst) > limit || entry_count(n, left.order() + right_renamed.order() - pairs.len()) > limit {
        return;
    }
    let dl = left.densify(n).expect("cross-check densify");
    let dr = right_renamed.densify(n).expect("cross-check densify");
    // `right_renamed` already uses the left name for each paired index.
    let dense_pairs: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(l, _)| {
            (
                left.indices().iter().position(|ix| ix == l).unwrap(),
                right_renamed.indices().iter().position(|ix| ix == l).unwrap(),
            )
        })
        .collect();
    let dense = dl.contract(&dr, &dense_pairs).expect("cross-check contract");
    // Reorder the dense result to the symbolic result's index order.
    let mut dense_names: Vec<IndexName> = left
        .indices()
        .iter()
        .filter(|ix| !pairs.iter().any(|(l, _)| l == *ix))
        .cloned()
        .collect();
    let extra: Vec<IndexName> = right_renamed
        .indices()
        .iter()
        .filter(|ix| !pairs.iter().any(|(l, _)| l == *ix))
        .filter(|ix| !dense_names.contains(ix))
        .cloned()
        .collect();
    dense_names.extend(extra);
    let perm: Vec<usize> = symbolic
        .indices()
        .iter()
        .map(|ix| dense_names.iter().position(|d| d == ix).unwrap())
        .collect();
    let dense = dense.permute(&perm);
    let sym_dense = symbolic.densify(n).expect("cross-check densify result");
    assert_eq!(
        dense, sym_dense,
        "symbolic contraction disagrees with dense backend at n={n}"
    );
    CROSS_CHECK_RUNS.with(|c| c.set(c.get() + 1));
}

fn maybe_cross_check_sum(
    input: &DeltaExpr,
    name: &IndexName,
    dim: Option<&BigUint>,
    symbolic: &DeltaExpr,
) {
    if !CROSS_CHECK.with(|c| c.get()) {
        return;
    }
    let Some(n) = dim.and_then(|n| usize::try_from(n).ok()) else {
        return;
    };
    if entry_count(n, input.order()) > dense_limit() {
        return;
    }
    let pos = input
        .indices()
        .iter()
        .position(|ix| ix == name)
        .expect("summed index exists");
    let dense = input.densify(n).expect("cross-check densify").sum_out(pos);
    let sym_dense = symbolic.densify(n).expect("cross-check densify result");
    assert_eq!(
        dense, sym_dense,
        "symbolic summation over {name} disagrees with dense backend at n={n}"
    );
    CROSS_CHECK_RUNS.with(|c| c.set(c.get() + 1));
}

/// Builds the expression for a single constant delta product: one `Const`
/// factor per (index, value) pair.
pub fn constant_delta(
    semiring: Semiring,
    assignments: &[(IndexName, BigUint)],
) -> DeltaExpr {
    let indices: Vec<IndexName> = assignments.iter().map(|(ix, _)| ix.clone()).collect();
    let factors = assignments
        .iter()
        .map(|(ix, v)| DeltaFactor::Const {
            index: ix.clone(),
            value: v.clone(),
        })
        .collect();
    DeltaExpr::new(
        semiring,
        indices,
        vec![DeltaTerm::new(semiring.one(), factors)],
    )
    .expect("constant delta is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    fn ix(s: &str) -> IndexName {
        IndexName::from(s)
    }

    fn link_expr(semiring: Semiring, a: &str, b: &str) -> DeltaExpr {
        DeltaExpr::new(
            semiring,
            vec![ix(a), ix(b)],
            vec![DeltaTerm::new(semiring.one(), vec![DeltaFactor::link(a, b)])],
        )
        .unwrap()
    }

    #[test]
    fn identity_composition_gives_identity() {
        let ab = link_expr(Semiring::Nat, "i", "j");
        let bc = link_expr(Semiring::Nat, "j", "k");
        let got = ab
            .contract(&bc, &[(ix("j"), ix("j"))], Some(&BigUint::from(5u32)))
            .unwrap();
        let expected = link_expr(Semiring::Nat, "i", "k");
        assert_eq!(got.densify(5).unwrap(), expected.densify(5).unwrap());
    }

    #[test]
    fn golden_three_block_chain_contraction() {
        // (d^{12}+d^{34})_{i1 j1} (d^{25}+d^{46})_{i2 j2} d^{j3 j1 j2}_{i1 i2 i3}
        // summed over i1 j1 i2 j2 equals d^{51}+d^{63} on (i3, j3).
        let s = Semiring::Int;
        let a = DeltaExpr::new(
            s,
            vec![ix("i1"), ix("j1")],
            vec![
                DeltaTerm::new(
                    s.one(),
                    vec![DeltaFactor::constant("i1", 1), DeltaFactor::constant("j1", 2)],
                ),
                DeltaTerm::new(
                    s.one(),
                    vec![DeltaFactor::constant("i1", 3), DeltaFactor::constant("j1", 4)],
                ),
            ],
        )
        .unwrap();
        let b = DeltaExpr::new(
            s,
            vec![ix("i2"), ix("j2")],
            vec![
                DeltaTerm::new(
                    s.one(),
                    vec![DeltaFactor::constant("i2", 2), DeltaFactor::constant("j2", 5)],
                ),
                DeltaTerm::new(
                    s.one(),
                    vec![DeltaFactor::constant("i2", 4), DeltaFactor::constant("j2", 6)],
                ),
            ],
        )
        .unwrap();
        let structure = DeltaExpr::new(
            s,
            vec![
                ix("i1"),
                ix("i2"),
                ix("i3"),
                ix("j1"),
                ix("j2"),
                ix("j3"),
            ],
            vec![DeltaTerm::new(
                s.one(),
                vec![
                    DeltaFactor::link("i1", "j3"),
                    DeltaFactor::link("i2", "j1"),
                    DeltaFactor::link("i3", "j2"),
                ],
            )],
        )
        .unwrap();
        let n = BigUint::from(6u32);
        let partial = a
            .contract(
                &structure,
                &[(ix("i1"), ix("i1")), (ix("j1"), ix("j1"))],
                Some(&n),
            )
            .unwrap();
        let got = partial
            .contract(&b, &[(ix("i2"), ix("i2")), (ix("j2"), ix("j2"))], Some(&n))
            .unwrap();
        let expected = DeltaExpr::new(
            s,
            vec![ix("i3"), ix("j3")],
            vec![
                DeltaTerm::new(
                    s.one(),
                    vec![DeltaFactor::constant("i3", 5), DeltaFactor::constant("j3", 1)],
                ),
                DeltaTerm::new(
                    s.one(),
                    vec![DeltaFactor::constant("i3", 6), DeltaFactor::constant("j3", 3)],
                ),
            ],
        )
        .unwrap();
        let got = got.with_indices(vec![ix("i3"), ix("j3")]).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn outer_of_basis_deltas_is_constant_delta() {
        let a = constant_delta(Semiring::Nat, &[(ix("i"), BigUint::from(1u32))]);
        let b = constant_delta(Semiring::Nat, &[(ix("j"), BigUint::from(2u32))]);
        let got = a.outer(&b).unwrap();
        let expected = constant_delta(
            Semiring::Nat,
            &[(ix("i"), BigUint::from(1u32)), (ix("j"), BigUint::from(2u32))],
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn outer_with_zero_absorbs() {
        let ones = DeltaExpr::new(
            Semiring::Nat,
            vec![ix("i")],
            vec![DeltaTerm::new(Semiring::Nat.one(), vec![])],
        )
        .unwrap();
        let zero = DeltaExpr::zero(Semiring::Nat, vec![ix("j")]);
        assert!(ones.outer(&zero).unwrap().is_zero());
    }

    #[test]
    fn outer_rejects_name_clash() {
        let a = link_expr(Semiring::Nat, "i", "j");
        let b = link_expr(Semiring::Nat, "j", "k");
        assert!(matches!(a.outer(&b), Err(TensorError::NameClash(_))));
    }

    #[test]
    fn doubled_identity_densifies_to_twos_on_diagonal() {
        let d = link_expr(Semiring::Nat, "i", "j");
        let sum = d.add(&d).unwrap();
        let dense = sum.densify(2).unwrap();
        assert_eq!(dense.get(&[1, 1]), Scalar::int(2));
        assert_eq!(dense.get(&[2, 2]), Scalar::int(2));
        assert_eq!(dense.get(&[1, 2]), Scalar::int(0));
    }

    #[test]
    fn relabeling_extends_to_a_bijection_lazily() {
        // Partial map over [7]: 2 -> 5, 4 -> 1.
        let map = Relabeling::from_pairs([
            (BigUint::from(2u32), BigUint::from(5u32)),
            (BigUint::from(4u32), BigUint::from(1u32)),
        ])
        .unwrap();
        let n = BigUint::from(7u32);
        let mut seen = BTreeSet::new();
        for x in 1u32..=7 {
            let y = map.apply(&BigUint::from(x));
            assert!(y >= BigUint::one() && y <= n);
            assert!(seen.insert(y.clone()), "image repeated");
            assert_eq!(map.invert(&y), BigUint::from(x));
        }
        // Unmapped preimages take the unused images in ascending order:
        // 1->2, 3->3, 5->4, 6->6, 7->7.
        assert_eq!(map.apply(&BigUint::from(1u32)), BigUint::from(2u32));
        assert_eq!(map.apply(&BigUint::from(5u32)), BigUint::from(4u32));
    }

    #[test]
    fn unconstrained_sum_needs_dimension_and_multiplies_by_it() {
        let ones = DeltaExpr::new(
            Semiring::Nat,
            vec![ix("i")],
            vec![DeltaTerm::new(Semiring::Nat.one(), vec![])],
        )
        .unwrap();
        assert!(matches!(
            ones.sum_over(&ix("i"), None),
            Err(TensorError::DimensionRequired)
        ));
        let summed = ones.sum_over(&ix("i"), Some(&BigUint::from(4u32))).unwrap();
        assert_eq!(summed.as_scalar().unwrap(), Scalar::int(4));
    }

    #[test]
    fn cycle_with_one_free_slot_solves_to_a_constant() {
        // Congruence i + j == 0 (mod 5) with j pinned at 2 forces i = 3.
        let n = BigUint::from(5u32);
        let cyc = DeltaExpr::new(
            Semiring::Nat,
            vec![ix("i"), ix("j")],
            vec![DeltaTerm::new(
                Semiring::Nat.one(),
                vec![DeltaFactor::Cycle {
                    indices: vec![ix("i"), ix("j")],
                    relabel: vec![Relabeling::identity(), Relabeling::identity()],
                    modulus: n.clone(),
                    residue: BigUint::zero(),
                }],
            )],
        )
        .unwrap();
        let pin = constant_delta(Semiring::Nat, &[(ix("j"), BigUint::from(2u32))]);
        let got = cyc
            .contract(&pin, &[(ix("j"), ix("j"))], Some(&n))
            .unwrap();
        let expected = constant_delta(Semiring::Nat, &[(ix("i"), BigUint::from(3u32))]);
        assert_eq!(got, expected);
    }

    #[test]
    fn symbolic_matches_dense_on_random_contractions() {
        CrossCheckStats::enable();
        let before = CrossCheckStats::runs();
        let n = BigUint::from(3u32);
        // A couple of structured cases; the acceptance suite stresses this
        // path across every witness computation.
        let a = link_expr(Semiring::Int, "i", "j");
        let cyc = DeltaExpr::new(
            Semiring::Int,
            vec![ix("j"), ix("k")],
            vec![DeltaTerm::new(
                Semiring::Int.one(),
                vec![DeltaFactor::Cycle {
                    indices: vec![ix("j"), ix("k")],
                    relabel: vec![Relabeling::identity(), Relabeling::identity()],
                    modulus: n.clone(),
                    residue: BigUint::from(1u32),
                }],
            )],
        )
        .unwrap();
        let _ = a.contract(&cyc, &[(ix("j"), ix("j"))], Some(&n)).unwrap();
        CrossCheckStats::disable();
        assert!(CrossCheckStats::runs() > before);
    }
}
