//! Dense tensors: explicit sparse entry maps over a uniform index range.

use std::collections::BTreeMap;

use crate::semiring::{Scalar, Semiring};

use super::{entry_count, TensorError};

/// A tensor of some order whose indices all range over `[1, dim]`, stored as
/// a map from multi-index to nonzero entry. An order-0 tensor is a scalar
/// keyed by the empty index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseTensor {
    semiring: Semiring,
    order: usize,
    dim: usize,
    entries: BTreeMap<Vec<u32>, Scalar>,
}

impl DenseTensor {
    pub fn zero(semiring: Semiring, order: usize, dim: usize) -> DenseTensor {
        assert!(dim >= 1, "tensor dimension must be at least 1");
        DenseTensor {
            semiring,
            order,
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn scalar(semiring: Semiring, value: Scalar) -> DenseTensor {
        let mut t = DenseTensor::zero(semiring, 0, 1);
        t.set(vec![], value);
        t
    }

    /// Builds a tensor from `(multi-index, value)` pairs, rejecting
    /// out-of-range coordinates.
    pub fn from_entries(
        semiring: Semiring,
        order: usize,
        dim: usize,
        entries: impl IntoIterator<Item = (Vec<u32>, Scalar)>,
    ) -> Result<DenseTensor, TensorError> {
        let mut t = DenseTensor::zero(semiring, order, dim);
        for (idx, value) in entries {
            if idx.len() != order {
                return Err(TensorError::InvalidEntry(format!(
                    "index {idx:?} has length {} but tensor order is {order}",
                    idx.len()
                )));
            }
            if idx.iter().any(|&c| c == 0 || c as usize > dim) {
                return Err(TensorError::InvalidEntry(format!(
                    "index {idx:?} out of range for dimension {dim}"
                )));
            }
            let merged = match t.entries.get(&idx) {
                Some(old) => semiring.add(old, &value),
                None => value,
            };
            t.set(idx, merged);
        }
        Ok(t)
    }

    /// Convenience constructor for small integer matrices in row order.
    pub fn from_rows(semiring: Semiring, rows: &[Vec<i64>]) -> DenseTensor {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        let mut t = DenseTensor::zero(semiring, 2, dim);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t.set(vec![i as u32 + 1, j as u32 + 1], Scalar::int(v));
            }
        }
        t
    }

    pub fn identity(semiring: Semiring, dim: usize) -> DenseTensor {
        let mut t = DenseTensor::zero(semiring, 2, dim);
        for i in 1..=dim as u32 {
            t.set(vec![i, i], semiring.one());
        }
        t
    }

    pub fn ones(semiring: Semiring, order: usize, dim: usize) -> DenseTensor {
        let mut t = DenseTensor::zero(semiring, order, dim);
        for idx in multi_indices(order, dim) {
            t.set(idx, semiring.one());
        }
        t
    }

    /// The order-1 basis tensor with a single 1 at position `x`.
    pub fn basis(semiring: Semiring, dim: usize, x: u32) -> DenseTensor {
        let mut t = DenseTensor::zero(semiring, 1, dim);
        t.set(vec![x], semiring.one());
        t
    }

    pub fn semiring(&self) -> Semiring {
        self.semiring
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, idx: Vec<u32>, value: Scalar) {
        debug_assert_eq!(idx.len(), self.order);
        if value.is_zero() {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, value);
        }
    }

    pub fn get(&self, idx: &[u32]) -> Scalar {
        self.entries
            .get(idx)
            .cloned()
            .unwrap_or_else(|| self.semiring.zero())
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (&Vec<u32>, &Scalar)> {
        self.entries.iter()
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// The scalar held by an order-0 tensor.
    pub fn as_scalar(&self) -> Option<Scalar> {
        (self.order == 0).then(|| self.get(&[]))
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<(), TensorError> {
        if self.semiring != other.semiring {
            return Err(TensorError::SemiringMismatch);
        }
        if self.order != other.order {
            return Err(TensorError::ShapeMismatch(format!(
                "orders {} vs {}",
                self.order, other.order
            )));
        }
        if self.order > 0 && self.dim != other.dim {
            return Err(TensorError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor, TensorError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (idx, v) in other.entries.iter() {
            let merged = self.semiring.add(&out.get(idx), v);
            out.set(idx.clone(), merged);
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> DenseTensor {
        let mut out = DenseTensor::zero(self.semiring, self.order, self.dim);
        for (idx, v) in self.entries.iter() {
            out.set(idx.clone(), self.semiring.mul(s, v));
        }
        out
    }

    pub fn outer(&self, other: &DenseTensor) -> Result<DenseTensor, TensorError> {
        if self.semiring != other.semiring {
            return Err(TensorError::SemiringMismatch);
        }
        if self.order > 0 && other.order > 0 && self.dim != other.dim {
            return Err(TensorError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let dim = if self.order > 0 { self.dim } else { other.dim };
        let mut out = DenseTensor::zero(self.semiring, self.order + other.order, dim);
        for (li, lv) in self.entries.iter() {
            for (ri, rv) in other.entries.iter() {
                let mut idx = li.clone();
                idx.extend_from_slice(ri);
                out.set(idx, self.semiring.mul(lv, rv));
            }
        }
        Ok(out)
    }

    /// Einstein summation over the given `(position in self, position in
    /// other)` pairs. Remaining indices keep their order: `self`'s unpaired
    /// positions first, then `other`'s.
    pub fn contract(
        &self,
        other: &DenseTensor,
        pairs: &[(usize, usize)],
    ) -> Result<DenseTensor, TensorError> {
        if self.semiring != other.semiring {
            return Err(TensorError::SemiringMismatch);
        }
        if self.order > 0 && other.order > 0 && !pairs.is_empty() && self.dim != other.dim {
            return Err(TensorError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut seen_l = vec![false; self.order];
        let mut seen_r = vec![false; other.order];
        for &(l, r) in pairs {
            if l >= self.order || r >= other.order {
                return Err(TensorError::BadPairing(format!(
                    "pair ({l},{r}) out of range for orders {} and {}",
                    self.order, other.order
                )));
            }
            if seen_l[l] || seen_r[r] {
                return Err(TensorError::BadPairing(format!(
                    "position repeated in pairing ({l},{r})"
                )));
            }
            seen_l[l] = true;
            seen_r[r] = true;
        }
        let keep_l: Vec<usize> = (0..self.order).filter(|&p| !seen_l[p]).collect();
        let keep_r: Vec<usize> = (0..other.order).filter(|&p| !seen_r[p]).collect();

        // Group the right operand by its paired coordinates.
        let mut grouped: BTreeMap<Vec<u32>, Vec<(Vec<u32>, &Scalar)>> = BTreeMap::new();
        for (idx, v) in other.entries.iter() {
            let key: Vec<u32> = pairs.iter().map(|&(_, r)| idx[r]).collect();
            let rest: Vec<u32> = keep_r.iter().map(|&p| idx[p]).collect();
            grouped.entry(key).or_default().push((rest, v));
        }

        let dim = if self.order > 0 { self.dim } else { other.dim };
        let mut out = DenseTensor::zero(
            self.semiring,
            keep_l.len() + keep_r.len(),
            dim.max(1),
        );
        for (idx, lv) in self.entries.iter() {
            let key: Vec<u32> = pairs.iter().map(|&(l, _)| idx[l]).collect();
            let Some(matches) = grouped.get(&key) else {
                continue;
            };
            let left_rest: Vec<u32> = keep_l.iter().map(|&p| idx[p]).collect();
            for (right_rest, rv) in matches {
                let mut out_idx = left_rest.clone();
                out_idx.extend_from_slice(right_rest);
                let term = self.semiring.mul(lv, rv);
                let merged = self.semiring.add(&out.get(&out_idx), &term);
                out.set(out_idx, merged);
            }
        }
        Ok(out)
    }

    /// Marginalizes one index position away by summation.
    pub fn sum_out(&self, position: usize) -> DenseTensor {
        assert!(position < self.order);
        let mut out = DenseTensor::zero(self.semiring, self.order - 1, self.dim);
        for (idx, v) in self.entries.iter() {
            let mut rest = idx.clone();
            rest.remove(position);
            let merged = self.semiring.add(&out.get(&rest), v);
            out.set(rest, merged);
        }
        out
    }

    /// Reorders the index positions by `perm`, where position `p` of the
    /// result is position `perm[p]` of the input.
    pub fn permute(&self, perm: &[usize]) -> DenseTensor {
        assert_eq!(perm.len(), self.order);
        let mut out = DenseTensor::zero(self.semiring, self.order, self.dim);
        for (idx, v) in self.entries.iter() {
            let new_idx: Vec<u32> = perm.iter().map(|&p| idx[p]).collect();
            out.set(new_idx, v.clone());
        }
        out
    }
}

/// All multi-indices of the given order over `[1, dim]`, lexicographically.
pub(crate) fn multi_indices(order: usize, dim: usize) -> Vec<Vec<u32>> {
    let total = entry_count(dim, order);
    assert!(total <= u128::from(u32::MAX), "index space too large to walk");
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![1u32; order];
    loop {
        out.push(idx.clone());
        let mut p = order;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            if (idx[p] as usize) < dim {
                idx[p] += 1;
                for q in p + 1..order {
                    idx[q] = 1;
                }
                break;
            }
        }
    }
}
