//! Exact sparse linear algebra over a field.

use std::collections::BTreeMap;

use crate::scalar::Scalar;

pub type SparseVec<K, S> = BTreeMap<K, S>;

pub fn axpy<K: Ord + Clone, S: Scalar>(target: &mut SparseVec<K, S>, factor: &S, x: &SparseVec<K, S>) {
    if factor.is_zero() {
        return;
    }
    for (k, c) in x {
        let v = c.clone() * factor.clone();
        match target.get_mut(k) {
            Some(t) => {
                *t = t.clone() + v;
                if t.is_zero() {
                    target.remove(k);
                }
            }
            None => {
                target.insert(k.clone(), v);
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Row<K, S> {
    vec: SparseVec<K, S>,
    /// `vec = sum provenance[label] * inserted[label]`
    provenance: SparseVec<usize, S>,
}

/// Incrementally built echelon basis of a subspace, remembering how each
/// row is composed from the inserted vectors.
#[derive(Clone, Debug)]
pub struct EchelonBasis<K, S> {
    rows: BTreeMap<K, Row<K, S>>,
}

impl<K, S> Default for EchelonBasis<K, S> {
    fn default() -> Self {
        Self { rows: BTreeMap::new() }
    }
}

impl<K: Ord + Clone, S: Scalar> EchelonBasis<K, S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = &K> + '_ {
        self.rows.keys()
    }

    /// Reduces `v`; returns the remainder and the combination of inserted
    /// vectors that was subtracted (`v = remainder + sum c * inserted`).
    pub fn reduce(&self, v: &SparseVec<K, S>) -> (SparseVec<K, S>, SparseVec<usize, S>) {
        let mut rem = v.clone();
        let mut combo = SparseVec::new();
        let mut cursor: Option<K> = None;
        loop {
            let next = match &cursor {
                None => rem.keys().find(|k| self.rows.contains_key(*k)).cloned(),
                Some(c) => rem
                    .range((std::ops::Bound::Excluded(c.clone()), std::ops::Bound::Unbounded))
                    .map(|(k, _)| k)
                    .find(|k| self.rows.contains_key(*k))
                    .cloned(),
            };
            let Some(k) = next else { break };
            let row = &self.rows[&k];
            let factor = rem[&k].clone();
            axpy(&mut rem, &-factor.clone(), &row.vec);
            axpy(&mut combo, &factor, &row.provenance);
            cursor = Some(k);
        }
        (rem, combo)
    }

    pub fn contains(&self, v: &SparseVec<K, S>) -> bool {
        self.reduce(v).0.is_empty()
    }

    /// Coordinates of `v` in terms of the inserted vectors, if `v` is in the span.
    pub fn express(&self, v: &SparseVec<K, S>) -> Option<SparseVec<usize, S>> {
        let (rem, combo) = self.reduce(v);
        rem.is_empty().then_some(combo)
    }

    /// Inserts `v` under `label`. Returns `None` when `v` was independent,
    /// otherwise the dependency `v = sum c * inserted`.
    pub fn insert(&mut self, v: &SparseVec<K, S>, label: usize) -> Option<SparseVec<usize, S>> {
        let (rem, combo) = self.reduce(v);
        if rem.is_empty() {
            return Some(combo);
        }
        let (pivot, lead) = rem.iter().next().map(|(k, c)| (k.clone(), c.clone())).unwrap();
        let inv = S::one() / lead;
        let mut provenance = SparseVec::new();
        provenance.insert(label, S::one());
        axpy(&mut provenance, &-S::one(), &combo);
        let vec = rem.into_iter().map(|(k, c)| (k, c * inv.clone())).collect();
        let provenance = provenance.into_iter().map(|(k, c)| (k, c * inv.clone())).collect();
        self.rows.insert(pivot, Row { vec, provenance });
        None
    }

    /// Inserts without tracking a label.
    pub fn push(&mut self, v: &SparseVec<K, S>) -> bool {
        self.insert(v, usize::MAX).is_none()
    }

    pub fn basis_vectors(&self) -> impl Iterator<Item = &SparseVec<K, S>> + '_ {
        self.rows.values().map(|r| &r.vec)
    }
}

/// Rank of a family of vectors.
pub fn rank<K: Ord + Clone, S: Scalar>(vectors: &[SparseVec<K, S>]) -> usize {
    let mut b = EchelonBasis::new();
    for v in vectors {
        b.push(v);
    }
    b.rank()
}
