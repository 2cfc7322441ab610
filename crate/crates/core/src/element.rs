//! Elements of a finitely generated k[D]-module.

use std::collections::BTreeMap;

use crate::scalar::Scalar;

/// A finite combination `sum c * D^(n) g` with divided powers `D^(n) = D^n / n!`.
///
/// Keys are `(generator index, divided power)`; no zero coefficient is ever
/// stored, so structural equality is equality of elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element<S> {
    terms: BTreeMap<(usize, u32), S>,
}

impl<S> Default for Element<S> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<S: Scalar> Element<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn generator(g: usize) -> Self {
        Self::term(g, 0, S::one())
    }

    pub fn term(g: usize, dpow: u32, coeff: S) -> Self {
        let mut e = Self::zero();
        e.add_term(g, dpow, coeff);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, u32, S)>) -> Self {
        let mut e = Self::zero();
        for (g, d, c) in terms {
            e.add_term(g, d, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, g: usize, dpow: u32, coeff: S) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((g, dpow)) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, factor: &S) {
        if factor.is_zero() {
            return;
        }
        for (&(g, d), c) in &other.terms {
            self.add_term(g, d, c.clone() * factor.clone());
        }
    }

    pub fn coeff(&self, g: usize, dpow: u32) -> S {
        self.terms.get(&(g, dpow)).cloned().unwrap_or_else(S::zero)
    }

    /// Iterates `(generator, divided power, coefficient)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32, &S)> + '_ {
        self.terms.iter().map(|(&(g, d), c)| (g, d, c))
    }

    pub fn max_dpow(&self) -> Option<u32> {
        self.terms.keys().map(|&(_, d)| d).max()
    }

    pub fn scaled(&self, factor: &S) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn generators(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().map(|&(g, _)| g)
    }
}

impl<S: Scalar> std::ops::Add for Element<S> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.add_scaled(&rhs, &S::one());
        self
    }
}

impl<S: Scalar> std::ops::Sub for Element<S> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.add_scaled(&rhs, &-S::one());
        self
    }
}

impl<S: Scalar> std::ops::Neg for Element<S> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(&-S::one())
    }
}
