//! Finite presentations of conformal algebras and evaluation of n-products.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{ConformalError, Result};
use crate::scalar::{binomial_s, sign, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Lie,
    Associative,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub weight: u32,
    /// 0: free over k[D]; 1: `D g = 0`.
    pub torsion_order: u32,
}

impl GeneratorInfo {
    pub fn free(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            weight: 0,
            torsion_order: 0,
        }
    }

    pub fn torsion(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            weight: 0,
            torsion_order: 1,
        }
    }

    pub fn is_torsion(&self) -> bool {
        self.torsion_order == 1
    }
}

/// A conformal algebra given by generators, pairwise locality bounds and the
/// table of products `g(n)h` for `0 <= n < N(g, h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation<S> {
    pub kind: Kind,
    generators: Vec<GeneratorInfo>,
    locality: Vec<Vec<u32>>,
    table: BTreeMap<(usize, usize, u32), Element<S>>,
    /// When set, `validate_presentation` also checks weight homogeneity.
    pub graded: bool,
}

impl<S: Scalar> Presentation<S> {
    pub fn new(kind: Kind, generators: Vec<GeneratorInfo>) -> Result<Self> {
        for (i, g) in generators.iter().enumerate() {
            if g.torsion_order > 1 {
                return Err(ConformalError::UnsupportedTorsion {
                    name: g.name.clone(),
                    order: g.torsion_order,
                });
            }
            if generators[..i].iter().any(|h| h.name == g.name) {
                return Err(ConformalError::DuplicateGenerator(g.name.clone()));
            }
        }
        let n = generators.len();
        Ok(Self {
            kind,
            generators,
            locality: vec![vec![0; n]; n],
            table: BTreeMap::new(),
            graded: false,
        })
    }

    pub fn generators(&self) -> &[GeneratorInfo] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, g: usize) -> &GeneratorInfo {
        &self.generators[g]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| ConformalError::UnknownGenerator(name.to_string()))
    }

    pub fn gen(&self, name: &str) -> Element<S> {
        Element::generator(self.index_of(name).expect("unknown generator"))
    }

    pub fn is_torsion(&self, g: usize) -> bool {
        self.generators[g].is_torsion()
    }

    pub fn set_weights(&mut self, weights: &[u32]) {
        for (g, &w) in self.generators.iter_mut().zip(weights) {
            g.weight = w;
        }
    }

    pub fn set_all_weights(&mut self, w: u32) {
        for g in &mut self.generators {
            g.weight = w;
        }
    }

    pub fn weight(&self, g: usize) -> u32 {
        self.generators[g].weight
    }

    pub fn locality(&self, g: usize, h: usize) -> u32 {
        self.locality[g][h]
    }

    pub fn set_locality(&mut self, g: usize, h: usize, n: u32) {
        self.locality[g][h] = n;
    }

    pub fn max_locality(&self) -> u32 {
        self.locality.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Stores `g(n)h = value` without checking it against the locality bound;
    /// that is `validate_presentation`'s job.
    pub fn set_product(&mut self, g: usize, h: usize, n: u32, value: Element<S>) {
        if value.is_zero() {
            self.table.remove(&(g, h, n));
        } else {
            self.table.insert((g, h, n), value);
        }
    }

    pub fn table(&self) -> impl Iterator<Item = ((usize, usize, u32), &Element<S>)> + '_ {
        self.table.iter().map(|(&k, v)| (k, v))
    }

    /// `g(n)h` for two generators, zero past the locality bound.
    pub fn structure(&self, g: usize, h: usize, n: u32) -> Option<&Element<S>> {
        if n >= self.locality[g][h] {
            return None;
        }
        self.table.get(&(g, h, n))
    }

    pub fn check_element(&self, e: &Element<S>) -> Result<()> {
        for g in e.generators() {
            if g >= self.rank() {
                return Err(ConformalError::GeneratorOutOfRange(g));
            }
        }
        Ok(())
    }

    /// `D^(k) e`. The coefficient of `D^(n) g` moves to `D^(n+k) g` scaled by
    /// `binom(n+k, k)`; torsion generators are killed.
    pub fn apply_derivation(&self, e: &Element<S>, k: u32) -> Element<S> {
        if k == 0 {
            return e.clone();
        }
        let mut out = Element::zero();
        for (g, d, c) in e.iter() {
            if self.is_torsion(g) {
                continue;
            }
            out.add_term(g, d + k, c.clone() * binomial_s::<S>((d + k) as i64, k));
        }
        out
    }

    /// `a(n)b`; negative `n` is rejected.
    pub fn nth_product(&self, a: &Element<S>, b: &Element<S>, n: i64) -> Result<Element<S>> {
        if n < 0 {
            return Err(ConformalError::NegativeIndex(n));
        }
        self.check_element(a)?;
        self.check_element(b)?;
        Ok(self.product(a, b, n as u32))
    }

    /// `a(n)b` for elements already known to be valid.
    ///
    /// Left rule: `(D^(k) g)(n) x = (-1)^k binom(n, k) g(n-k) x`.
    /// Right rule: `g(m)(D^(l) h) = sum_s binom(m, s) D^(l-s)(g(m-s)h)`.
    pub fn product(&self, a: &Element<S>, b: &Element<S>, n: u32) -> Element<S> {
        let mut out = Element::zero();
        for (g, k, ca) in a.iter() {
            if k > n {
                continue;
            }
            let m = n - k;
            let left = sign::<S>(k as i64) * binomial_s::<S>(n as i64, k) * ca.clone();
            for (h, l, cb) in b.iter() {
                let outer = left.clone() * cb.clone();
                for s in 0..=m.min(l) {
                    let Some(gh) = self.structure(g, h, m - s) else {
                        continue;
                    };
                    let f = outer.clone() * binomial_s::<S>(m as i64, s);
                    out.add_scaled(&self.apply_derivation(gh, l - s), &f);
                }
            }
        }
        out
    }

    /// Smallest `B` with `a(n)b = 0` for every `n >= B`, read off from the
    /// generator localities and the divided powers present.
    pub fn product_bound(&self, a: &Element<S>, b: &Element<S>) -> u32 {
        let mut bound = 0;
        for (g, k, _) in a.iter() {
            for (h, l, _) in b.iter() {
                let n = self.locality(g, h);
                if n > 0 {
                    bound = bound.max(n + k + l);
                }
            }
        }
        bound
    }

    pub fn format(&self, e: &Element<S>) -> String {
        if e.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (g, d, c)) in e.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            if !c.is_one() {
                let _ = write!(s, "({c})*");
            }
            if d > 0 {
                let _ = write!(s, "D^({d})");
            }
            s.push_str(&self.generators[g].name);
        }
        s
    }

    /// Same generators and data, relabelled kind.
    pub fn with_kind(&self, kind: Kind) -> Self {
        let mut p = self.clone();
        p.kind = kind;
        p
    }
}
