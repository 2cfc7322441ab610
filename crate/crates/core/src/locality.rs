//! Word enumeration and locality functions.
//!
//! Words over a generating set are built layer by layer: a word of length
//! `l` is `x(n)y` with `x`, `y` words of lengths adding to `l`, so every
//! parenthesization is covered. Words are deduplicated by value, index sum
//! and weight; one witness is kept per class. Products beyond the algebra's
//! product bound vanish structurally and are skipped unless requested.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;

use crate::checks::{CheckReport, Violation};
use crate::element::Element;
use crate::error::Result;
use crate::presentation::Presentation;
use crate::scalar::Scalar;

/// An algebra in which generator words can be multiplied out.
pub trait WordAlgebra: Sync {
    type Value: Clone + Eq + Hash + Send + Sync;

    fn product(&self, x: &Self::Value, y: &Self::Value, n: u32) -> Result<Self::Value>;

    /// `x(n)y = 0` for every `n >= product_bound(x, y)`.
    fn product_bound(&self, x: &Self::Value, y: &Self::Value) -> u32;

    fn is_zero(&self, x: &Self::Value) -> bool;

    fn format(&self, x: &Self::Value) -> String;
}

impl<S: Scalar> WordAlgebra for Presentation<S> {
    type Value = Element<S>;

    fn product(&self, x: &Element<S>, y: &Element<S>, n: u32) -> Result<Element<S>> {
        Ok(Presentation::product(self, x, y, n))
    }

    fn product_bound(&self, x: &Element<S>, y: &Element<S>) -> u32 {
        Presentation::product_bound(self, x, y)
    }

    fn is_zero(&self, x: &Element<S>) -> bool {
        x.is_zero()
    }

    fn format(&self, x: &Element<S>) -> String {
        Presentation::format(self, x)
    }
}

#[derive(Clone, Debug)]
pub struct WordGenerator<V> {
    pub name: String,
    pub value: V,
    pub weight: i64,
}

#[derive(Clone, Debug)]
pub struct WordEntry<V> {
    pub value: V,
    pub index_sum: u32,
    pub weight: i64,
    pub witness: String,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnumerationLimits {
    pub max_length: usize,
    /// Largest index sum that is evaluated.
    pub n_budget: u32,
    /// Products `x(n)y` are evaluated for `n < max(bound, explicit_n)`, so
    /// structurally vanishing products can be confirmed by computation.
    pub explicit_n: u32,
}

/// Nonzero words of each length (index 0 holds length 1).
#[derive(Clone, Debug)]
pub struct WordLayers<V> {
    pub layers: Vec<Vec<WordEntry<V>>>,
    /// Products evaluated, including the ones that vanished.
    pub evaluated: usize,
    /// Some possibly nonzero product was beyond the budget.
    pub truncated: bool,
}

/// New words from one left factor, the number evaluated, and whether the
/// budget cut anything.
type LayerChunk<V> = (Vec<WordEntry<V>>, usize, bool);

pub fn enumerate_words<A: WordAlgebra>(
    alg: &A,
    gens: &[WordGenerator<A::Value>],
    limits: EnumerationLimits,
) -> Result<WordLayers<A::Value>> {
    let mut layers: Vec<Vec<WordEntry<A::Value>>> = Vec::new();
    let first = gens
        .iter()
        .filter(|g| !alg.is_zero(&g.value))
        .map(|g| WordEntry {
            value: g.value.clone(),
            index_sum: 0,
            weight: g.weight,
            witness: g.name.clone(),
        })
        .collect();
    layers.push(dedup(first));
    let mut evaluated = 0;
    let mut truncated = false;
    for l in 2..=limits.max_length {
        let mut found = Vec::new();
        for l1 in 1..l {
            let (xs, ys) = (&layers[l1 - 1], &layers[l - l1 - 1]);
            let results: Vec<Result<LayerChunk<A::Value>>> = xs
                .par_iter()
                .map(|x| {
                    let mut out = Vec::new();
                    let mut count = 0;
                    let mut cut = false;
                    for y in ys {
                        let top = alg.product_bound(&x.value, &y.value).max(limits.explicit_n);
                        for n in 0..top {
                            let sum = x.index_sum + y.index_sum + n;
                            if sum > limits.n_budget {
                                if n < alg.product_bound(&x.value, &y.value) {
                                    cut = true;
                                }
                                break;
                            }
                            count += 1;
                            let v = alg.product(&x.value, &y.value, n)?;
                            if !alg.is_zero(&v) {
                                out.push(WordEntry {
                                    value: v,
                                    index_sum: sum,
                                    weight: x.weight + y.weight + n as i64,
                                    witness: format!("({})({n})({})", x.witness, y.witness),
                                });
                            }
                        }
                    }
                    Ok((out, count, cut))
                })
                .collect();
            for r in results {
                let (out, count, cut) = r?;
                found.extend(out);
                evaluated += count;
                truncated |= cut;
            }
        }
        layers.push(dedup(found));
    }
    Ok(WordLayers {
        layers,
        evaluated,
        truncated,
    })
}

fn dedup<V: Clone + Eq + Hash>(entries: Vec<WordEntry<V>>) -> Vec<WordEntry<V>> {
    let mut best: HashMap<(V, u32, i64), WordEntry<V>> = HashMap::new();
    for e in entries {
        let key = (e.value.clone(), e.index_sum, e.weight);
        match best.get(&key) {
            Some(old) if (old.witness.len(), &old.witness) <= (e.witness.len(), &e.witness) => {}
            _ => {
                best.insert(key, e);
            }
        }
    }
    let mut out: Vec<_> = best.into_values().collect();
    out.sort_by(|a, b| {
        (a.index_sum, a.weight, a.witness.len(), &a.witness).cmp(&(b.index_sum, b.weight, b.witness.len(), &b.witness))
    });
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LocalityValue {
    /// `S(l)`, together with a longest nonzero word when there is one.
    Exact { value: u32, witness: Option<String> },
    /// Every word up to the budget was evaluated, but larger index sums
    /// were not; `S(l)` is at least `lower`.
    Inconclusive { lower: u32, n_budget: u32 },
}

impl LocalityValue {
    pub fn exact(&self) -> Option<u32> {
        match self {
            LocalityValue::Exact { value, .. } => Some(*value),
            LocalityValue::Inconclusive { .. } => None,
        }
    }
}

fn layer_value<V>(layer: &[WordEntry<V>]) -> (u32, Option<String>) {
    match layer.iter().max_by_key(|e| e.index_sum) {
        Some(e) => (e.index_sum + 1, Some(e.witness.clone())),
        None => (0, None),
    }
}

/// The least `S` such that every word of length `l` with index sum at
/// least `S` vanishes.
pub fn locality_function<A: WordAlgebra>(
    alg: &A,
    gens: &[WordGenerator<A::Value>],
    l: usize,
    n_budget: u32,
) -> Result<LocalityValue> {
    Ok(locality_table(alg, gens, l, n_budget)?.pop().map(|(_, v)| v).unwrap())
}

/// `S(1), ..., S(l_max)` from a single enumeration.
pub fn locality_table<A: WordAlgebra>(
    alg: &A,
    gens: &[WordGenerator<A::Value>],
    l_max: usize,
    n_budget: u32,
) -> Result<Vec<(usize, LocalityValue)>> {
    let limits = EnumerationLimits {
        max_length: l_max.max(1),
        n_budget,
        explicit_n: 0,
    };
    let words = enumerate_words(alg, gens, limits)?;
    // a truncation at some length leaves every longer length undecided
    let mut cut = false;
    let mut out = Vec::new();
    for (i, layer) in words.layers.iter().enumerate() {
        let l = i + 1;
        if i > 0 {
            cut |= truncated_at(alg, &words.layers, l, n_budget);
        }
        let (value, witness) = layer_value(layer);
        out.push((
            l,
            if cut {
                LocalityValue::Inconclusive { lower: value, n_budget }
            } else {
                LocalityValue::Exact { value, witness }
            },
        ));
    }
    Ok(out)
}

fn truncated_at<A: WordAlgebra>(alg: &A, layers: &[Vec<WordEntry<A::Value>>], l: usize, n_budget: u32) -> bool {
    (1..l).any(|l1| {
        layers[l1 - 1].iter().any(|x| {
            layers[l - l1 - 1].iter().any(|y| {
                let bound = alg.product_bound(&x.value, &y.value);
                bound > 0 && x.index_sum + y.index_sum + bound - 1 > n_budget
            })
        })
    })
}

/// Generators of a presentation as word generators (weight from the presentation).
pub fn presentation_generators<S: Scalar>(p: &Presentation<S>) -> Vec<WordGenerator<Element<S>>> {
    p.generators()
        .iter()
        .enumerate()
        .map(|(g, info)| WordGenerator {
            name: info.name.clone(),
            value: Element::generator(g),
            weight: info.weight as i64,
        })
        .collect()
}

/// `1/2 N l (l-1) - l + 1`.
pub fn dong_bound(n: u32, l: usize) -> i64 {
    let (n, l) = (n as i64, l as i64);
    n * l * (l - 1) / 2 - l + 1
}

/// Checks `S(l) <= 1/2 N l (l-1) - l + 1` for `2 <= l <= l_max`. The bound
/// is meaningful for Lie algebras whose generators are pairwise local of
/// order at most `N`; inconclusive values count as violations.
pub fn dong_bound_check<A: WordAlgebra>(
    alg: &A,
    gens: &[WordGenerator<A::Value>],
    n: u32,
    l_max: usize,
    n_budget: u32,
) -> Result<CheckReport> {
    let table = locality_table(alg, gens, l_max, n_budget)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    for (l, value) in table.into_iter().skip(1) {
        checked += 1;
        let bound = dong_bound(n, l).max(0);
        let bad = match &value {
            LocalityValue::Exact { value, .. } => *value as i64 > bound,
            LocalityValue::Inconclusive { .. } => true,
        };
        if bad {
            violations.push(Violation {
                input: format!("l = {l}"),
                lhs: format!("{value:?}"),
                rhs: format!("bound {bound}"),
            });
        }
    }
    Ok(CheckReport::new(
        "dong-bound",
        format!("N = {n}, l <= {l_max}, n_budget = {n_budget}"),
        checked,
        violations,
    ))
}
