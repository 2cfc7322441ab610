//! Enveloping algebras for Lie conformal algebras whose generator words of
//! large weight vanish.
//!
//! Given weights on the generators and a threshold `r` such that every
//! nonzero word has weight `< r`, the pipeline computes:
//!
//! * `P_j`, the span of words of weight exactly `j`;
//! * the filtration `L'_i = sum_{j >= i} sum_{m <= j-i} D^m P_j` and
//!   `deg' a = max {i : a in L'_i}`;
//! * `deg a = sup_n (n + deg' D^n a)` and `L_i = {a : deg a >= i}`;
//! * a k[D]-basis `B` of `L` modulo `T = k[D] L_r` and a basis `C` of `T`;
//! * the quotient `A = U / I` of the preconformal algebra generated by the
//!   series of `L`, where `I` is spanned by words of length at least two
//!   and degree at least `r`.
//!
//! Everything lives in the truncated module `V = span {D^(d) g : d <= N_D}`.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::checks::is_central;
use crate::element::Element;
use crate::envelope::{BasisElement, ConfWord, EnvelopeContext, WExpansion, DEFAULT_STEP_BUDGET};
use crate::error::{ConformalError, Result};
use crate::linalg::{rank, EchelonBasis, SparseVec};
use crate::locality::{enumerate_words, EnumerationLimits, LocalityValue, WordAlgebra, WordEntry, WordGenerator};
use crate::presentation::{Kind, Presentation};
use crate::scalar::{binomial_s, sign, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EmbedBounds {
    /// `N_D`: largest divided power of `D` that is represented.
    pub max_dpow: u32,
    /// Largest total dimension of the pure word spaces.
    pub max_dimension: usize,
    /// Consecutive stable steps required before a degree is accepted.
    pub stabilization: u32,
    pub step_budget: usize,
}

impl Default for EmbedBounds {
    fn default() -> Self {
        Self {
            max_dpow: 8,
            max_dimension: 2000,
            stabilization: 3,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

type Vector<S> = SparseVec<(usize, u32), S>;

fn vector<S: Scalar>(e: &Element<S>) -> Vector<S> {
    e.iter().map(|(g, d, c)| ((g, d), c.clone())).collect()
}

fn element<S: Scalar>(v: &Vector<S>) -> Element<S> {
    Element::from_terms(v.iter().map(|(&(g, d), c)| (g, d, c.clone())))
}

#[derive(Clone, Debug)]
pub struct PureWord<S> {
    pub weight: i64,
    pub value: Element<S>,
    pub witness: String,
}

/// Basis of the span of nonzero words of weight `j`, for all `j < r`,
/// after checking that every word of weight `>= r` vanishes.
pub fn pure_word_spaces<S: Scalar>(p: &Presentation<S>, r: i64, bounds: &EmbedBounds) -> Result<Vec<PureWord<S>>> {
    let mut spaces: BTreeMap<i64, EchelonBasis<(usize, u32), S>> = BTreeMap::new();
    let mut members: Vec<PureWord<S>> = Vec::new();
    let admit = |spaces: &mut BTreeMap<i64, EchelonBasis<(usize, u32), S>>,
                 members: &mut Vec<PureWord<S>>,
                 w: PureWord<S>|
     -> Result<()> {
        if w.weight >= r {
            return Err(ConformalError::HypothesisViolated {
                weight: w.weight,
                witness: format!("{} = {}", w.witness, p.format(&w.value)),
            });
        }
        if spaces.entry(w.weight).or_default().push(&vector(&w.value)) {
            members.push(w);
            if members.len() > bounds.max_dimension {
                return Err(ConformalError::Inconclusive(format!(
                    "more than {} independent pure words",
                    bounds.max_dimension
                )));
            }
        }
        Ok(())
    };
    for (g, info) in p.generators().iter().enumerate() {
        if info.is_torsion() {
            return Err(ConformalError::InfiniteDegree(info.name.clone()));
        }
        let w = PureWord {
            weight: info.weight as i64,
            value: Element::generator(g),
            witness: info.name.clone(),
        };
        admit(&mut spaces, &mut members, w)?;
    }
    let mut next = 0;
    while next < members.len() {
        for j in 0..=next {
            let orders: &[(usize, usize)] = if j == next {
                &[(next, next)]
            } else {
                &[(next, j), (j, next)]
            };
            for &(a, b) in orders {
                let (x, y) = (members[a].clone(), members[b].clone());
                for n in 0..p.product_bound(&x.value, &y.value) {
                    let v = p.product(&x.value, &y.value, n);
                    if v.is_zero() {
                        continue;
                    }
                    let w = PureWord {
                        weight: x.weight + y.weight + n as i64,
                        value: v,
                        witness: format!("({})({n})({})", x.witness, y.witness),
                    };
                    admit(&mut spaces, &mut members, w)?;
                }
            }
        }
        next += 1;
    }
    Ok(members)
}

/// The smallest `r <= r_max` for which every word of weight `>= r` vanishes.
pub fn admissible_threshold<S: Scalar>(p: &Presentation<S>, r_max: i64, bounds: &EmbedBounds) -> Result<Option<i64>> {
    for r in 0..=r_max {
        match pure_word_spaces(p, r, bounds) {
            Ok(_) => return Ok(Some(r)),
            Err(ConformalError::HypothesisViolated { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeRow {
    pub element: String,
    pub deg_prime: i64,
    pub degree: i64,
}

/// Filtrations, degrees and the bases `B` and `C` of a weighted algebra.
#[derive(Clone, Debug)]
pub struct EmbedContext<S> {
    presentation: Presentation<S>,
    r: i64,
    bounds: EmbedBounds,
    pure: Vec<PureWord<S>>,
    /// `L'_i` for `i = r-1, r-2, ..., -N_D`.
    levels: Vec<EchelonBasis<(usize, u32), S>>,
    half: u32,
    b_sets: BTreeMap<i64, Vec<Element<S>>>,
    c_sets: BTreeMap<i64, Vec<Element<S>>>,
}

impl<S: Scalar> EmbedContext<S> {
    pub fn new(mut p: Presentation<S>, weights: Option<&[u32]>, r: i64, bounds: EmbedBounds) -> Result<Self> {
        if p.kind != Kind::Lie {
            return Err(ConformalError::InvalidPresentation(
                "expected a Lie conformal algebra".into(),
            ));
        }
        if let Some(w) = weights {
            if w.len() != p.rank() {
                return Err(ConformalError::InvalidPresentation(format!(
                    "{} weights for {} generators",
                    w.len(),
                    p.rank()
                )));
            }
            p.set_weights(w);
        }
        let pure = pure_word_spaces(&p, r, &bounds)?;
        let mut ctx = Self {
            presentation: p,
            r,
            bounds,
            pure,
            levels: Vec::new(),
            half: bounds.max_dpow / 2,
            b_sets: BTreeMap::new(),
            c_sets: BTreeMap::new(),
        };
        ctx.build_levels();
        ctx.build_bases()?;
        Ok(ctx)
    }

    pub fn presentation(&self) -> &Presentation<S> {
        &self.presentation
    }

    pub fn r(&self) -> i64 {
        self.r
    }

    pub fn bounds(&self) -> &EmbedBounds {
        &self.bounds
    }

    pub fn pure_words(&self) -> &[PureWord<S>] {
        &self.pure
    }

    fn lowest_level(&self) -> i64 {
        -(self.bounds.max_dpow as i64)
    }

    fn build_levels(&mut self) {
        let top = self.r - 1;
        let mut basis = EchelonBasis::new();
        let mut i = top;
        while i >= self.lowest_level() {
            for w in &self.pure {
                if w.weight < i {
                    continue;
                }
                let m = (w.weight - i) as u32;
                let v = self.presentation.apply_derivation(&w.value, m);
                if v.max_dpow().unwrap_or(0) <= self.bounds.max_dpow {
                    basis.push(&vector(&v));
                }
            }
            self.levels.push(basis.clone());
            i -= 1;
        }
    }

    /// `L'_i` (clamped below), or `None` when `i >= r`, where `L'_i = 0`.
    fn level(&self, i: i64) -> Option<&EchelonBasis<(usize, u32), S>> {
        if i >= self.r || self.levels.is_empty() {
            return None;
        }
        let idx = (self.r - 1 - i) as usize;
        Some(&self.levels[idx.min(self.levels.len() - 1)])
    }

    /// `max {i : a in L'_i}`; `None` for zero.
    pub fn deg_prime(&self, a: &Element<S>) -> Result<Option<i64>> {
        if a.is_zero() {
            return Ok(None);
        }
        let v = vector(a);
        let mut i = self.r - 1;
        while i >= self.lowest_level() {
            if self.level(i).is_some_and(|l| l.contains(&v)) {
                return Ok(Some(i));
            }
            i -= 1;
        }
        Err(ConformalError::Inconclusive(format!(
            "{} is outside the represented filtration",
            self.presentation.format(a)
        )))
    }

    /// `sup_n (n + deg' D^n a)`, accepted once it has been stable for the
    /// configured number of steps past `N_D / 2`.
    pub fn degree(&self, a: &Element<S>) -> Result<i64> {
        let name = || self.presentation.format(a);
        if a.is_zero() {
            return Err(ConformalError::InfiniteDegree(name()));
        }
        let top = self.bounds.max_dpow.saturating_sub(a.max_dpow().unwrap_or(0));
        let mut values = Vec::new();
        for n in 0..=top {
            let d = self.presentation.apply_derivation(a, n);
            match self.deg_prime(&d)? {
                None => return Err(ConformalError::InfiniteDegree(name())),
                Some(v) => values.push(n as i64 + v),
            }
        }
        let mut run = 0;
        let mut best = 0;
        for n in (self.half as usize)..values.len().saturating_sub(1) {
            if values[n + 1] == values[n] {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        if best < self.bounds.stabilization {
            return Err(ConformalError::Inconclusive(format!(
                "degree of {} did not stabilize within D-power {}",
                name(),
                self.bounds.max_dpow
            )));
        }
        Ok(*values.last().unwrap())
    }

    /// `deg'` and `deg` of every generator.
    pub fn degree_table(&self) -> Result<Vec<DegreeRow>> {
        (0..self.presentation.rank())
            .map(|g| {
                let e = Element::generator(g);
                Ok(DegreeRow {
                    element: self.presentation.generator(g).name.clone(),
                    deg_prime: self.deg_prime(&e)?.unwrap(),
                    degree: self.degree(&e)?,
                })
            })
            .collect()
    }

    /// `{a : dpow a <= dmax, D^h a in L'_{i-h}}` with `h = N_D / 2`.
    fn piece(&self, i: i64, dmax: u32) -> Vec<Element<S>> {
        let Some(level) = self.level(i - self.half as i64) else {
            return Vec::new();
        };
        let mut coords = Vec::new();
        for g in 0..self.presentation.rank() {
            for d in 0..=dmax {
                coords.push((g, d));
            }
        }
        let mut images = EchelonBasis::new();
        let mut kernel = Vec::new();
        for (k, &(g, d)) in coords.iter().enumerate() {
            let e = Element::term(g, d, S::one());
            let (rem, _) = level.reduce(&vector(&self.presentation.apply_derivation(&e, self.half)));
            if let Some(dep) = images.insert(&rem, k) {
                let mut v: Vector<S> = SparseVec::new();
                v.insert((g, d), S::one());
                for (l, c) in dep {
                    let key = coords[l];
                    let t = v.entry(key).or_insert_with(S::zero);
                    *t = t.clone() - c;
                }
                v.retain(|_, c| !c.is_zero());
                kernel.push(element(&v));
            }
        }
        kernel
    }

    fn build_bases(&mut self) -> Result<()> {
        let top = self.bounds.max_dpow - self.half;
        let p = &self.presentation;
        let quotient_basis = |i: i64| -> Vec<Element<S>> {
            let li = self.piece(i, top);
            let mut span = EchelonBasis::new();
            for a in &li {
                span.push(&vector(a));
            }
            let mut below = EchelonBasis::new();
            for a in self.piece(i + 1, top) {
                below.push(&vector(&a));
            }
            for a in self.piece(i + 1, top.saturating_sub(1)) {
                below.push(&vector(&p.apply_derivation(&a, 1)));
            }
            let gens = (0..p.rank())
                .map(Element::generator)
                .filter(|g| span.contains(&vector(g)));
            let mut picked = Vec::new();
            for c in gens.chain(li.iter().cloned()) {
                if below.push(&vector(&c)) {
                    picked.push(c);
                }
            }
            picked
        };
        for i in -(top as i64)..0 {
            let b = quotient_basis(i);
            if !b.is_empty() {
                return Err(ConformalError::Inconclusive(format!(
                    "nonzero basis piece in negative degree {i}: {}",
                    p.format(&b[0])
                )));
            }
        }
        let mut b_sets = BTreeMap::new();
        for i in 0..self.r {
            let b = quotient_basis(i);
            if !b.is_empty() {
                b_sets.insert(i, b);
            }
        }
        let mut c_sets = BTreeMap::new();
        let mut i = self.r.max(0);
        loop {
            if self.piece(i, top).is_empty() {
                break;
            }
            if i > self.r + self.bounds.max_dpow as i64 {
                return Err(ConformalError::Inconclusive(
                    "torsion ideal filtration does not terminate".into(),
                ));
            }
            let c = quotient_basis(i);
            if !c.is_empty() {
                c_sets.insert(i, c);
            }
            i += 1;
        }
        let n_max = p.max_locality() + self.bounds.max_dpow + 2;
        for c in c_sets.values().flatten() {
            if !is_central(p, c, n_max) {
                return Err(ConformalError::NotCentral(p.format(c)));
            }
        }
        self.b_sets = b_sets;
        self.c_sets = c_sets;
        Ok(())
    }

    /// `B_i` for `0 <= i < r`.
    pub fn basis_b(&self) -> &BTreeMap<i64, Vec<Element<S>>> {
        &self.b_sets
    }

    /// `C_i` for `i >= r`: a k[D]-basis of the torsion ideal `T`.
    pub fn torsion_basis(&self) -> &BTreeMap<i64, Vec<Element<S>>> {
        &self.c_sets
    }

    /// `B` then `C` as letters, generators first within `B`.
    pub fn letter_basis(&self) -> Vec<BasisElement<S>> {
        let p = &self.presentation;
        let name = |e: &Element<S>| match e.iter().collect::<Vec<_>>()[..] {
            [(g, 0, c)] if c.is_one() => p.generator(g).name.clone(),
            _ => format!("[{}]", p.format(e)),
        };
        let mut b: Vec<(i64, &Element<S>)> = self
            .b_sets
            .iter()
            .flat_map(|(&i, v)| v.iter().map(move |e| (i, e)))
            .collect();
        let gen_index = |e: &Element<S>| match e.iter().collect::<Vec<_>>()[..] {
            [(g, 0, c)] if c.is_one() => g,
            _ => usize::MAX,
        };
        b.sort_by_key(|(i, e)| (gen_index(e), *i));
        let c = self.c_sets.iter().flat_map(|(&i, v)| v.iter().map(move |e| (i, e)));
        b.into_iter()
            .map(|x| (x, false))
            .chain(c.map(|x| (x, true)))
            .map(|((i, e), t)| BasisElement {
                name: name(e),
                value: e.clone(),
                degree: i,
                in_torsion_ideal: t,
                d_torsion: false,
            })
            .collect()
    }
}

/// `A = U / I` with the embedding of `L`.
#[derive(Clone, Debug)]
pub struct EnvelopingAlgebra<S> {
    embed: EmbedContext<S>,
    env: EnvelopeContext<S>,
}

pub fn build_enveloping<S: Scalar>(
    p: Presentation<S>,
    weights: Option<&[u32]>,
    r: i64,
    bounds: EmbedBounds,
) -> Result<EnvelopingAlgebra<S>> {
    EnvelopingAlgebra::new(EmbedContext::new(p, weights, r, bounds)?)
}

impl<S: Scalar> EnvelopingAlgebra<S> {
    pub fn new(embed: EmbedContext<S>) -> Result<Self> {
        let mut env = EnvelopeContext::new(embed.presentation.clone(), embed.letter_basis(), embed.bounds.max_dpow)?;
        env.step_budget = embed.bounds.step_budget;
        for g in 0..embed.presentation.rank() {
            env.expand(&Element::generator(g))?;
        }
        Ok(Self { embed, env })
    }

    pub fn context(&self) -> &EmbedContext<S> {
        &self.embed
    }

    pub fn envelope(&self) -> &EnvelopeContext<S> {
        &self.env
    }

    pub fn r(&self) -> i64 {
        self.embed.r
    }

    fn deleted(&self, w: &ConfWord) -> bool {
        w.len() >= 2 && self.env.word_degree(w) >= self.embed.r
    }

    /// Every term is a word of length at least two and degree at least `r`.
    pub fn in_ideal(&self, x: &WExpansion<S>) -> bool {
        x.terms.keys().all(|(_, w)| self.deleted(w))
    }

    pub fn normal_form(&self, x: &WExpansion<S>) -> WExpansion<S> {
        WExpansion {
            terms: x
                .terms
                .iter()
                .filter(|((_, w), _)| !self.deleted(w))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn multiply(&self, x: &WExpansion<S>, y: &WExpansion<S>, n: u32) -> Result<WExpansion<S>> {
        Ok(self.normal_form(&self.env.preconf_product(x, y, n)?))
    }

    /// The image of `a` under `L -> A`.
    pub fn embed(&self, a: &Element<S>) -> Result<WExpansion<S>> {
        Ok(self.normal_form(&self.env.embed_element(a)?))
    }

    pub fn generator_images(&self) -> Result<Vec<WordGenerator<WExpansion<S>>>> {
        let p = &self.embed.presentation;
        (0..p.rank())
            .map(|g| {
                Ok(WordGenerator {
                    name: p.generator(g).name.clone(),
                    value: self.embed(&Element::generator(g))?,
                    weight: p.weight(g) as i64,
                })
            })
            .collect()
    }

    /// `x[n]y = x(n)y - sum_s (-1)^{n+s} D^(s)(y(n+s)x)` in `A`.
    pub fn bracket(&self, x: &WExpansion<S>, y: &WExpansion<S>, n: u32) -> Result<WExpansion<S>> {
        let mut out = self.multiply(x, y, n)?;
        let bound = WordAlgebra::product_bound(self, y, x);
        for s in 0..bound.saturating_sub(n) {
            let t = self.env.derivative(&self.multiply(y, x, n + s)?, s);
            out.add_scaled(&t, &-sign::<S>((n + s) as i64));
        }
        Ok(out)
    }
}

impl<S: Scalar> WordAlgebra for EnvelopingAlgebra<S> {
    type Value = WExpansion<S>;

    fn product(&self, x: &WExpansion<S>, y: &WExpansion<S>, n: u32) -> Result<WExpansion<S>> {
        self.multiply(x, y, n)
    }

    /// Terms of `x(n)y` have length at least two and degree at least
    /// `deg x + deg y + n`, so they lie in `I` once that reaches `r`.
    fn product_bound(&self, x: &WExpansion<S>, y: &WExpansion<S>) -> u32 {
        match (self.env.degree_guarantee(x), self.env.degree_guarantee(y)) {
            (Some(a), Some(b)) => (self.embed.r - a - b).max(0) as u32,
            _ => 0,
        }
    }

    fn is_zero(&self, x: &WExpansion<S>) -> bool {
        x.is_zero()
    }

    fn format(&self, x: &WExpansion<S>) -> String {
        self.env.format_expansion(x)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifyOptions {
    /// Largest word length, and largest D-power in the injectivity check.
    pub window: usize,
    /// Products are computed for all `n` below this, even past the bound.
    pub explicit_n: u32,
    /// Largest `m`, `n` in the associativity check on `A`.
    pub assoc_max: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            window: 4,
            explicit_n: 3,
            assoc_max: 2,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SubCheck {
    pub checked: usize,
    pub violations: Vec<String>,
    pub pass: bool,
}

impl SubCheck {
    fn new(checked: usize, violations: Vec<String>) -> Self {
        let pass = violations.is_empty();
        Self {
            checked,
            violations,
            pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisSummary {
    pub name: String,
    pub degree: i64,
    pub torsion_ideal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NilpotencyCheck {
    /// Least `k` such that all words of length `k..=window` vanish in `L`.
    pub index_in_l: Option<usize>,
    pub check: SubCheck,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalityBoundCheck {
    pub bound: i64,
    pub values: Vec<(usize, LocalityValue)>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbedReport {
    pub r: i64,
    pub weights: Vec<u32>,
    pub options: VerifyOptions,
    pub basis: Vec<BasisSummary>,
    /// Images of `D^(n) b`, `n <= window`, are linearly independent.
    pub injectivity: SubCheck,
    /// Generator words of weight `>= r` vanish in `A`.
    pub weight_words: SubCheck,
    pub nilpotency: NilpotencyCheck,
    /// `S_A(l) <= r` when all weights are zero.
    pub locality_bound: Option<LocalityBoundCheck>,
    /// Commutator brackets of embedded generators compared with the
    /// products in `L`. Reported separately and not part of `pass`: words
    /// like `a(0)b` and `b(0)a` are independent of degree below `r`, so the
    /// quotient by `I` alone does not identify `a[0]b` with its value in `L`.
    pub brackets: SubCheck,
    pub associativity: SubCheck,
    pub timing_ms: BTreeMap<String, u128>,
    pub pass: bool,
}

fn nonzero_words<V>(layers: &[Vec<WordEntry<V>>], from: usize) -> impl Iterator<Item = &WordEntry<V>> {
    layers.iter().skip(from.saturating_sub(1)).flatten()
}

pub fn verify_embedding<S: Scalar>(alg: &EnvelopingAlgebra<S>, opts: VerifyOptions) -> Result<EmbedReport> {
    let mut timing = BTreeMap::new();
    let p = &alg.embed.presentation;
    let env = &alg.env;
    let r = alg.r();

    let t = Instant::now();
    let mut images = Vec::new();
    let mut inj_violations = Vec::new();
    for b in env.basis() {
        for n in 0..=opts.window as u32 {
            let a = p.apply_derivation(&b.value, n);
            if a.max_dpow().unwrap_or(0) > alg.embed.bounds.max_dpow {
                continue;
            }
            let img = alg.embed(&a)?;
            if img.is_zero() {
                inj_violations.push(format!("D^({n}){} maps to 0", b.name));
            }
            images.push(img.as_vector());
        }
    }
    let rk = rank(&images);
    if rk != images.len() {
        inj_violations.push(format!("rank {rk} < {}", images.len()));
    }
    let injectivity = SubCheck::new(images.len(), inj_violations);
    timing.insert("injectivity".into(), t.elapsed().as_millis());

    let t = Instant::now();
    let gens = alg.generator_images()?;
    let limits = EnumerationLimits {
        max_length: opts.window,
        n_budget: u32::MAX / 2,
        explicit_n: opts.explicit_n,
    };
    let words_a = enumerate_words(alg, &gens, limits)?;
    let weight_violations: Vec<String> = nonzero_words(&words_a.layers, 1)
        .filter(|e| e.weight >= r)
        .map(|e| format!("{} (weight {}) = {}", e.witness, e.weight, alg.format(&e.value)))
        .collect();
    let weight_words = SubCheck::new(words_a.evaluated, weight_violations);
    timing.insert("weight_words".into(), t.elapsed().as_millis());

    let t = Instant::now();
    let l_gens = crate::locality::presentation_generators(p);
    let words_l = enumerate_words(
        p,
        &l_gens,
        EnumerationLimits {
            explicit_n: 0,
            ..limits
        },
    )?;
    let index_in_l = (1..=opts.window).find(|&k| words_l.layers[k - 1..].iter().all(Vec::is_empty));
    let nilpotency = match index_in_l {
        Some(k) => {
            let v = nonzero_words(&words_a.layers, k)
                .map(|e| format!("{} = {}", e.witness, alg.format(&e.value)))
                .collect();
            NilpotencyCheck {
                index_in_l,
                check: SubCheck::new(
                    words_a.layers[k - 1..].iter().map(Vec::len).sum::<usize>() + words_a.evaluated,
                    v,
                ),
            }
        }
        None => NilpotencyCheck {
            index_in_l,
            check: SubCheck::new(0, Vec::new()),
        },
    };
    timing.insert("nilpotency".into(), t.elapsed().as_millis());

    let locality_bound = (0..p.rank()).all(|g| p.weight(g) == 0).then(|| {
        let values: Vec<_> = words_a
            .layers
            .iter()
            .enumerate()
            .map(|(i, layer)| {
                let top = layer.iter().max_by_key(|e| e.index_sum);
                (
                    i + 1,
                    LocalityValue::Exact {
                        value: top.map_or(0, |e| e.index_sum + 1),
                        witness: top.map(|e| e.witness.clone()),
                    },
                )
            })
            .collect();
        let pass = values
            .iter()
            .all(|(_, v)| v.exact().is_some_and(|s| s as i64 <= r.max(0)));
        LocalityBoundCheck { bound: r, values, pass }
    });

    let t = Instant::now();
    let mut checked = 0;
    let mut bracket_violations = Vec::new();
    for (g, x) in gens.iter().enumerate() {
        for (h, y) in gens.iter().enumerate() {
            let (eg, eh) = (Element::generator(g), Element::generator(h));
            for n in 0..=p.product_bound(&eg, &eh) {
                checked += 1;
                let lhs = alg.bracket(&x.value, &y.value, n)?;
                let rhs = alg.embed(&p.product(&eg, &eh, n))?;
                if lhs != rhs {
                    bracket_violations.push(format!(
                        "{}[{n}]{}: {} != {}",
                        x.name,
                        y.name,
                        alg.format(&lhs),
                        alg.format(&rhs)
                    ));
                }
            }
        }
    }
    let brackets = SubCheck::new(checked, bracket_violations);
    timing.insert("brackets".into(), t.elapsed().as_millis());

    let t = Instant::now();
    let mut checked = 0;
    let mut assoc_violations = Vec::new();
    for a in &gens {
        for b in &gens {
            for c in &gens {
                for m in 0..=opts.assoc_max {
                    for n in 0..=opts.assoc_max {
                        checked += 1;
                        let lhs = alg.multiply(&alg.multiply(&a.value, &b.value, m)?, &c.value, n)?;
                        let mut rhs = WExpansion::zero();
                        for s in 0..=m {
                            let inner = alg.multiply(&b.value, &c.value, n + s)?;
                            let f = sign::<S>(s as i64) * binomial_s::<S>(m as i64, s);
                            rhs.add_scaled(&alg.multiply(&a.value, &inner, m - s)?, &f);
                        }
                        if lhs != rhs {
                            assoc_violations.push(format!("({}({m}){})({n}){}", a.name, b.name, c.name));
                        }
                    }
                }
            }
        }
    }
    let associativity = SubCheck::new(checked, assoc_violations);
    timing.insert("associativity".into(), t.elapsed().as_millis());

    let pass = injectivity.pass
        && weight_words.pass
        && nilpotency.check.pass
        && locality_bound.as_ref().is_none_or(|c| c.pass)
        && associativity.pass;
    Ok(EmbedReport {
        r,
        weights: (0..p.rank()).map(|g| p.weight(g)).collect(),
        options: opts,
        basis: env
            .basis()
            .iter()
            .map(|b| BasisSummary {
                name: b.name.clone(),
                degree: b.degree,
                torsion_ideal: b.in_torsion_ideal,
            })
            .collect(),
        injectivity,
        weight_words,
        nilpotency,
        locality_bound,
        brackets,
        associativity,
        timing_ms: timing,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{builtin, loop_algebra};
    use crate::presentation::GeneratorInfo;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn loop_of(name: &str) -> Presentation<Rational> {
        loop_algebra(&builtin(name).unwrap()).unwrap()
    }

    /// `a(0)b = Du`, `b(0)a = -Du`, `u` central.
    fn derivative_center() -> Presentation<Rational> {
        let gens = ["a", "b", "u"].map(GeneratorInfo::free).to_vec();
        let mut p = Presentation::new(Kind::Lie, gens).unwrap();
        p.set_locality(0, 1, 1);
        p.set_locality(1, 0, 1);
        p.set_product(0, 1, 0, Element::term(2, 1, q(1)));
        p.set_product(1, 0, 0, Element::term(2, 1, q(-1)));
        p
    }

    #[test]
    fn abelian_rank_one() {
        let p = loop_of("abelian:1");
        let ctx = EmbedContext::new(p, Some(&[1]), 2, EmbedBounds::default()).unwrap();
        let row = &ctx.degree_table().unwrap()[0];
        assert_eq!((row.deg_prime, row.degree), (1, 1));
        assert_eq!(ctx.basis_b().keys().copied().collect::<Vec<_>>(), vec![1]);
        assert!(ctx.torsion_basis().is_empty());
    }

    #[test]
    fn heis_weight_zero_degrees() {
        let ctx = EmbedContext::new(loop_of("heis3"), Some(&[0, 0, 0]), 1, EmbedBounds::default()).unwrap();
        for row in ctx.degree_table().unwrap() {
            assert_eq!((row.deg_prime, row.degree), (0, 0));
        }
        assert_eq!(ctx.basis_b()[&0].len(), 3);
        assert!(ctx.torsion_basis().is_empty());
    }

    #[test]
    fn derivative_lowers_degree_by_one() {
        let ctx = EmbedContext::new(loop_of("heis3"), Some(&[1, 1, 1]), 3, EmbedBounds::default()).unwrap();
        let p = ctx.presentation().clone();
        for g in 0..3 {
            let e = Element::generator(g);
            assert_eq!(
                ctx.degree(&p.apply_derivation(&e, 1)).unwrap(),
                ctx.degree(&e).unwrap() - 1
            );
        }
        // z is a product of weight 2
        assert_eq!(ctx.degree(&p.gen("z")).unwrap(), 2);
    }

    #[test]
    fn hypothesis_violation_names_a_word() {
        let err = EmbedContext::new(loop_of("sl2"), Some(&[1, 1, 1]), 3, EmbedBounds::default()).unwrap_err();
        assert!(matches!(err, ConformalError::HypothesisViolated { weight, .. } if weight >= 3));
        let err = EmbedContext::new(loop_of("sl2"), None, 0, EmbedBounds::default()).unwrap_err();
        assert!(matches!(err, ConformalError::HypothesisViolated { weight: 0, .. }));
    }

    #[test]
    fn admissible_thresholds() {
        let mut sl2 = loop_of("sl2");
        assert_eq!(admissible_threshold(&sl2, 6, &EmbedBounds::default()).unwrap(), Some(1));
        sl2.set_all_weights(1);
        assert_eq!(admissible_threshold(&sl2, 6, &EmbedBounds::default()).unwrap(), None);
        let mut heis = loop_of("heis3");
        heis.set_all_weights(1);
        assert_eq!(
            admissible_threshold(&heis, 6, &EmbedBounds::default()).unwrap(),
            Some(3)
        );
    }

    #[test]
    fn degrees_are_superadditive_on_products() {
        let ctx = EmbedContext::new(derivative_center(), Some(&[1, 1, 0]), 3, EmbedBounds::default()).unwrap();
        let p = ctx.presentation().clone();
        for g in 0..3 {
            for h in 0..3 {
                let (a, b) = (Element::generator(g), Element::generator(h));
                for n in 0..p.product_bound(&a, &b) {
                    let c = p.product(&a, &b, n);
                    if !c.is_zero() {
                        let lhs = ctx.deg_prime(&c).unwrap().unwrap();
                        let rhs = ctx.deg_prime(&a).unwrap().unwrap() + ctx.deg_prime(&b).unwrap().unwrap() + n as i64;
                        assert!(lhs >= rhs);
                        assert!(
                            ctx.degree(&c).unwrap() >= ctx.degree(&a).unwrap() + ctx.degree(&b).unwrap() + n as i64
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn derivative_center_has_torsion_ideal() {
        let ctx = EmbedContext::new(derivative_center(), Some(&[1, 1, 0]), 3, EmbedBounds::default()).unwrap();
        assert_eq!(ctx.degree(&Element::generator(2)).unwrap(), 3);
        let c = ctx.torsion_basis();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&3], vec![Element::generator(2)]);
        assert_eq!(ctx.basis_b()[&1].len(), 2);
        let alg = EnvelopingAlgebra::new(ctx).unwrap();
        let report = verify_embedding(&alg, VerifyOptions::default()).unwrap();
        assert!(report.pass, "{report:#?}");
    }

    #[test]
    fn ideal_membership() {
        let alg = build_enveloping(loop_of("abelian:1"), Some(&[1]), 2, EmbedBounds::default()).unwrap();
        let g = WExpansion::word(ConfWord::single(0));
        assert!(!alg.in_ideal(&g));
        let w = WExpansion::word(ConfWord {
            prefix: vec![(0, 0)],
            last: 0,
        });
        assert!(alg.in_ideal(&w));
        assert!(alg.multiply(&g, &g, 0).unwrap().is_zero());
    }

    #[test]
    fn heis_weight_one_is_nilpotent_of_index_three() {
        let alg = build_enveloping(loop_of("heis3"), Some(&[1, 1, 1]), 3, EmbedBounds::default()).unwrap();
        let report = verify_embedding(&alg, VerifyOptions::default()).unwrap();
        assert_eq!(report.nilpotency.index_in_l, Some(3));
        assert!(report.pass, "{report:#?}");
    }

    #[test]
    fn sl2_weight_zero_bounded_locality() {
        let alg = build_enveloping(loop_of("sl2"), Some(&[0, 0, 0]), 1, EmbedBounds::default()).unwrap();
        let report = verify_embedding(&alg, VerifyOptions::default()).unwrap();
        assert!(report.locality_bound.as_ref().unwrap().pass);
        assert!(report.pass, "{report:#?}");
    }

    #[test]
    fn commutator_in_quotient_keeps_both_orderings() {
        // e[0]f = e(0)f - f(0)e in A: the tail D^(s)(f(s)e), s >= 1, lies in I,
        // while e(0)f and f(0)e are independent words of degree 0 < r.
        let alg = build_enveloping(loop_of("sl2"), Some(&[0, 0, 0]), 1, EmbedBounds::default()).unwrap();
        let (e, f) = (
            alg.embed(&Element::generator(0)).unwrap(),
            alg.embed(&Element::generator(1)).unwrap(),
        );
        let mut expected = WExpansion::zero();
        expected.add_term(
            0,
            ConfWord {
                prefix: vec![(0, 0)],
                last: 1,
            },
            q(1),
        );
        expected.add_term(
            0,
            ConfWord {
                prefix: vec![(1, 0)],
                last: 0,
            },
            q(-1),
        );
        assert_eq!(alg.bracket(&e, &f, 0).unwrap(), expected);
        let report = verify_embedding(&alg, VerifyOptions::default()).unwrap();
        assert_eq!(report.brackets.violations.len(), 6);
    }

    #[test]
    fn zero_algebra_is_vacuous() {
        let p = Presentation::<Rational>::new(Kind::Lie, Vec::new()).unwrap();
        let alg = build_enveloping(p, None, 1, EmbedBounds::default()).unwrap();
        assert!(verify_embedding(&alg, VerifyOptions::default()).unwrap().pass);
    }
}
