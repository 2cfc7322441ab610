//! The universal enveloping algebra `U(L)` of the coefficient Lie algebra,
//! PBW normal forms, and the associative preconformal algebra generated by
//! the series of `L` inside `U[[z, z^-1]]`.
//!
//! Letters are indexed by a k[D]-basis of the Lie conformal algebra (the
//! basis `B`, followed by the basis `C` of the torsion ideal when there is
//! one). Elements of the preconformal algebra are kept intensionally as
//! expansions `sum k D^(n) w` over right-normed words `w`; their coefficients
//! in `U` are computed on demand.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::checks::{CheckReport, Violation};
use crate::coeff::shifted_letter;
use crate::element::Element;
use crate::error::{ConformalError, Result};
use crate::linalg::{EchelonBasis, SparseVec};
use crate::presentation::{Kind, Presentation};
use crate::scalar::{binomial_s, sign, Scalar};

pub const DEFAULT_STEP_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisElement<S> {
    pub name: String,
    pub value: Element<S>,
    pub degree: i64,
    /// Member of the basis `C` of the torsion ideal.
    pub in_torsion_ideal: bool,
    /// `D` kills it.
    pub d_torsion: bool,
}

/// A letter `b(n)`. The derived order is `a(m) < b(n)` iff `m < n`, or
/// `m = n` and `a` precedes `b` in the basis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub index: i64,
    pub basis: usize,
}

impl Letter {
    pub fn new(basis: usize, index: i64) -> Self {
        Self { index, basis }
    }
}

pub type PbwMonomial = Vec<Letter>;

/// Order on PBW monomials: by length, then letter by letter from the right.
pub fn pbw_cmp(u: &[Letter], v: &[Letter]) -> Ordering {
    u.len().cmp(&v.len()).then_with(|| {
        for (a, b) in u.iter().rev().zip(v.iter().rev()) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}

/// An element of `U(L)` in PBW form: nonincreasing monomials.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UElement<S> {
    pub terms: BTreeMap<PbwMonomial, S>,
}

impl<S: Scalar> UElement<S> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn monomial(m: PbwMonomial, c: S) -> Self {
        let mut u = Self::zero();
        u.add_term(m, c);
        u
    }

    pub fn add_term(&mut self, m: PbwMonomial, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(t) => {
                *t = t.clone() + c;
                if t.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, f: &S) {
        if f.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone() * f.clone());
        }
    }

    pub fn max_len(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// The minimal monomial among those of maximal length.
    pub fn leading_monomial(&self) -> Option<&PbwMonomial> {
        let l = self.max_len();
        self.terms.keys().filter(|m| m.len() == l).min_by(|a, b| pbw_cmp(a, b))
    }

    pub fn as_vector(&self) -> SparseVec<PbwMonomial, S> {
        self.terms.clone()
    }
}

/// Right-normed word `b1(n1)(b2(n2)( ... (b_{l-1}(n_{l-1}) b_l)))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfWord {
    /// `(b_i, n_i)` for `i < l`.
    pub prefix: Vec<(usize, u32)>,
    pub last: usize,
}

impl ConfWord {
    pub fn single(b: usize) -> Self {
        Self {
            prefix: Vec::new(),
            last: b,
        }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn letter(&self, i: usize) -> Letter {
        let (b, n) = self.prefix[i];
        Letter::new(b, n as i64)
    }

    /// The ordering constraint `b_i(n_i) >= b_{i+1}(n_{i+1})` for `i <= l-2`.
    pub fn is_normal(&self) -> bool {
        (1..self.prefix.len()).all(|i| self.letter(i - 1) >= self.letter(i))
    }

    fn tail(&self) -> ConfWord {
        ConfWord {
            prefix: self.prefix[1..].to_vec(),
            last: self.last,
        }
    }

    fn prepend(&self, b: usize, n: u32) -> ConfWord {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push((b, n));
        prefix.extend_from_slice(&self.prefix);
        ConfWord {
            prefix,
            last: self.last,
        }
    }

    pub fn index_sum(&self) -> u64 {
        self.prefix.iter().map(|&(_, n)| n as u64).sum()
    }

    pub fn basis_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.prefix.iter().map(|&(b, _)| b).chain(std::iter::once(self.last))
    }

    pub fn to_expr<S: Scalar>(&self) -> ConfExpr<S> {
        let mut e = ConfExpr::Basis(self.last);
        for &(b, n) in self.prefix.iter().rev() {
            e = ConfExpr::product(ConfExpr::Basis(b), n, e);
        }
        e
    }
}

/// Conformal expressions with arbitrary parenthesization and derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfExpr<S> {
    /// An element of the Lie conformal algebra, in presentation generators.
    Leaf(Element<S>),
    /// A basis element of the context.
    Basis(usize),
    Product(Box<ConfExpr<S>>, u32, Box<ConfExpr<S>>),
    /// `D^(k)` applied.
    Derivative(u32, Box<ConfExpr<S>>),
}

impl<S: Scalar> ConfExpr<S> {
    pub fn product(a: ConfExpr<S>, n: u32, b: ConfExpr<S>) -> Self {
        ConfExpr::Product(Box::new(a), n, Box::new(b))
    }

    pub fn derivative(k: u32, a: ConfExpr<S>) -> Self {
        ConfExpr::Derivative(k, Box::new(a))
    }
}

/// An element of the preconformal algebra: `sum k D^(n) w` over words `w`.
/// Words containing a letter of the torsion-ideal basis form the `N`-part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct WExpansion<S> {
    pub terms: BTreeMap<(u32, ConfWord), S>,
}

impl<S: Scalar> WExpansion<S> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn word(w: ConfWord) -> Self {
        let mut x = Self::zero();
        x.add_term(0, w, S::one());
        x
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, dpow: u32, w: ConfWord, c: S) {
        if c.is_zero() {
            return;
        }
        let key = (dpow, w);
        match self.terms.get_mut(&key) {
            Some(t) => {
                *t = t.clone() + c;
                if t.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, f: &S) {
        if f.is_zero() {
            return;
        }
        for ((d, w), c) in &other.terms {
            self.add_term(*d, w.clone(), c.clone() * f.clone());
        }
    }

    pub fn scaled(&self, f: &S) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, f);
        out
    }

    pub fn all_normal(&self) -> bool {
        self.terms.keys().all(|(_, w)| w.is_normal())
    }

    pub fn as_vector(&self) -> SparseVec<(u32, ConfWord), S> {
        self.terms.clone()
    }
}

/// Coefficients over the basis columns `D^(j) b`.
type Expansion<S> = Vec<(usize, u32, S)>;

/// Immutable data for computing in `U(L)` and in the preconformal algebra.
#[derive(Clone, Debug)]
pub struct EnvelopeContext<S> {
    presentation: Presentation<S>,
    basis: Vec<BasisElement<S>>,
    max_dpow: u32,
    columns: Vec<(usize, u32)>,
    expander: EchelonBasis<(usize, u32), S>,
    /// `b[s]b'` expanded over the basis, for `s` below the product bound.
    brackets: HashMap<(usize, usize), Vec<Expansion<S>>>,
    pub step_budget: usize,
}

fn element_vector<S: Scalar>(e: &Element<S>) -> SparseVec<(usize, u32), S> {
    e.iter().map(|(g, d, c)| ((g, d), c.clone())).collect()
}

impl<S: Scalar> EnvelopeContext<S> {
    /// `basis` must be a k[D]-basis of the algebra; expansions are solved in
    /// the span of `D^(j) b` with divided powers up to `max_dpow`.
    pub fn new(presentation: Presentation<S>, basis: Vec<BasisElement<S>>, max_dpow: u32) -> Result<Self> {
        if presentation.kind != Kind::Lie {
            return Err(ConformalError::InvalidPresentation(
                "the enveloping construction needs a Lie conformal algebra".into(),
            ));
        }
        let mut expander = EchelonBasis::new();
        let mut columns = Vec::new();
        for (i, b) in basis.iter().enumerate() {
            let top = b.value.max_dpow().unwrap_or(0);
            let j_max = if b.d_torsion { 0 } else { max_dpow.saturating_sub(top) };
            for j in 0..=j_max {
                let v = element_vector(&presentation.apply_derivation(&b.value, j));
                if expander.insert(&v, columns.len()).is_some() {
                    return Err(ConformalError::InvalidPresentation(format!(
                        "basis is not k[D]-independent at D^({j}){}",
                        b.name
                    )));
                }
                columns.push((i, j));
            }
        }
        let mut ctx = Self {
            presentation,
            basis,
            max_dpow,
            columns,
            expander,
            brackets: HashMap::new(),
            step_budget: DEFAULT_STEP_BUDGET,
        };
        let mut brackets = HashMap::new();
        for a in 0..ctx.basis.len() {
            for b in 0..ctx.basis.len() {
                let (va, vb) = (&ctx.basis[a].value, &ctx.basis[b].value);
                let bound = ctx.presentation.product_bound(va, vb);
                let mut table = Vec::new();
                for s in 0..bound {
                    table.push(ctx.expand(&ctx.presentation.product(va, vb, s))?);
                }
                while table.last().is_some_and(|t: &Vec<_>| t.is_empty()) {
                    table.pop();
                }
                if !table.is_empty() {
                    brackets.insert((a, b), table);
                }
            }
        }
        ctx.brackets = brackets;
        Ok(ctx)
    }

    /// Uses the presentation generators themselves as the basis, with degrees
    /// equal to the generator weights.
    pub fn from_generators(presentation: Presentation<S>) -> Result<Self> {
        let basis = presentation
            .generators()
            .iter()
            .enumerate()
            .map(|(g, info)| BasisElement {
                name: info.name.clone(),
                value: Element::generator(g),
                degree: info.weight as i64,
                in_torsion_ideal: false,
                d_torsion: info.is_torsion(),
            })
            .collect();
        Self::new(presentation, basis, 16)
    }

    pub fn presentation(&self) -> &Presentation<S> {
        &self.presentation
    }

    pub fn basis(&self) -> &[BasisElement<S>] {
        &self.basis
    }

    pub fn max_dpow(&self) -> u32 {
        self.max_dpow
    }

    fn has_d_torsion(&self) -> bool {
        self.basis.iter().any(|b| b.d_torsion)
    }

    /// `a = sum k D^(j) b` over the basis.
    pub fn expand(&self, a: &Element<S>) -> Result<Vec<(usize, u32, S)>> {
        let combo = self
            .expander
            .express(&element_vector(a))
            .ok_or_else(|| ConformalError::NotInSpan(self.presentation.format(a)))?;
        Ok(combo
            .into_iter()
            .map(|(label, c)| {
                let (b, j) = self.columns[label];
                (b, j, c)
            })
            .collect())
    }

    /// Value in the algebra of an expansion `sum k D^(j) b`.
    pub fn evaluate(&self, terms: &[(usize, u32, S)]) -> Element<S> {
        let mut out = Element::zero();
        for (b, j, c) in terms {
            out.add_scaled(&self.presentation.apply_derivation(&self.basis[*b].value, *j), c);
        }
        out
    }

    pub fn word_degree(&self, w: &ConfWord) -> i64 {
        w.basis_elements().map(|b| self.basis[b].degree).sum::<i64>() + w.index_sum() as i64
    }

    pub fn in_n_part(&self, w: &ConfWord) -> bool {
        w.basis_elements().any(|b| self.basis[b].in_torsion_ideal)
    }

    /// Least `deg w - n` over the terms, or `None` for zero.
    pub fn degree_guarantee(&self, x: &WExpansion<S>) -> Option<i64> {
        x.terms.keys().map(|(n, w)| self.word_degree(w) - *n as i64).min()
    }

    pub fn format_letter(&self, l: Letter) -> String {
        format!("{}({})", self.basis[l.basis].name, l.index)
    }

    pub fn format_word(&self, w: &ConfWord) -> String {
        let mut s = String::new();
        for &(b, n) in &w.prefix {
            let _ = write!(s, "{}({n})(", self.basis[b].name);
        }
        s.push_str(&self.basis[w.last].name);
        for _ in &w.prefix {
            s.push(')');
        }
        s
    }

    pub fn format_expansion(&self, x: &WExpansion<S>) -> String {
        if x.is_zero() {
            return "0".into();
        }
        x.terms
            .iter()
            .map(|((n, w), c)| {
                let d = if *n > 0 { format!("D^({n})") } else { String::new() };
                format!("({c})*{d}{}", self.format_word(w))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn format_u(&self, u: &UElement<S>) -> String {
        if u.is_zero() {
            return "0".into();
        }
        u.terms
            .iter()
            .map(|(m, c)| {
                let letters: Vec<_> = m.iter().map(|&l| self.format_letter(l)).collect();
                format!("({c})*{}", letters.join(""))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    // ---- U(L) ----

    /// A letter after the torsion rule, or `None` when it vanishes.
    pub fn reduce_letter(&self, l: Letter) -> Option<Letter> {
        (!self.basis[l.basis].d_torsion || l.index == -1).then_some(l)
    }

    /// `[a(m), b(n)] = sum_s binom(m, s) (a[s]b)(m+n-s)` as letters.
    pub fn letter_bracket(&self, x: Letter, y: Letter) -> Vec<(Letter, S)> {
        let mut out: BTreeMap<Letter, S> = BTreeMap::new();
        let Some(table) = self.brackets.get(&(x.basis, y.basis)) else {
            return Vec::new();
        };
        for (s, terms) in table.iter().enumerate() {
            let f = binomial_s::<S>(x.index, s as u32);
            if f.is_zero() {
                continue;
            }
            let p = x.index + y.index - s as i64;
            for (b, j, c) in terms {
                if let Some((idx, g)) = shifted_letter::<S>(*j, p, self.basis[*b].d_torsion) {
                    let v = f.clone() * g * c.clone();
                    let e = out.entry(Letter::new(*b, idx)).or_insert_with(S::zero);
                    *e = e.clone() + v;
                }
            }
        }
        out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// PBW normal form of a word of letters.
    pub fn pbw_normal_form(&self, word: &[Letter]) -> UElement<S> {
        let mut pending: BTreeMap<PbwMonomial, S> = BTreeMap::new();
        let mut out = UElement::zero();
        let push = |pending: &mut BTreeMap<PbwMonomial, S>, w: PbwMonomial, c: S| {
            if c.is_zero() {
                return;
            }
            let e = pending.entry(w.clone()).or_insert_with(S::zero);
            *e = e.clone() + c;
            if e.is_zero() {
                pending.remove(&w);
            }
        };
        push(&mut pending, word.to_vec(), S::one());
        while let Some((w, c)) = pending.pop_last() {
            if w.iter().any(|&l| self.reduce_letter(l).is_none()) {
                continue;
            }
            match (1..w.len()).find(|&i| w[i - 1] < w[i]) {
                None => out.add_term(w, c),
                Some(i) => {
                    let mut swapped = w.clone();
                    swapped.swap(i - 1, i);
                    push(&mut pending, swapped, c.clone());
                    for (l, f) in self.letter_bracket(w[i - 1], w[i]) {
                        let mut shorter = Vec::with_capacity(w.len() - 1);
                        shorter.extend_from_slice(&w[..i - 1]);
                        shorter.push(l);
                        shorter.extend_from_slice(&w[i + 1..]);
                        push(&mut pending, shorter, c.clone() * f);
                    }
                }
            }
        }
        out
    }

    pub fn multiply(&self, x: &UElement<S>, y: &UElement<S>) -> UElement<S> {
        let mut out = UElement::zero();
        for (mx, cx) in &x.terms {
            for (my, cy) in &y.terms {
                let mut w = mx.clone();
                w.extend_from_slice(my);
                out.add_scaled(&self.pbw_normal_form(&w), &(cx.clone() * cy.clone()));
            }
        }
        out
    }

    fn letter_u(&self, b: usize, index: i64) -> UElement<S> {
        match self.reduce_letter(Letter::new(b, index)) {
            Some(l) => UElement::monomial(vec![l], S::one()),
            None => UElement::zero(),
        }
    }

    /// Coefficient `k` of the series of an expression, computed directly by
    /// `(x(n)y)(k) = sum_s (-1)^s binom(n, s) x(n-s) y(k+s)` in `U(L)`.
    pub fn series_coefficient(&self, expr: &ConfExpr<S>, k: i64) -> Result<UElement<S>> {
        Ok(match expr {
            ConfExpr::Basis(b) => self.letter_u(*b, k),
            ConfExpr::Leaf(a) => {
                let mut out = UElement::zero();
                for (b, j, c) in self.expand(a)? {
                    if let Some((idx, f)) = shifted_letter::<S>(j, k, self.basis[b].d_torsion) {
                        out.add_scaled(&self.letter_u(b, idx), &(f * c));
                    }
                }
                out
            }
            ConfExpr::Derivative(j, x) => {
                let f = sign::<S>(*j as i64) * binomial_s::<S>(k, *j);
                if f.is_zero() {
                    UElement::zero()
                } else {
                    let mut out = UElement::zero();
                    out.add_scaled(&self.series_coefficient(x, k - *j as i64)?, &f);
                    out
                }
            }
            ConfExpr::Product(x, n, y) => {
                let mut out = UElement::zero();
                for s in 0..=*n {
                    let f = sign::<S>(s as i64) * binomial_s::<S>(*n as i64, s);
                    let left = self.series_coefficient(x, (*n - s) as i64)?;
                    if left.is_zero() {
                        continue;
                    }
                    let right = self.series_coefficient(y, k + s as i64)?;
                    out.add_scaled(&self.multiply(&left, &right), &f);
                }
                out
            }
        })
    }

    /// Coefficient `k` of a right-normed word via the closed multi-sum
    /// `sum_i prod (-1)^{i_j} binom(n_j, i_j) b_1(n_1-i_1) ... b_l(k + i_1 + ... + i_{l-1})`.
    pub fn word_coefficient(&self, w: &ConfWord, k: i64) -> UElement<S> {
        let mut out = UElement::zero();
        let l = w.prefix.len();
        let mut choice = vec![0u32; l];
        loop {
            let mut coeff = S::one();
            let mut letters = Vec::with_capacity(l + 1);
            let mut shift = 0i64;
            for (j, &(b, n)) in w.prefix.iter().enumerate() {
                let i = choice[j];
                coeff = coeff * sign::<S>(i as i64) * binomial_s::<S>(n as i64, i);
                letters.push(Letter::new(b, (n - i) as i64));
                shift += i as i64;
            }
            letters.push(Letter::new(w.last, k + shift));
            out.add_scaled(&self.pbw_normal_form(&letters), &coeff);
            // odometer over 0..=n_j
            let mut j = 0;
            loop {
                if j == l {
                    return out;
                }
                if choice[j] < w.prefix[j].1 {
                    choice[j] += 1;
                    break;
                }
                choice[j] = 0;
                j += 1;
            }
        }
    }

    /// Coefficient `k` of an expansion, through `word_coefficient`.
    pub fn expansion_coefficient(&self, x: &WExpansion<S>, k: i64) -> UElement<S> {
        let mut out = UElement::zero();
        for ((n, w), c) in &x.terms {
            let f = sign::<S>(*n as i64) * binomial_s::<S>(k, *n);
            if f.is_zero() {
                continue;
            }
            out.add_scaled(&self.word_coefficient(w, k - *n as i64), &(f * c.clone()));
        }
        out
    }

    // ---- the preconformal algebra ----

    /// Expansion of an arbitrary expression over right-normed normal words.
    pub fn rewrite_to_w(&self, expr: &ConfExpr<S>) -> Result<WExpansion<S>> {
        Rewriter::new(self)?.expr(expr)
    }

    /// `x(n)y` in the preconformal algebra.
    pub fn preconf_product(&self, x: &WExpansion<S>, y: &WExpansion<S>, n: u32) -> Result<WExpansion<S>> {
        Rewriter::new(self)?.product(x, y, n)
    }

    pub fn derivative(&self, x: &WExpansion<S>, k: u32) -> WExpansion<S> {
        derive(x, k)
    }

    /// The image of an element of the Lie conformal algebra: its basis
    /// expansion, as length-one words.
    pub fn embed_element(&self, a: &Element<S>) -> Result<WExpansion<S>> {
        let mut out = WExpansion::zero();
        for (b, j, c) in self.expand(a)? {
            out.add_term(j, ConfWord::single(b), c);
        }
        Ok(out)
    }
}

/// `a(m)(b(n)c) - b(n)(a(m)c) = sum_s binom(m, s) (a[s]b)(m+n-s) c` on basis
/// triples, compared coefficientwise in `U(L)` for `|k| <= window`.
pub fn check_adconf<S: Scalar>(ctx: &EnvelopeContext<S>, m_max: u32, n_max: u32, window: i64) -> Result<CheckReport> {
    let nb = ctx.basis().len();
    let p = ctx.presentation();
    let mut checked = 0;
    let mut violations = Vec::new();
    for a in 0..nb {
        for b in 0..nb {
            for c in 0..nb {
                let (ea, eb, ec) = (ConfExpr::Basis(a), ConfExpr::Basis(b), ConfExpr::<S>::Basis(c));
                let (va, vb) = (&ctx.basis[a].value, &ctx.basis[b].value);
                for m in 0..=m_max {
                    for n in 0..=n_max {
                        let lhs1 = ConfExpr::product(ea.clone(), m, ConfExpr::product(eb.clone(), n, ec.clone()));
                        let lhs2 = ConfExpr::product(eb.clone(), n, ConfExpr::product(ea.clone(), m, ec.clone()));
                        let mut terms = Vec::new();
                        for s in 0..p.product_bound(va, vb).min(m + 1) {
                            let ab = p.product(va, vb, s);
                            if !ab.is_zero() {
                                terms.push((
                                    binomial_s::<S>(m as i64, s),
                                    ConfExpr::product(ConfExpr::Leaf(ab), m + n - s, ec.clone()),
                                ));
                            }
                        }
                        for k in -window..=window {
                            checked += 1;
                            let mut lhs = ctx.series_coefficient(&lhs1, k)?;
                            lhs.add_scaled(&ctx.series_coefficient(&lhs2, k)?, &-S::one());
                            let mut rhs = UElement::zero();
                            for (f, t) in &terms {
                                rhs.add_scaled(&ctx.series_coefficient(t, k)?, f);
                            }
                            if lhs != rhs {
                                violations.push(Violation {
                                    input: format!(
                                        "a={}, b={}, c={}, m={m}, n={n}, k={k}",
                                        ctx.basis[a].name, ctx.basis[b].name, ctx.basis[c].name
                                    ),
                                    lhs: ctx.format_u(&lhs),
                                    rhs: ctx.format_u(&rhs),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CheckReport::new(
        "adconf",
        format!("m<={m_max}, n<={n_max}, |k|<={window}"),
        checked,
        violations,
    ))
}

fn derive<S: Scalar>(x: &WExpansion<S>, k: u32) -> WExpansion<S> {
    if k == 0 {
        return x.clone();
    }
    let mut out = WExpansion::zero();
    for ((n, w), c) in &x.terms {
        out.add_term(n + k, w.clone(), c.clone() * binomial_s::<S>((n + k) as i64, k));
    }
    out
}

/// One rewriting session: deterministic order, shared memo and step counter.
struct Rewriter<'a, S> {
    ctx: &'a EnvelopeContext<S>,
    steps: Cell<usize>,
    memo: RefCell<HashMap<(usize, u32, ConfWord), WExpansion<S>>>,
}

impl<'a, S: Scalar> Rewriter<'a, S> {
    fn new(ctx: &'a EnvelopeContext<S>) -> Result<Self> {
        if ctx.has_d_torsion() {
            return Err(ConformalError::InvalidPresentation(
                "rewriting into the word basis needs a k[D]-free basis".into(),
            ));
        }
        Ok(Self {
            ctx,
            steps: Cell::new(0),
            memo: RefCell::new(HashMap::new()),
        })
    }

    fn tick(&self) -> Result<()> {
        let s = self.steps.get() + 1;
        self.steps.set(s);
        if s > self.ctx.step_budget {
            return Err(ConformalError::StepBudgetExceeded(self.ctx.step_budget));
        }
        Ok(())
    }

    fn expr(&self, e: &ConfExpr<S>) -> Result<WExpansion<S>> {
        self.tick()?;
        match e {
            ConfExpr::Basis(b) => Ok(WExpansion::word(ConfWord::single(*b))),
            ConfExpr::Leaf(a) => self.ctx.embed_element(a),
            ConfExpr::Derivative(k, x) => Ok(derive(&self.expr(x)?, *k)),
            ConfExpr::Product(x, n, y) => {
                let (x, y) = (self.expr(x)?, self.expr(y)?);
                self.product(&x, &y, *n)
            }
        }
    }

    /// Bilinear extension; `(D^(p) u)(n) v = (-1)^p binom(n, p) u(n-p) v` and
    /// `u(m)(D^(q) v) = sum_s binom(m, s) D^(q-s)(u(m-s) v)`.
    fn product(&self, x: &WExpansion<S>, y: &WExpansion<S>, n: u32) -> Result<WExpansion<S>> {
        let mut out = WExpansion::zero();
        for ((p, u), cu) in &x.terms {
            if *p > n {
                continue;
            }
            let m = n - p;
            let left = sign::<S>(*p as i64) * binomial_s::<S>(n as i64, *p) * cu.clone();
            for ((q, v), cv) in &y.terms {
                let f = left.clone() * cv.clone();
                for s in 0..=m.min(*q) {
                    let t = self.word_product(u, m - s, v)?;
                    out.add_scaled(&derive(&t, q - s), &(f.clone() * binomial_s::<S>(m as i64, s)));
                }
            }
        }
        Ok(out)
    }

    /// `u(m)v` for normal words, by `(a(p)b)(m)c = sum_s (-1)^s binom(p, s) a(p-s)(b(m+s)c)`.
    fn word_product(&self, u: &ConfWord, m: u32, v: &ConfWord) -> Result<WExpansion<S>> {
        self.tick()?;
        if u.prefix.is_empty() {
            return self.insert(u.last, m, v);
        }
        let (b1, n1) = u.prefix[0];
        let rest = u.tail();
        let mut out = WExpansion::zero();
        for s in 0..=n1 {
            let inner = self.word_product(&rest, m + s, v)?;
            let f = sign::<S>(s as i64) * binomial_s::<S>(n1 as i64, s);
            out.add_scaled(&self.left_mul(b1, n1 - s, &inner)?, &f);
        }
        Ok(out)
    }

    /// `b(m) x` for a basis element `b` and an expansion `x`.
    fn left_mul(&self, b: usize, m: u32, x: &WExpansion<S>) -> Result<WExpansion<S>> {
        let mut out = WExpansion::zero();
        for ((q, w), c) in &x.terms {
            for s in 0..=m.min(*q) {
                let t = self.insert(b, m - s, w)?;
                out.add_scaled(&derive(&t, q - s), &(c.clone() * binomial_s::<S>(m as i64, s)));
            }
        }
        Ok(out)
    }

    /// `b(m) w` for a normal word `w`, sorted into normal words with
    /// `a(m)(b(n)c) = b(n)(a(m)c) + sum_s binom(m, s) (a[s]b)(m+n-s) c`.
    fn insert(&self, b: usize, m: u32, w: &ConfWord) -> Result<WExpansion<S>> {
        self.tick()?;
        if w.prefix.is_empty() || Letter::new(b, m as i64) >= w.letter(0) {
            return Ok(WExpansion::word(w.prepend(b, m)));
        }
        let key = (b, m, w.clone());
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let (b1, n1) = w.prefix[0];
        let rest = w.tail();
        let inner = self.insert(b, m, &rest)?;
        let mut out = self.left_mul(b1, n1, &inner)?;
        if let Some(table) = self.ctx.brackets.get(&(b, b1)) {
            for (s, terms) in table.iter().enumerate() {
                let s = s as u32;
                if s > m {
                    break;
                }
                let f = binomial_s::<S>(m as i64, s);
                let p = m + n1 - s;
                for (beta, j, c) in terms {
                    if *j > p {
                        continue;
                    }
                    // (D^(j) beta)(p) w' = (-1)^j binom(p, j) beta(p-j) w'
                    let g = sign::<S>(*j as i64) * binomial_s::<S>(p as i64, *j);
                    let t = self.insert(*beta, p - j, &rest)?;
                    out.add_scaled(&t, &(f.clone() * g * c.clone()));
                }
            }
        }
        self.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }
}
