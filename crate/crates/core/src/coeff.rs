//! The coefficient algebra: letters `a(n)`, `n` any integer, with the
//! product `a(m)b(n) = sum_s binom(m, s) (a(s)b)(m+n-s)` and the relation
//! `(Da)(n) = -n a(n-1)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::checks::{CheckReport, Violation};
use crate::element::Element;
use crate::linalg::{axpy, EchelonBasis, SparseVec};
use crate::presentation::Presentation;
use crate::scalar::{binomial_s, sign, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CoeffLetter {
    pub generator: usize,
    pub index: i64,
}

impl CoeffLetter {
    pub fn new(generator: usize, index: i64) -> Self {
        Self { generator, index }
    }
}

/// A k-linear combination of letters, always reduced (torsion letters only
/// at index `-1`).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CoeffElement<S> {
    pub terms: SparseVec<CoeffLetter, S>,
}

impl<S: Scalar> CoeffElement<S> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn letter(l: CoeffLetter) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(l, S::one());
        Self { terms }
    }

    pub fn add_scaled(&mut self, other: &Self, f: &S) {
        axpy(&mut self.terms, f, &other.terms);
    }

    pub fn format(&self, p: &Presentation<S>) -> String {
        if self.is_zero() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(l, c)| {
                let name = &p.generator(l.generator).name;
                if c.is_one() {
                    format!("{name}({})", l.index)
                } else {
                    format!("({c})*{name}({})", l.index)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// The `p`-th coefficient of `D^(k) x`: `(-1)^k binom(p, k) x(p-k)`, or
/// `None` when it vanishes. For torsion atoms only `x(-1)` survives.
pub fn shifted_letter<S: Scalar>(k: u32, p: i64, torsion: bool) -> Option<(i64, S)> {
    if torsion && (k > 0 || p != -1) {
        return None;
    }
    let c = sign::<S>(k as i64) * binomial_s::<S>(p, k);
    (!c.is_zero()).then(|| (p - k as i64, c))
}

/// Coefficient `index` of the series of `e`.
pub fn series_coefficient<S: Scalar>(p: &Presentation<S>, e: &Element<S>, index: i64) -> CoeffElement<S> {
    let mut out = CoeffElement::zero();
    for (g, k, c) in e.iter() {
        if let Some((idx, f)) = shifted_letter::<S>(k, index, p.is_torsion(g)) {
            out.add_scaled(&CoeffElement::letter(CoeffLetter::new(g, idx)), &(f * c.clone()));
        }
    }
    out
}

/// Applies the reduction rules to a single letter.
pub fn reduce_letter<S: Scalar>(p: &Presentation<S>, l: CoeffLetter) -> CoeffElement<S> {
    if p.is_torsion(l.generator) && l.index != -1 {
        CoeffElement::zero()
    } else {
        CoeffElement::letter(l)
    }
}

/// Product of two letters in the coefficient algebra (the bracket when `p`
/// is a Lie conformal algebra).
pub fn coeff_bracket<S: Scalar>(p: &Presentation<S>, x: CoeffLetter, y: CoeffLetter) -> CoeffElement<S> {
    let mut out = CoeffElement::zero();
    if reduce_letter(p, x).is_zero() || reduce_letter(p, y).is_zero() {
        return out;
    }
    let (a, b) = (Element::generator(x.generator), Element::generator(y.generator));
    for s in 0..p.locality(x.generator, y.generator) {
        let ab = p.product(&a, &b, s);
        if ab.is_zero() {
            continue;
        }
        let f = binomial_s::<S>(x.index, s);
        if f.is_zero() {
            continue;
        }
        out.add_scaled(&series_coefficient(p, &ab, x.index + y.index - s as i64), &f);
    }
    out
}

/// Extends the bracket bilinearly.
pub fn bracket_elements<S: Scalar>(p: &Presentation<S>, x: &CoeffElement<S>, y: &CoeffElement<S>) -> CoeffElement<S> {
    let mut out = CoeffElement::zero();
    for (lx, cx) in &x.terms {
        for (ly, cy) in &y.terms {
            out.add_scaled(&coeff_bracket(p, *lx, *ly), &(cx.clone() * cy.clone()));
        }
    }
    out
}

/// Symbols `(generator, divided power, index)` standing for `(D^(k) g) t^n`
/// before the quotient by `(Da)(n) + n a(n-1)` is taken.
type Symbol = (usize, u32, i64);

/// Checks, on `index_window` and for divided powers up to `max_dpow`, that
/// the defining relations of the coefficient algebra leave the letters
/// `{b(n)}` of free generators (and `c(-1)` of torsion ones) linearly
/// independent, and that torsion letters at other indices collapse to zero.
pub fn coeff_basis_probe<S: Scalar>(p: &Presentation<S>, index_window: (i64, i64), max_dpow: u32) -> CheckReport {
    let (lo, hi) = index_window;
    let lo_ext = lo - max_dpow as i64 - 1;
    let mut relations: EchelonBasis<Symbol, S> = EchelonBasis::new();
    for g in 0..p.rank() {
        for k in 0..max_dpow {
            for n in (lo_ext + 1)..=(hi + 1) {
                // (k+1) (D^(k+1) g)(n) + n (D^(k) g)(n-1) = 0
                let mut r = SparseVec::new();
                if !p.is_torsion(g) {
                    r.insert((g, k + 1, n), S::from_int(k as i128 + 1));
                }
                if n != 0 {
                    r.insert((g, k, n - 1), S::from_int(n as i128));
                }
                if !r.is_empty() {
                    relations.push(&r);
                }
            }
        }
    }
    let mut violations = Vec::new();
    let mut letters = relations.clone();
    let mut checked = 0;
    for g in 0..p.rank() {
        let name = &p.generator(g).name;
        for n in lo..=hi {
            checked += 1;
            let mut v = SparseVec::new();
            v.insert((g, 0u32, n), S::one());
            let independent = letters.push(&v);
            let expected = !p.is_torsion(g) || n == -1;
            if independent != expected {
                violations.push(Violation {
                    input: format!("{name}({n})"),
                    lhs: if independent { "independent" } else { "dependent" }.into(),
                    rhs: if expected { "independent" } else { "reduces to 0" }.into(),
                });
            }
        }
    }
    CheckReport::new(
        "coefficient basis",
        format!("index window [{lo}, {hi}], D-powers <= {max_dpow}"),
        checked,
        violations,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeriesLocality {
    /// Least order for which the relation held on the window.
    Order(u32),
    /// No order up to the trial bound works.
    NoneUpTo(u32),
    /// Window too small to certify anything.
    Inconclusive,
}

/// Least `N <= trial` with `sum_s (-1)^s binom(N, s) a(n-s) b(m+s) = 0` for
/// all `m, n` in `window`, the products taken in the coefficient algebra.
pub fn series_locality_order<S: Scalar>(
    p: &Presentation<S>,
    a: usize,
    b: usize,
    trial: u32,
    window: (i64, i64),
) -> SeriesLocality {
    let (lo, hi) = window;
    if hi - lo + 1 < trial as i64 + 2 {
        return SeriesLocality::Inconclusive;
    }
    'order: for order in 0..=trial {
        for n in lo..=hi {
            for m in lo..=hi {
                let mut acc = CoeffElement::zero();
                for s in 0..=order {
                    let f = sign::<S>(s as i64) * binomial_s::<S>(order as i64, s);
                    let t = coeff_bracket(p, CoeffLetter::new(a, n - s as i64), CoeffLetter::new(b, m + s as i64));
                    acc.add_scaled(&t, &f);
                }
                if !acc.is_zero() {
                    continue 'order;
                }
            }
        }
        return SeriesLocality::Order(order);
    }
    SeriesLocality::NoneUpTo(trial)
}

/// Letter-level antisymmetry and Jacobi for the coefficient bracket.
pub fn check_coefficient_lie<S: Scalar>(p: &Presentation<S>, window: (i64, i64)) -> CheckReport {
    let mut violations = Vec::new();
    let mut checked = 0;
    let letters: Vec<CoeffLetter> = (0..p.rank())
        .flat_map(|g| (window.0..=window.1).map(move |n| CoeffLetter::new(g, n)))
        .filter(|&l| !reduce_letter(p, l).is_zero())
        .collect();
    for &x in &letters {
        for &y in &letters {
            checked += 1;
            let xy = coeff_bracket(p, x, y);
            let mut sum = coeff_bracket(p, y, x);
            sum.add_scaled(&xy, &S::one());
            if !sum.is_zero() {
                violations.push(Violation {
                    input: format!("[{x:?}, {y:?}]"),
                    lhs: xy.format(p),
                    rhs: "antisymmetric partner".into(),
                });
            }
            for &z in &letters {
                checked += 1;
                let lz = CoeffElement::letter(z);
                let lx = CoeffElement::letter(x);
                let ly = CoeffElement::letter(y);
                let mut jac = bracket_elements(p, &bracket_elements(p, &lx, &ly), &lz);
                jac.add_scaled(&bracket_elements(p, &bracket_elements(p, &ly, &lz), &lx), &S::one());
                jac.add_scaled(&bracket_elements(p, &bracket_elements(p, &lz, &lx), &ly), &S::one());
                if !jac.is_zero() {
                    violations.push(Violation {
                        input: format!("({x:?}, {y:?}, {z:?})"),
                        lhs: jac.format(p),
                        rhs: "0".into(),
                    });
                }
            }
        }
    }
    CheckReport::new(
        "coefficient Lie identities",
        format!("window {window:?}"),
        checked,
        violations,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{affinize, builtin, loop_algebra};
    use crate::presentation::Kind;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn loop_bracket_adds_indices() {
        let p = loop_algebra(&builtin::<Rational>("sl2").unwrap()).unwrap();
        let r = coeff_bracket(&p, CoeffLetter::new(0, 2), CoeffLetter::new(1, -5));
        assert_eq!(r, CoeffElement::letter(CoeffLetter::new(2, -3)));
    }

    #[test]
    fn affine_bracket_has_central_term() {
        let p = affinize(&builtin::<Rational>("sl2").unwrap(), None).unwrap();
        let c = p.index_of("c").unwrap();
        for m in -4i64..=4 {
            for n in -4i64..=4 {
                let mut expected = CoeffElement::letter(CoeffLetter::new(2, m + n));
                if m == -n {
                    expected.add_scaled(&CoeffElement::letter(CoeffLetter::new(c, -1)), &q(m));
                }
                assert_eq!(
                    coeff_bracket(&p, CoeffLetter::new(0, m), CoeffLetter::new(1, n)),
                    expected
                );
            }
        }
    }

    #[test]
    fn trivial_table_gives_zero() {
        let p = loop_algebra(&builtin::<Rational>("abelian:2").unwrap()).unwrap();
        assert!(coeff_bracket(&p, CoeffLetter::new(0, 1), CoeffLetter::new(1, 3)).is_zero());
    }

    #[test]
    fn basis_probe_loop_and_torsion() {
        let p = loop_algebra(&builtin::<Rational>("sl2").unwrap()).unwrap();
        assert!(coeff_basis_probe(&p, (-3, 3), 3).pass);
        let a = affinize(&builtin::<Rational>("sl2").unwrap(), None).unwrap();
        assert!(coeff_basis_probe(&a, (-3, 3), 3).pass);
        assert!(reduce_letter(&a, CoeffLetter::new(3, 0)).is_zero());
        assert!(!reduce_letter(&a, CoeffLetter::new(3, -1)).is_zero());
        let zero = crate::presentation::Presentation::<Rational>::new(Kind::Lie, vec![]).unwrap();
        assert!(coeff_basis_probe(&zero, (-3, 3), 3).pass);
    }

    #[test]
    fn series_localities() {
        let sl2 = builtin::<Rational>("sl2").unwrap();
        let l = loop_algebra(&sl2).unwrap();
        assert_eq!(series_locality_order(&l, 0, 1, 4, (-4, 4)), SeriesLocality::Order(1));
        let a = affinize(&sl2, None).unwrap();
        assert_eq!(series_locality_order(&a, 0, 1, 4, (-4, 4)), SeriesLocality::Order(2));
        let ab = loop_algebra(&builtin::<Rational>("abelian:1").unwrap()).unwrap();
        assert_eq!(series_locality_order(&ab, 0, 0, 4, (-4, 4)), SeriesLocality::Order(0));
        assert_eq!(series_locality_order(&a, 0, 1, 1, (-4, 4)), SeriesLocality::NoneUpTo(1));
        assert_eq!(series_locality_order(&a, 0, 1, 4, (0, 2)), SeriesLocality::Inconclusive);
    }

    #[test]
    fn series_locality_matches_product_vanishing() {
        // local of order N implies a(n)b = 0 for n >= N
        let a = affinize(&builtin::<Rational>("sl2").unwrap(), None).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if let SeriesLocality::Order(n) = series_locality_order(&a, x, y, 4, (-4, 4)) {
                    for k in n..n + 3 {
                        assert!(a.product(&Element::generator(x), &Element::generator(y), k).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn coefficient_bracket_is_lie() {
        let a = affinize(&builtin::<Rational>("sl2").unwrap(), None).unwrap();
        assert!(check_coefficient_lie(&a, (-1, 1)).pass);
    }
}
