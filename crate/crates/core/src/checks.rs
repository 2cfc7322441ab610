//! Structural validation and conformal identity checkers.

use rayon::prelude::*;
use serde::Serialize;

use crate::element::Element;
use crate::presentation::Presentation;
use crate::scalar::{binomial, binomial_s, sign, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub input: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub identity: String,
    pub parameters: String,
    pub checked: usize,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(
        identity: impl Into<String>,
        parameters: impl Into<String>,
        checked: usize,
        violations: Vec<Violation>,
    ) -> Self {
        let pass = violations.is_empty();
        Self {
            identity: identity.into(),
            parameters: parameters.into(),
            checked,
            violations,
            pass,
        }
    }

    pub fn first_witness(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

fn violation(input: String, lhs: String, rhs: String) -> Violation {
    Violation { input, lhs, rhs }
}

/// Structural invariants of a presentation. Never aborts; every problem is a
/// listed violation.
pub fn validate_presentation<S: Scalar>(p: &Presentation<S>) -> CheckReport {
    let mut v = Vec::new();
    let mut checked = 0;
    let name = |g: usize| p.generator(g).name.clone();
    for ((g, h, n), value) in p.table() {
        checked += 1;
        let input = format!("{}({n}){}", name(g), name(h));
        if n >= p.locality(g, h) {
            v.push(violation(
                input.clone(),
                "entry present".into(),
                format!("locality N = {}", p.locality(g, h)),
            ));
        }
        if let Err(e) = p.check_element(value) {
            v.push(violation(input.clone(), e.to_string(), "valid element".into()));
            continue;
        }
        for (f, d, _) in value.iter() {
            if p.is_torsion(f) && d > 0 {
                v.push(violation(
                    input.clone(),
                    format!("D^({d}){} present", name(f)),
                    format!("D {} = 0 (torsion)", name(f)),
                ));
            }
        }
        if p.is_torsion(g) || p.is_torsion(h) {
            v.push(violation(
                input.clone(),
                p.format(value),
                "0 (torsion generators annihilate)".into(),
            ));
        }
        if p.graded {
            let target = p.weight(g) as i64 + p.weight(h) as i64 + n as i64;
            for (f, d, _) in value.iter() {
                let w = p.weight(f) as i64 - d as i64;
                if w != target {
                    v.push(violation(
                        input.clone(),
                        format!("term of weight {w}"),
                        format!("weight {target}"),
                    ));
                }
            }
        }
    }
    CheckReport::new(
        "presentation",
        format!("{} table entries", p.table().count()),
        checked,
        v,
    )
}

fn triples(rank: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(rank * rank * rank);
    for a in 0..rank {
        for b in 0..rank {
            for c in 0..rank {
                out.push((a, b, c));
            }
        }
    }
    out
}

fn scan_triples<S, F>(p: &Presentation<S>, m_max: u32, n_max: u32, f: F) -> (usize, Vec<Violation>)
where
    S: Scalar,
    F: Fn(usize, usize, usize, u32, u32) -> Option<Violation> + Sync,
{
    let grid: Vec<_> = triples(p.rank())
        .into_iter()
        .flat_map(|t| (0..=m_max).flat_map(move |m| (0..=n_max).map(move |n| (t, m, n))))
        .collect();
    let checked = grid.len();
    let v = grid
        .par_iter()
        .filter_map(|&((a, b, c), m, n)| f(a, b, c, m, n))
        .collect();
    (checked, v)
}

/// `(a(m)b)(n)c = sum_s (-1)^s binom(m, s) a(m-s)(b(n+s)c)` on generator triples.
pub fn check_conformal_associativity<S: Scalar>(p: &Presentation<S>, m_max: u32, n_max: u32) -> CheckReport {
    let (checked, v) = scan_triples(p, m_max, n_max, |a, b, c, m, n| {
        let (ea, eb, ec) = (Element::generator(a), Element::generator(b), Element::generator(c));
        let lhs = p.product(&p.product(&ea, &eb, m), &ec, n);
        let mut rhs = Element::zero();
        for s in 0..=m {
            let f = sign::<S>(s as i64) * binomial_s::<S>(m as i64, s);
            rhs.add_scaled(&p.product(&ea, &p.product(&eb, &ec, n + s), m - s), &f);
        }
        (lhs != rhs).then(|| {
            violation(
                format!("a={}, b={}, c={}, m={m}, n={n}", name(p, a), name(p, b), name(p, c)),
                p.format(&lhs),
                p.format(&rhs),
            )
        })
    });
    CheckReport::new("conformal associativity", format!("m<={m_max}, n<={n_max}"), checked, v)
}

/// Conformal Jacobi identity on the products of `p`, read as brackets.
pub fn check_conformal_jacobi<S: Scalar>(p: &Presentation<S>, m_max: u32, n_max: u32) -> CheckReport {
    let (checked, v) = scan_triples(p, m_max, n_max, |a, b, c, m, n| {
        let (ea, eb, ec) = (Element::generator(a), Element::generator(b), Element::generator(c));
        let lhs = p.product(&p.product(&ea, &eb, m), &ec, n);
        let mut rhs = Element::zero();
        for s in 0..=m {
            let f = sign::<S>(s as i64) * binomial_s::<S>(m as i64, s);
            let t =
                p.product(&ea, &p.product(&eb, &ec, n + s), m - s) - p.product(&eb, &p.product(&ea, &ec, m - s), n + s);
            rhs.add_scaled(&t, &f);
        }
        (lhs != rhs).then(|| {
            violation(
                format!("a={}, b={}, c={}, m={m}, n={n}", name(p, a), name(p, b), name(p, c)),
                p.format(&lhs),
                p.format(&rhs),
            )
        })
    });
    CheckReport::new("conformal Jacobi", format!("m<={m_max}, n<={n_max}"), checked, v)
}

/// Right-hand side of quasi-symmetry without the overall sign:
/// `sum_s (-1)^(s+n) D^(s)(b(n+s)a)`.
pub fn quasi_symmetric_partner<S: Scalar>(p: &Presentation<S>, a: &Element<S>, b: &Element<S>, n: u32) -> Element<S> {
    let bound = p.product_bound(b, a);
    let mut out = Element::zero();
    let mut s = 0;
    while n + s < bound {
        let t = p.apply_derivation(&p.product(b, a, n + s), s);
        out.add_scaled(&t, &sign::<S>((s + n) as i64));
        s += 1;
    }
    out
}

/// `a(n)b = sign * sum_s (-1)^(s+n) D^(s)(b(n+s)a)` on generator pairs.
pub fn check_quasi_symmetry<S: Scalar>(p: &Presentation<S>, sign_plus: bool, n_max: u32) -> CheckReport {
    let rank = p.rank();
    let grid: Vec<_> = (0..rank)
        .flat_map(|a| (0..rank).flat_map(move |b| (0..=n_max).map(move |n| (a, b, n))))
        .collect();
    let v: Vec<_> = grid
        .par_iter()
        .filter_map(|&(a, b, n)| {
            let (ea, eb) = (Element::generator(a), Element::generator(b));
            let lhs = p.product(&ea, &eb, n);
            let mut rhs = quasi_symmetric_partner(p, &ea, &eb, n);
            if !sign_plus {
                rhs = -rhs;
            }
            (lhs != rhs).then(|| {
                violation(
                    format!("a={}, b={}, n={n}", name(p, a), name(p, b)),
                    p.format(&lhs),
                    p.format(&rhs),
                )
            })
        })
        .collect();
    let label = if sign_plus {
        "quasi-symmetry(+)"
    } else {
        "quasi-symmetry(-)"
    };
    CheckReport::new(label, format!("n<={n_max}"), grid.len(), v)
}

/// `e(n)g = 0` and `g(n)e = 0` for every generator `g` and `n <= n_max`.
pub fn is_central<S: Scalar>(p: &Presentation<S>, e: &Element<S>, n_max: u32) -> bool {
    (0..p.rank()).all(|g| {
        let eg = Element::generator(g);
        (0..=n_max).all(|n| p.product(e, &eg, n).is_zero() && p.product(&eg, e, n).is_zero())
    })
}

fn name<S: Scalar>(p: &Presentation<S>, g: usize) -> &str {
    &p.generator(g).name
}

/// The binomial identity behind coefficientwise associativity of series:
/// `sum_{s=0}^{i} (-1)^(s+j) C(m,s) C(m-s,i-s) C(n+s,j-i+s) = (-1)^(i+j) C(m,i) C(n,j)`
/// for `0 <= i <= m`, `0 <= j <= i + n`.
pub fn check_series_binomial_identity(max: i64) -> CheckReport {
    let mut v = Vec::new();
    let mut checked = 0;
    for m in 0..=max {
        for n in 0..=max {
            for i in 0..=m {
                for j in 0..=(i + n) {
                    checked += 1;
                    let mut lhs: i128 = 0;
                    for s in 0..=i {
                        let lower = j - i + s;
                        if lower < 0 {
                            continue;
                        }
                        let term =
                            binomial(m, s as u32) * binomial(m - s, (i - s) as u32) * binomial(n + s, lower as u32);
                        lhs += if (s + j) % 2 == 0 { term } else { -term };
                    }
                    let rhs = binomial(m, i as u32) * binomial(n, j as u32);
                    let rhs = if (i + j) % 2 == 0 { rhs } else { -rhs };
                    if lhs != rhs {
                        v.push(violation(
                            format!("m={m}, n={n}, i={i}, j={j}"),
                            lhs.to_string(),
                            rhs.to_string(),
                        ));
                    }
                }
            }
        }
    }
    CheckReport::new("series binomial identity", format!("0<=m,n<={max}"), checked, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{affinize, builtin, loop_algebra};
    use crate::presentation::{GeneratorInfo, Kind};
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn loop_of(name: &str) -> Presentation<Rational> {
        loop_algebra(&builtin(name).unwrap()).unwrap()
    }

    #[test]
    fn loop_sl2_is_valid() {
        assert!(validate_presentation(&loop_of("sl2")).pass);
    }

    #[test]
    fn torsion_with_nonzero_product_fails() {
        let mut p =
            Presentation::<Rational>::new(Kind::Lie, vec![GeneratorInfo::torsion("c"), GeneratorInfo::free("g")])
                .unwrap();
        p.set_locality(0, 1, 1);
        p.set_product(0, 1, 0, Element::generator(1));
        let r = validate_presentation(&p);
        assert!(!r.pass);
    }

    #[test]
    fn entry_at_locality_fails() {
        let mut p = loop_of("sl2");
        p.set_product(0, 1, 1, Element::generator(2));
        assert!(!validate_presentation(&p).pass);
    }

    #[test]
    fn grading_check() {
        let mut p = loop_of("sl2");
        p.graded = true;
        assert!(validate_presentation(&p).pass);
        p.set_all_weights(1);
        assert!(!validate_presentation(&p).pass);
    }

    #[test]
    fn matrix_loop_is_associative_not_lie() {
        let p = loop_of("mat2");
        assert!(check_conformal_associativity(&p, 4, 4).pass);
        let as_lie = p.with_kind(Kind::Lie);
        let r = check_conformal_jacobi(&as_lie, 2, 2);
        assert!(!r.pass);
        assert!(r.first_witness().is_some());
        assert!(!check_quasi_symmetry(&p, false, 2).pass);
    }

    #[test]
    fn sl2_loop_fails_associativity() {
        let p = loop_of("sl2").with_kind(Kind::Associative);
        assert!(!check_conformal_associativity(&p, 2, 2).pass);
    }

    #[test]
    fn abelian_passes_everything() {
        let p = loop_of("abelian:2");
        assert!(check_conformal_associativity(&p, 3, 3).pass);
        assert!(check_conformal_jacobi(&p, 3, 3).pass);
        assert!(check_quasi_symmetry(&p, true, 3).pass);
        assert!(check_quasi_symmetry(&p, false, 3).pass);
        assert!(is_central(&p, &p.gen("a0"), 3));
    }

    #[test]
    fn centrality() {
        let aff = affinize(&builtin::<Rational>("sl2").unwrap(), None).unwrap();
        assert!(is_central(&aff, &aff.gen("c"), 4));
        let p = loop_of("sl2");
        assert!(!is_central(&p, &p.gen("h"), 2));
        // h(0)e = 2e
        assert_eq!(p.product(&p.gen("h"), &p.gen("e"), 0), p.gen("e").scaled(&q(2)));
    }

    #[test]
    fn binomial_identity_small() {
        assert!(check_series_binomial_identity(4).pass);
    }
}
