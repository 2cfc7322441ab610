//! Standard conformal algebras built from finite-dimensional data, and
//! algebras derived from existing presentations.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use crate::checks::{quasi_symmetric_partner, validate_presentation};
use crate::element::Element;
use crate::error::{ConformalError, Result};
use crate::linalg::{EchelonBasis, SparseVec};
use crate::presentation::{GeneratorInfo, Kind, Presentation};
use crate::scalar::Scalar;

/// A finite-dimensional algebra `e_i e_j = sum_k c(i,j,k) e_k`, optionally with
/// a symmetric bilinear form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra<S> {
    pub kind: Kind,
    pub names: Vec<String>,
    /// `structure[i][j][k] = c(i,j,k)`
    pub structure: Vec<Vec<Vec<S>>>,
    pub form: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> FiniteAlgebra<S> {
    pub fn zero(kind: Kind, names: Vec<String>) -> Self {
        let d = names.len();
        Self {
            kind,
            names,
            structure: vec![vec![vec![S::zero(); d]; d]; d],
            form: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, c: S) {
        self.structure[i][j][k] = c;
    }

    pub fn mul(&self, x: &[S], y: &[S]) -> Vec<S> {
        let d = self.dim();
        let mut out = vec![S::zero(); d];
        for i in 0..d {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if y[j].is_zero() {
                    continue;
                }
                for k in 0..d {
                    let c = &self.structure[i][j][k];
                    if !c.is_zero() {
                        out[k] = out[k].clone() + x[i].clone() * y[j].clone() * c.clone();
                    }
                }
            }
        }
        out
    }

    fn unit(&self, i: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.dim()];
        v[i] = S::one();
        v
    }

    fn pair(&self, x: &[S], y: &[S]) -> S {
        let form = self.form.as_ref().expect("form");
        let mut acc = S::zero();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc = acc + x[i].clone() * form[i][j].clone() * y[j].clone();
            }
        }
        acc
    }

    /// Checks the structural constraints for the declared kind and the form.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let bad = |m: String| Err(ConformalError::InvalidAlgebra(m));
        if self.structure.len() != d
            || self
                .structure
                .iter()
                .any(|r| r.len() != d || r.iter().any(|c| c.len() != d))
        {
            return bad("structure constant tensor has wrong shape".into());
        }
        for i in 0..d {
            for j in 0..d {
                let (ei, ej) = (self.unit(i), self.unit(j));
                for k in 0..d {
                    let ek = self.unit(k);
                    match self.kind {
                        Kind::Lie => {
                            let jac: Vec<S> = {
                                let a = self.mul(&self.mul(&ei, &ej), &ek);
                                let b = self.mul(&self.mul(&ej, &ek), &ei);
                                let c = self.mul(&self.mul(&ek, &ei), &ej);
                                (0..d).map(|t| a[t].clone() + b[t].clone() + c[t].clone()).collect()
                            };
                            if jac.iter().any(|c| !c.is_zero()) {
                                return bad(format!(
                                    "Jacobi fails on ({}, {}, {})",
                                    self.names[i], self.names[j], self.names[k]
                                ));
                            }
                        }
                        Kind::Associative => {
                            if self.mul(&self.mul(&ei, &ej), &ek) != self.mul(&ei, &self.mul(&ej, &ek)) {
                                return bad(format!(
                                    "associativity fails on ({}, {}, {})",
                                    self.names[i], self.names[j], self.names[k]
                                ));
                            }
                        }
                    }
                }
                if self.kind == Kind::Lie {
                    let s = self.mul(&ei, &ej);
                    let t = self.mul(&ej, &ei);
                    if s.iter().zip(&t).any(|(a, b)| !(a.clone() + b.clone()).is_zero()) {
                        return bad(format!("antisymmetry fails on ({}, {})", self.names[i], self.names[j]));
                    }
                }
            }
        }
        if let Some(form) = &self.form {
            if form.len() != d || form.iter().any(|r| r.len() != d) {
                return bad("form has wrong shape".into());
            }
            for i in 0..d {
                for j in 0..d {
                    if form[i][j] != form[j][i] {
                        return bad("form is not symmetric".into());
                    }
                    for k in 0..d {
                        let (a, b, c) = (self.unit(i), self.unit(j), self.unit(k));
                        if self.pair(&self.mul(&a, &b), &c) != self.pair(&a, &self.mul(&b, &c)) {
                            return bad(format!(
                                "form is not invariant on ({}, {}, {})",
                                self.names[i], self.names[j], self.names[k]
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The commutator Lie algebra of an associative algebra.
    pub fn commutator(&self) -> Self {
        let d = self.dim();
        let mut out = Self::zero(Kind::Lie, self.names.clone());
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    out.structure[i][j][k] = self.structure[i][j][k].clone() - self.structure[j][i][k].clone();
                }
            }
        }
        out
    }
}

fn q<S: Scalar>(n: i64) -> S {
    S::from_int(n as i128)
}

/// Named algebras: `sl2`, `mat2`, `gl2`, `heis3`, `abelian:k`.
///
/// `sl2` uses `[e,f] = h, [h,e] = 2e, [h,f] = -2f` and carries the trace form
/// `<e,f> = 1, <h,h> = 2`.
pub fn builtin<S: Scalar>(name: &str) -> Result<FiniteAlgebra<S>> {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match name {
        "sl2" => Ok(sl2(q(1))),
        "mat2" => {
            // e_ab e_cd = delta_bc e_ad; basis e11, e12, e21, e22
            let mut a = FiniteAlgebra::zero(Kind::Associative, names(&["e11", "e12", "e21", "e22"]));
            let idx = |r: usize, c: usize| 2 * r + c;
            for r1 in 0..2 {
                for c1 in 0..2 {
                    for c2 in 0..2 {
                        a.set(idx(r1, c1), idx(c1, c2), idx(r1, c2), S::one());
                    }
                }
            }
            Ok(a)
        }
        "gl2" => Ok(builtin::<S>("mat2")?.commutator()),
        "heis3" => {
            let mut a = FiniteAlgebra::zero(Kind::Lie, names(&["x", "y", "z"]));
            a.set(0, 1, 2, q(1));
            a.set(1, 0, 2, q(-1));
            Ok(a)
        }
        _ => {
            if let Some(k) = name.strip_prefix("abelian:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| ConformalError::InvalidAlgebra(format!("bad abelian rank in `{name}`")))?;
                let names = (0..k).map(|i| format!("a{i}")).collect();
                let mut a = FiniteAlgebra::zero(Kind::Lie, names);
                a.form = Some(
                    (0..k)
                        .map(|i| (0..k).map(|j| if i == j { q(1) } else { q(0) }).collect())
                        .collect(),
                );
                return Ok(a);
            }
            Err(ConformalError::InvalidAlgebra(format!(
                "unknown built-in algebra `{name}`"
            )))
        }
    }
}

/// `sl2` with its trace form scaled by `scale`.
pub fn sl2<S: Scalar>(scale: S) -> FiniteAlgebra<S> {
    let mut a = FiniteAlgebra::zero(Kind::Lie, vec!["e".into(), "f".into(), "h".into()]);
    let (e, f, h) = (0, 1, 2);
    a.set(e, f, h, q(1));
    a.set(f, e, h, q(-1));
    a.set(h, e, e, q(2));
    a.set(e, h, e, q(-2));
    a.set(h, f, f, q(-2));
    a.set(f, h, f, q(2));
    let mut form = vec![vec![S::zero(); 3]; 3];
    form[e][f] = scale.clone();
    form[f][e] = scale.clone();
    form[h][h] = scale * q(2);
    a.form = Some(form);
    a
}

fn basis_element<S: Scalar>(v: &[S]) -> Element<S> {
    Element::from_terms(v.iter().enumerate().map(|(k, c)| (k, 0, c.clone())))
}

/// The loop algebra: one free generator per basis vector, locality 1 and
/// `a(0)b = ab`.
pub fn loop_algebra<S: Scalar>(g: &FiniteAlgebra<S>) -> Result<Presentation<S>> {
    g.validate()?;
    let gens = g.names.iter().map(GeneratorInfo::free).collect();
    let mut p = Presentation::new(g.kind, gens)?;
    for i in 0..g.dim() {
        for j in 0..g.dim() {
            p.set_locality(i, j, 1);
            p.set_product(i, j, 0, basis_element(&g.structure[i][j]));
        }
    }
    Ok(p)
}

/// The affine algebra of a Lie algebra with invariant form: loop algebra plus
/// a central torsion generator `c`, locality 2, `a(1)b = <a,b> c`.
///
/// `form` overrides the algebra's own form when given.
pub fn affinize<S: Scalar>(g: &FiniteAlgebra<S>, form: Option<Vec<Vec<S>>>) -> Result<Presentation<S>> {
    if g.kind != Kind::Lie {
        return Err(ConformalError::InvalidAlgebra(
            "affinization needs a Lie algebra".into(),
        ));
    }
    let mut g = g.clone();
    if form.is_some() {
        g.form = form;
    }
    let d = g.dim();
    if g.form.is_none() {
        g.form = Some(vec![vec![S::zero(); d]; d]);
    }
    g.validate()?;
    let form = g.form.clone().unwrap();
    let mut gens: Vec<GeneratorInfo> = g.names.iter().map(GeneratorInfo::free).collect();
    let mut cname = "c".to_string();
    while gens.iter().any(|x| x.name == cname) {
        cname.push('\'');
    }
    gens.push(GeneratorInfo::torsion(cname));
    let c = d;
    let mut p = Presentation::new(Kind::Lie, gens)?;
    for i in 0..d {
        for j in 0..d {
            p.set_locality(i, j, 2);
            p.set_product(i, j, 0, basis_element(&g.structure[i][j]));
            p.set_product(i, j, 1, Element::term(c, 0, form[i][j].clone()));
        }
    }
    Ok(p)
}

/// The commutator algebra `a[n]b = a(n)b - sum_s (-1)^(n+s) D^(s)(b(n+s)a)`
/// with locality `max(N(a,b), N(b,a))`.
pub fn commutator_algebra<S: Scalar>(p: &Presentation<S>) -> Result<Presentation<S>> {
    let mut out = Presentation::new(Kind::Lie, p.generators().to_vec())?;
    out.graded = p.graded;
    for a in 0..p.rank() {
        for b in 0..p.rank() {
            let n_max = p.locality(a, b).max(p.locality(b, a));
            out.set_locality(a, b, n_max);
            let (ea, eb) = (Element::generator(a), Element::generator(b));
            for n in 0..n_max {
                let v = p.product(&ea, &eb, n) - quasi_symmetric_partner(p, &ea, &eb, n);
                out.set_product(a, b, n, v);
            }
        }
    }
    Ok(out)
}

/// Quotient of `p` by the ideal generated by `ideal_generators`.
///
/// The ideal generators must be k-combinations of generators without `D`;
/// the ideal is then `k[D] V` for a subspace `V` of the generator span, found
/// by closing under products with generators on both sides. At most
/// `round_bound` closure rounds are attempted.
pub fn quotient<S: Scalar>(
    p: &Presentation<S>,
    ideal_generators: &[Element<S>],
    round_bound: usize,
) -> Result<Presentation<S>> {
    let to_vec = |e: &Element<S>| -> Result<SparseVec<usize, S>> {
        let mut v = SparseVec::new();
        for (g, d, c) in e.iter() {
            if d > 0 {
                return Err(ConformalError::UnboundedIdeal(format!(
                    "ideal element {} involves D; the quotient would have D-torsion",
                    p.format(e)
                )));
            }
            v.insert(g, c.clone());
        }
        Ok(v)
    };
    let mut span = EchelonBasis::new();
    let mut members: Vec<Element<S>> = Vec::new();
    for e in ideal_generators {
        p.check_element(e)?;
        if span.push(&to_vec(e)?) {
            members.push(e.clone());
        }
    }
    let mut frontier = members.clone();
    let mut rounds = 0;
    while !frontier.is_empty() {
        rounds += 1;
        if rounds > round_bound {
            return Err(ConformalError::UnboundedIdeal(format!(
                "closure did not stabilize within {round_bound} rounds"
            )));
        }
        let mut next = Vec::new();
        for x in &frontier {
            for g in 0..p.rank() {
                let eg = Element::generator(g);
                let bound = p.product_bound(x, &eg).max(p.product_bound(&eg, x));
                for n in 0..bound {
                    for y in [p.product(x, &eg, n), p.product(&eg, x, n)] {
                        let mut by_power: BTreeMap<u32, SparseVec<usize, S>> = BTreeMap::new();
                        for (h, d, c) in y.iter() {
                            by_power.entry(d).or_default().insert(h, c.clone());
                        }
                        for (d, v) in by_power {
                            if span.contains(&v) {
                                continue;
                            }
                            if d > 0 {
                                return Err(ConformalError::UnboundedIdeal(format!(
                                    "closure produces {} whose D-part is not in the ideal; quotient would have D-torsion",
                                    p.format(&y)
                                )));
                            }
                            span.push(&v);
                            next.push(Element::from_terms(v.into_iter().map(|(h, c)| (h, 0, c))));
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    // Non-pivot generators survive; pivot generators are rewritten through them.
    let pivots: Vec<usize> = span.pivots().copied().collect();
    let survivors: Vec<usize> = (0..p.rank()).filter(|g| !pivots.contains(g)).collect();
    let new_index: BTreeMap<usize, usize> = survivors.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let project = |e: &Element<S>| -> Element<S> {
        let mut out = Element::zero();
        let mut by_power: BTreeMap<u32, SparseVec<usize, S>> = BTreeMap::new();
        for (h, d, c) in e.iter() {
            by_power.entry(d).or_default().insert(h, c.clone());
        }
        for (d, v) in by_power {
            let (rem, _) = span.reduce(&v);
            for (h, c) in rem {
                let h = new_index[&h];
                if p.is_torsion(survivors[h]) && d > 0 {
                    continue;
                }
                out.add_term(h, d, c);
            }
        }
        out
    };
    let gens = survivors.iter().map(|&g| p.generator(g).clone()).collect();
    let mut out = Presentation::new(p.kind, gens)?;
    out.graded = p.graded;
    for (i, &a) in survivors.iter().enumerate() {
        for (j, &b) in survivors.iter().enumerate() {
            let mut top = 0;
            for n in 0..p.locality(a, b) {
                let v = project(&p.product(&Element::generator(a), &Element::generator(b), n));
                if !v.is_zero() {
                    top = n + 1;
                    out.set_product(i, j, n, v);
                }
            }
            out.set_locality(i, j, top);
        }
    }
    let report = validate_presentation(&out);
    if !report.pass {
        return Err(ConformalError::InvalidPresentation(format!(
            "quotient failed validation: {:?}",
            report.violations
        )));
    }
    Ok(out)
}
