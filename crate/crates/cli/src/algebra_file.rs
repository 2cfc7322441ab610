//! JSON formats for presentations and finite-dimensional algebras.
//!
//! Coefficients are rational strings (`"3"`, `"-1/2"`); decimals are rejected.

use std::collections::BTreeSet;
use std::str::FromStr;

use conformal_core::constructions::FiniteAlgebra;
use conformal_core::element::Element;
use conformal_core::presentation::{GeneratorInfo, Kind};
use conformal_core::{QPresentation, Rational};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    #[serde(default)]
    pub weight: u32,
    #[serde(default)]
    pub torsion_order: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalityEntry {
    pub left: String,
    pub right: String,
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: String,
    #[serde(default)]
    pub dpow: u32,
    pub gen: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductEntry {
    pub left: String,
    pub right: String,
    pub n: u32,
    pub result: Vec<Term>,
}

/// A conformal algebra presentation. Missing locality entries mean 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub kind: Kind,
    pub generators: Vec<GeneratorEntry>,
    #[serde(default)]
    pub locality: Vec<LocalityEntry>,
    #[serde(default)]
    pub products: Vec<ProductEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisTerm {
    pub coeff: String,
    pub gen: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureEntry {
    pub left: String,
    pub right: String,
    pub result: Vec<BasisTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormEntry {
    pub left: String,
    pub right: String,
    pub coeff: String,
}

/// A finite-dimensional algebra `e_i e_j = sum c e_k`, with an optional
/// bilinear form used by the affine construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteAlgebraFile {
    pub kind: Kind,
    pub basis: Vec<String>,
    #[serde(default)]
    pub products: Vec<StructureEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Vec<FormEntry>>,
}

pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    let t = s.trim();
    if t.contains('.') || t.contains('e') || t.contains('E') {
        return Err(CliError::Input(format!("coefficient `{s}` is not an exact rational")));
    }
    let r = Rational::from_str(t).map_err(|_| CliError::Input(format!("bad rational `{s}`")))?;
    Ok(r)
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

fn index(names: &[String], name: &str) -> Result<usize, CliError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| CliError::Input(format!("unknown generator `{name}`")))
}

impl AlgebraFile {
    pub fn to_presentation(&self) -> Result<QPresentation, CliError> {
        let gens = self
            .generators
            .iter()
            .map(|g| GeneratorInfo {
                name: g.name.clone(),
                weight: g.weight,
                torsion_order: g.torsion_order,
            })
            .collect();
        let mut p = QPresentation::new(self.kind, gens)?;
        let names: Vec<String> = self.generators.iter().map(|g| g.name.clone()).collect();
        for l in &self.locality {
            p.set_locality(index(&names, &l.left)?, index(&names, &l.right)?, l.n);
        }
        let mut seen = BTreeSet::new();
        for prod in &self.products {
            let (g, h) = (index(&names, &prod.left)?, index(&names, &prod.right)?);
            if !seen.insert((g, h, prod.n)) {
                return Err(CliError::Input(format!(
                    "duplicate product {}({}){}",
                    prod.left, prod.n, prod.right
                )));
            }
            let mut value = Element::zero();
            for t in &prod.result {
                value.add_term(index(&names, &t.gen)?, t.dpow, parse_rational(&t.coeff)?);
            }
            p.set_product(g, h, prod.n, value);
        }
        Ok(p)
    }

    /// Canonical form: locality and products in generator order, zero
    /// entries omitted.
    pub fn from_presentation(p: &QPresentation) -> Self {
        let name = |g: usize| p.generator(g).name.clone();
        let generators = p
            .generators()
            .iter()
            .map(|g| GeneratorEntry {
                name: g.name.clone(),
                weight: g.weight,
                torsion_order: g.torsion_order,
            })
            .collect();
        let mut locality = Vec::new();
        for g in 0..p.rank() {
            for h in 0..p.rank() {
                if p.locality(g, h) > 0 {
                    locality.push(LocalityEntry {
                        left: name(g),
                        right: name(h),
                        n: p.locality(g, h),
                    });
                }
            }
        }
        let products = p
            .table()
            .map(|((g, h, n), v)| ProductEntry {
                left: name(g),
                right: name(h),
                n,
                result: v
                    .iter()
                    .map(|(f, d, c)| Term {
                        coeff: format_rational(c),
                        dpow: d,
                        gen: name(f),
                    })
                    .collect(),
            })
            .collect();
        Self {
            kind: p.kind,
            generators,
            locality,
            products,
        }
    }
}

impl FiniteAlgebraFile {
    pub fn to_algebra(&self) -> Result<FiniteAlgebra<Rational>, CliError> {
        let mut a = FiniteAlgebra::<Rational>::zero(self.kind, self.basis.clone());
        for s in &self.products {
            let (i, j) = (index(&self.basis, &s.left)?, index(&self.basis, &s.right)?);
            for t in &s.result {
                let k = index(&self.basis, &t.gen)?;
                let c = a.structure[i][j][k].clone() + parse_rational(&t.coeff)?;
                a.set(i, j, k, c);
            }
        }
        if let Some(entries) = &self.form {
            let d = self.basis.len();
            let mut form = vec![vec![Rational::from_integer(0.into()); d]; d];
            for e in entries {
                let (i, j) = (index(&self.basis, &e.left)?, index(&self.basis, &e.right)?);
                form[i][j] = parse_rational(&e.coeff)?;
            }
            a.form = Some(form);
        }
        a.validate()?;
        Ok(a)
    }
}
