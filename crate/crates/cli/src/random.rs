//! Seeded random associative presentations.

use conformal_core::element::Element;
use conformal_core::presentation::{GeneratorInfo, Kind};
use conformal_core::{QPresentation, Rational};
use rand::Rng;

fn coefficient(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-3..=3).into(), rng.gen_range(1..=2).into())
}

/// Lower generators multiply into `k[D]`-combinations of the top ones, and
/// every product involving a top generator vanishes. Always associative.
pub fn two_step(rng: &mut impl Rng) -> QPresentation {
    let n = rng.gen_range(2..=3);
    let top = rng.gen_range(1..n);
    let lower = n - top;
    let gens = (0..n).map(|i| GeneratorInfo::free(format!("g{i}"))).collect();
    let mut p = QPresentation::new(Kind::Associative, gens).expect("distinct names");
    for g in 0..lower {
        for h in 0..lower {
            let locality = rng.gen_range(0..=3);
            p.set_locality(g, h, locality);
            for k in 0..locality {
                let mut v = Element::zero();
                for z in lower..n {
                    for d in 0..=2 {
                        if rng.gen_bool(0.4) {
                            v.add_term(z, d, coefficient(rng));
                        }
                    }
                }
                p.set_product(g, h, k, v);
            }
        }
    }
    p
}

/// Arbitrary sparse tables; only some are associative.
pub fn free_table(rng: &mut impl Rng) -> QPresentation {
    let n = rng.gen_range(1..=3);
    let gens = (0..n).map(|i| GeneratorInfo::free(format!("g{i}"))).collect();
    let mut p = QPresentation::new(Kind::Associative, gens).expect("distinct names");
    for g in 0..n {
        for h in 0..n {
            let locality = rng.gen_range(0..=3);
            p.set_locality(g, h, locality);
            for k in 0..locality {
                if rng.gen_bool(0.5) {
                    let z = rng.gen_range(0..n);
                    p.set_product(g, h, k, Element::term(z, rng.gen_range(0..=1), coefficient(rng)));
                }
            }
        }
    }
    p
}
