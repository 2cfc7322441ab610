use conformal_core::checks::{
    check_conformal_associativity, check_conformal_jacobi, check_quasi_symmetry, check_series_binomial_identity,
    validate_presentation,
};
use conformal_core::coeff::check_coefficient_lie;
use conformal_core::constructions::{affinize, builtin, commutator_algebra, loop_algebra, quotient};
use conformal_core::element::Element;
use conformal_core::embed::{build_enveloping, EmbedBounds};
use conformal_core::envelope::{ConfWord, EnvelopeContext, WExpansion};
use conformal_core::presentation::{GeneratorInfo, Kind};
use conformal_core::{QElement, QPresentation, QWExpansion, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn loop_of(name: &str) -> QPresentation {
    loop_algebra(&builtin(name).unwrap()).unwrap()
}

fn affine_sl2() -> QPresentation {
    affinize(&builtin("sl2").unwrap(), None).unwrap()
}

fn samples() -> Vec<QPresentation> {
    vec![loop_of("sl2"), loop_of("mat2"), loop_of("heis3"), affine_sl2()]
}

fn element(rank: usize, max_d: u32) -> impl Strategy<Value = QElement> {
    prop::collection::vec((0..rank, 0..=max_d, -3i64..=3), 0..4)
        .prop_map(|terms| Element::from_terms(terms.into_iter().map(|(g, d, c)| (g, d, q(c)))))
}

/// A presentation from `samples()` with two elements whose torsion parts
/// carry no derivatives.
fn sample_with_pair() -> impl Strategy<Value = (usize, QElement, QElement)> {
    (0..4usize).prop_flat_map(|i| {
        let rank = samples()[i].rank();
        (Just(i), element(rank, 3), element(rank, 3))
    })
}

fn strip_torsion_derivatives(p: &QPresentation, e: &QElement) -> QElement {
    Element::from_terms(
        e.iter()
            .filter(|(g, d, _)| !p.is_torsion(*g) || *d == 0)
            .map(|(g, d, c)| (g, d, c.clone())),
    )
}

fn factorial(k: u32) -> Rational {
    (1..=k as i64).map(q).fold(q(1), |a, b| a * b)
}

/// `(D x)(n) b = -n x(n-1) b`, applied `k` times.
fn iterated_left_rule(p: &QPresentation, a: &QElement, b: &QElement, k: u32, n: u32) -> QElement {
    if k == 0 {
        return p.product(a, b, n);
    }
    if n == 0 {
        return Element::zero();
    }
    iterated_left_rule(p, a, b, k - 1, n - 1).scaled(&-q(n as i64))
}

fn two_step_associative(seed: u64) -> QPresentation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=3);
    let lower = n - rng.gen_range(1..n);
    let gens = (0..n).map(|i| GeneratorInfo::free(format!("g{i}"))).collect();
    let mut p = QPresentation::new(Kind::Associative, gens).unwrap();
    for g in 0..lower {
        for h in 0..lower {
            let locality = rng.gen_range(0..=3);
            p.set_locality(g, h, locality);
            for k in 0..locality {
                let mut v = Element::zero();
                for z in lower..n {
                    for d in 0..=2 {
                        if rng.gen_bool(0.4) {
                            v.add_term(z, d, q(rng.gen_range(-3..=3)));
                        }
                    }
                }
                p.set_product(g, h, k, v);
            }
        }
    }
    p
}

fn binom_table(max: usize) -> Vec<Vec<i128>> {
    let mut t = vec![vec![0i128; max + 1]; max + 1];
    for n in 0..=max {
        t[n][0] = 1;
        for k in 1..=n {
            t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
        }
    }
    t
}

#[test]
fn series_binomial_identity_matches_pascal_oracle() {
    let c = binom_table(32);
    let b = |n: i64, k: i64| if k < 0 || k > n { 0 } else { c[n as usize][k as usize] };
    let mut cases = 0;
    for m in 0..=8i64 {
        for n in 0..=8i64 {
            for i in 0..=m {
                for j in 0..=(i + n) {
                    cases += 1;
                    let lhs: i128 = (0..=i)
                        .map(|s| {
                            let t = b(m, s) * b(m - s, i - s) * b(n + s, j - i + s);
                            if (s + j) % 2 == 0 {
                                t
                            } else {
                                -t
                            }
                        })
                        .sum();
                    let rhs = b(m, i) * b(n, j) * if (i + j) % 2 == 0 { 1 } else { -1 };
                    assert_eq!(lhs, rhs, "m={m} n={n} i={i} j={j}");
                }
            }
        }
    }
    assert_eq!(cases, 3105);
    let r = check_series_binomial_identity(8);
    assert!(r.pass);
    assert_eq!(r.checked, cases);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_vanish_past_the_bound((i, a, b) in sample_with_pair(), extra in 0u32..4) {
        let p = &samples()[i];
        let (a, b) = (strip_torsion_derivatives(p, &a), strip_torsion_derivatives(p, &b));
        let n = p.product_bound(&a, &b) + extra;
        prop_assert!(p.product(&a, &b, n).is_zero());
        prop_assert!(p.nth_product(&a, &b, n as i64).unwrap().is_zero());
    }

    #[test]
    fn derivation_rule((i, a, b) in sample_with_pair(), n in 0u32..5) {
        let p = &samples()[i];
        let (a, b) = (strip_torsion_derivatives(p, &a), strip_torsion_derivatives(p, &b));
        let lhs = p.apply_derivation(&p.product(&a, &b, n), 1);
        let rhs = p.product(&p.apply_derivation(&a, 1), &b, n) + p.product(&a, &p.apply_derivation(&b, 1), n);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn left_rule_matches_iteration((i, a, b) in sample_with_pair(), k in 0u32..5, n in 0u32..7) {
        let p = &samples()[i];
        let a = Element::from_terms(a.iter().filter(|(g, d, _)| *d == 0 && !p.is_torsion(*g)).map(|(g, d, c)| (g, d, c.clone())));
        let b = strip_torsion_derivatives(p, &b);
        let closed = p.product(&p.apply_derivation(&a, k), &b, n);
        let iterated = iterated_left_rule(p, &a, &b, k, n).scaled(&(q(1) / factorial(k)));
        prop_assert_eq!(closed, iterated);
    }

    #[test]
    fn graded_products_are_homogeneous(
        affine in any::<bool>(),
        ca in prop::collection::vec(-2i64..=2, 4),
        cb in prop::collection::vec(-2i64..=2, 4),
        da in 0u32..3,
        db in 0u32..3,
        n in 0u32..4,
    ) {
        let mut p = if affine { affine_sl2() } else { loop_of("sl2") };
        if affine {
            p.set_weights(&[0, 0, 0, 1]);
        }
        p.graded = true;
        prop_assert!(validate_presentation(&p).pass);
        let free = |c: &[i64], d: u32| Element::from_terms((0..3).map(|g| (g, d, q(c[g]))));
        let (a, b) = (free(&ca, da), free(&cb, db));
        let target = n as i64 - da as i64 - db as i64;
        for (f, d, _) in p.product(&a, &b, n).iter() {
            prop_assert_eq!(p.weight(f) as i64 - d as i64, target);
        }
    }

    #[test]
    fn commutator_of_associative_is_lie(seed in any::<u64>()) {
        let p = two_step_associative(seed);
        prop_assert!(check_conformal_associativity(&p, 3, 3).pass);
        let lie = commutator_algebra(&p).unwrap();
        prop_assert!(validate_presentation(&lie).pass);
        prop_assert!(check_quasi_symmetry(&lie, false, 4).pass);
        prop_assert!(check_conformal_jacobi(&lie, 3, 3).pass);
        prop_assert!(check_coefficient_lie(&lie, (-2, 2)).pass);
    }

    #[test]
    fn quotients_validate(i in 0..3usize, coeffs in prop::collection::vec(-2i64..=2, 4)) {
        let p = [loop_of("sl2"), loop_of("heis3"), affine_sl2()][i].clone();
        let ideal = Element::from_terms((0..p.rank()).map(|g| (g, 0, q(coeffs[g]))));
        if let Ok(quot) = quotient(&p, &[ideal], 8) {
            prop_assert!(validate_presentation(&quot).pass);
            prop_assert!(check_conformal_jacobi(&quot, 2, 2).pass);
        }
    }
}

fn random_word(ctx: &EnvelopeContext<Rational>, rng: &mut ChaCha8Rng) -> ConfWord {
    let nb = ctx.basis().len();
    let len = rng.gen_range(1..=2);
    let prefix = (1..len).map(|_| (rng.gen_range(0..nb), rng.gen_range(0..=2))).collect();
    ConfWord {
        prefix,
        last: rng.gen_range(0..nb),
    }
}

fn random_expansion(ctx: &EnvelopeContext<Rational>, rng: &mut ChaCha8Rng) -> QWExpansion {
    let mut x = WExpansion::zero();
    for _ in 0..rng.gen_range(1..=2) {
        x.add_term(rng.gen_range(0..=1), random_word(ctx, rng), q(rng.gen_range(1..=3)));
    }
    // the rewriter normalizes words that break the ordering constraint
    let mut out = WExpansion::zero();
    for ((d, w), c) in &x.terms {
        let r = ctx.rewrite_to_w(&w.to_expr()).unwrap();
        out.add_scaled(&ctx.derivative(&r, *d), c);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn envelope_products_are_associative(seed in any::<u64>(), m in 0u32..2, n in 0u32..2) {
        let ctx = EnvelopeContext::from_generators(loop_of("sl2")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (random_expansion(&ctx, &mut rng), random_expansion(&ctx, &mut rng), random_expansion(&ctx, &mut rng));
        let lhs = ctx.preconf_product(&ctx.preconf_product(&x, &y, m).unwrap(), &z, n).unwrap();
        let mut rhs = WExpansion::zero();
        for s in 0..=m {
            let sign = if s % 2 == 0 { q(1) } else { q(-1) };
            let binom = (0..s).fold(q(1), |acc, t| acc * q((m - t) as i64) / q(t as i64 + 1));
            let inner = ctx.preconf_product(&y, &z, n + s).unwrap();
            rhs.add_scaled(&ctx.preconf_product(&x, &inner, m - s).unwrap(), &(sign * binom));
        }
        prop_assert!(lhs.all_normal() && rhs.all_normal());
        for k in -3..=3 {
            prop_assert_eq!(ctx.expansion_coefficient(&lhs, k), ctx.expansion_coefficient(&rhs, k), "k = {}", k);
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn envelope_filtration_is_compatible(seed in any::<u64>(), n in 0u32..3) {
        let alg = build_enveloping(loop_of("heis3"), Some(&[1, 1, 1]), 3, EmbedBounds::default()).unwrap();
        let ctx = alg.envelope();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (random_expansion(ctx, &mut rng), random_expansion(ctx, &mut rng));
        let product = ctx.preconf_product(&x, &y, n).unwrap();
        if let (Some(i), Some(j), Some(k)) = (ctx.degree_guarantee(&x), ctx.degree_guarantee(&y), ctx.degree_guarantee(&product)) {
            prop_assert!(k >= i + j + n as i64, "{} < {} + {} + {}", k, i, j, n);
        }
    }

    #[test]
    fn basis_expansion_is_unique(coeffs in prop::collection::vec((-3i64..=3, 0u32..3), 3)) {
        let alg = build_enveloping(loop_of("heis3"), Some(&[1, 1, 1]), 3, EmbedBounds::default()).unwrap();
        let ctx = alg.envelope();
        let a = Element::from_terms(coeffs.iter().enumerate().map(|(g, (c, d))| (g, *d, q(*c))));
        let terms = ctx.expand(&a).unwrap();
        prop_assert_eq!(ctx.evaluate(&terms), a.clone());
        prop_assert_eq!(ctx.expand(&ctx.evaluate(&terms)).unwrap(), terms);
    }
}

#[test]
fn products_of_high_degree_lie_in_the_ideal() {
    let alg = build_enveloping(loop_of("heis3"), Some(&[1, 1, 1]), 3, EmbedBounds::default()).unwrap();
    let ctx = alg.envelope();
    let mut checked = 0;
    for (a, ba) in ctx.basis().iter().enumerate() {
        for (b, bb) in ctx.basis().iter().enumerate() {
            let from = (alg.r() - ba.degree - bb.degree).max(0) as u32;
            for n in from..from + 3 {
                let x = ctx
                    .preconf_product(
                        &WExpansion::word(ConfWord::single(a)),
                        &WExpansion::word(ConfWord::single(b)),
                        n,
                    )
                    .unwrap();
                assert!(alg.in_ideal(&x), "{}({n}){}", ba.name, bb.name);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}
