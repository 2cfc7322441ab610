//! Exact computation with conformal algebras.
//!
//! A conformal algebra is presented by finitely many generators over `k[D]`,
//! pairwise locality bounds and a table of `n`-products. On top of that this
//! crate evaluates products, checks the conformal identities, builds loop,
//! affine, commutator and quotient algebras, works in the coefficient algebra
//! and its universal enveloping algebra, computes locality functions, and
//! constructs an associative conformal envelope for Lie conformal algebras
//! whose monomials of large weight vanish.
//!
//! The math is generic over an exact field `S: Scalar`; the aliases at the
//! crate root fix `S = Rational`.

pub mod checks;
pub mod coeff;
pub mod constructions;
pub mod element;
pub mod embed;
pub mod envelope;
pub mod error;
pub mod linalg;
pub mod locality;
pub mod presentation;
pub mod scalar;

pub use error::{ConformalError, Result};
pub use scalar::Scalar;

/// Arbitrary precision rationals.
pub type Rational = num_rational::BigRational;

pub type QElement = element::Element<Rational>;
pub type QPresentation = presentation::Presentation<Rational>;
pub type QFiniteAlgebra = constructions::FiniteAlgebra<Rational>;
pub type QCoeffElement = coeff::CoeffElement<Rational>;
pub type QEnvelopeContext = envelope::EnvelopeContext<Rational>;
pub type QUElement = envelope::UElement<Rational>;
pub type QWExpansion = envelope::WExpansion<Rational>;
pub type QEmbedContext = embed::EmbedContext<Rational>;
pub type QEnvelopingAlgebra = embed::EnvelopingAlgebra<Rational>;
