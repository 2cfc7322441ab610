use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConformalError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator index {0} out of range")]
    GeneratorOutOfRange(usize),
    #[error("negative product index {0}; negative indices only exist in the coefficient algebra")]
    NegativeIndex(i64),
    #[error("torsion order {order} on generator `{name}` is unsupported (only 0 or 1)")]
    UnsupportedTorsion { name: String, order: u32 },
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("invalid finite algebra: {0}")]
    InvalidAlgebra(String),
    #[error("unbounded ideal: {0}")]
    UnboundedIdeal(String),
    #[error("presentation is invalid: {0}")]
    InvalidPresentation(String),
    #[error("rewriting step budget of {0} exceeded")]
    StepBudgetExceeded(usize),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("hypothesis violated: nonzero monomial of weight {weight} >= r: {witness}")]
    HypothesisViolated { weight: i64, witness: String },
    #[error("element has infinite degree (lies in the D-torsion/L_inf part): {0}")]
    InfiniteDegree(String),
    #[error("centrality failure for torsion-ideal basis element {0}")]
    NotCentral(String),
    #[error("element is not in the span of the chosen basis: {0}")]
    NotInSpan(String),
}

pub type Result<T> = std::result::Result<T, ConformalError>;
