use conformal_core::ConformalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] ConformalError),
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Json { .. } | CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) => match e {
                ConformalError::StepBudgetExceeded(_)
                | ConformalError::Inconclusive(_)
                | ConformalError::InfiniteDegree(_)
                | ConformalError::NotInSpan(_) => EXIT_BUDGET,
                ConformalError::HypothesisViolated { .. } | ConformalError::NotCentral(_) => EXIT_FAIL,
                _ => EXIT_INPUT,
            },
        }
    }
}
