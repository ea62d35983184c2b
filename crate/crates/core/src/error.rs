use thiserror::Error;

use crate::game::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("reputation has {got} sale probabilities, instance has {expected} rounds")]
    ReputationLength { expected: usize, got: usize },

    #[error("probability {name} = {value} is outside [0, 1]")]
    Probability { name: String, value: f64 },

    #[error("round count must be at least 1")]
    ZeroRounds,

    #[error("custom decay table is invalid: {0}")]
    DecayTable(String),

    #[error("policy is not a threshold policy: {0}")]
    NonThresholdPolicy(String),

    #[error("case {case} is out of range 1..={rounds}")]
    CaseOutOfRange { case: usize, rounds: usize },

    #[error("enumeration over {rounds} rounds exceeds the budget of {max}")]
    EnumerationBudget { rounds: usize, max: usize },

    #[error("search budget exceeded: {needed} evaluations requested, limit {limit}")]
    SearchBudget { needed: u128, limit: u128 },

    #[error("linear program has {0} variables, limit is 64")]
    LpDimension(usize),

    #[error("malformed linear program: {0}")]
    LpShape(String),

    #[error("simplex did not terminate within {0} pivots")]
    LpIterationLimit(usize),

    #[error("x point violates 0 <= x[j+1] <= x[j] <= 1 at index {0}")]
    ChainViolation(usize),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{}: {}", v.path, v.message))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
