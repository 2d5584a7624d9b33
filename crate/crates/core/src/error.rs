use thiserror::Error;

use crate::auction::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("N ≥ 2 required (got {0} bidder(s))")]
    TooFewBidders(usize),

    #[error("bidder {index} out of range for {n} bidders")]
    BidderOutOfRange { index: usize, n: usize },

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("tick value {0} exceeds the supported maximum")]
    TickOverflow(u128),

    #[error("explicit tie-break policy has no choice for argmax set {0:?}")]
    MissingTieBreak(Vec<usize>),

    #[error("explicit tie-break policy chose {choice} outside argmax set {set:?}")]
    ChoiceOutsideArgmax { choice: usize, set: Vec<usize> },

    #[error("profiles differ at index {0}, not only at the deviating bidder")]
    ProfilesDifferElsewhere(usize),

    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mismatched sampling parameters: {0}")]
    SamplingMismatch(String),

    #[error("state budget exceeded: {required} evaluations required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("no tie-break policies given")]
    NoPolicies,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
