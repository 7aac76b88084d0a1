use thiserror::Error;

/// Errors surfaced by the analysis engine.
///
/// Structural violations inside a history (missing matching send, broken
/// transitivity, ...) are not errors; they are reported as data by
/// `history::validate_history`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate event id `{0}` in universe")]
    DuplicateEvent(String),
    #[error("unknown event id `{0}`")]
    UnknownEvent(String),
    #[error("event `{0}` is absent from the history")]
    AbsentEvent(String),
    #[error("causal order has a cycle through `{0}`")]
    OrderCycle(String),
    #[error("histories belong to different universes")]
    UniverseMismatch,
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("history is not a prefix of the scenario ground")]
    NotAPrefix,
    #[error("history is not admissible for the given input prefix")]
    NotAdmissible,
    #[error("input history contains non-input events")]
    NonInputEvents,
    #[error("exhaustive enumeration limited to {limit} events, universe has {actual}")]
    ExhaustiveTooLarge { limit: usize, actual: usize },

    #[error("outcome {0} is not an element of the domain")]
    NonMemberOutcome(String),
    #[error("domain carrier has {actual} elements, exceeding the cap of {cap}")]
    CarrierTooLarge { actual: usize, cap: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("no observation table entry for history fingerprint `{0}`")]
    TableMissing(String),
    #[error("outcome {0} is not admitted at the history")]
    OutcomeNotAdmitted(String),

    #[error("realizable history `{0}` has no exposure entry")]
    MissingExposure(String),
    #[error("realizable history `{0}` is not admissible for its input prefix")]
    RealizableNotAdmissible(String),
    #[error("history is not realizable for the given input prefix")]
    NotRealizable,
    #[error("implementation search space of {actual} candidates exceeds the cap of {cap}")]
    SearchCapExceeded { actual: u128, cap: u128 },
    #[error("implementation is not coordination-free; no induced order exists")]
    NotCoordinationFree,

    #[error("unsafe rule: head variable `{0}` does not occur in a positive body atom")]
    UnsafeRule(String),
    #[error("program is not stratifiable: negative cycle through `{0}`")]
    Unstratifiable(String),

    #[error("partition cut is not downward closed in the ground history")]
    CutNotDownwardClosed,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no witness available: {0}")]
    NoWitness(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
