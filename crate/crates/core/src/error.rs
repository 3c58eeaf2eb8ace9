use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("feature vector has {got} values but the schema declares {expected}")]
    SchemaLength { expected: usize, got: usize },
    #[error("feature `{name}` has value {value}, outside its declared range")]
    FeatureOutOfRange { name: String, value: f64 },
    #[error("decision function produced {0}, decisions must be finite and positive")]
    NonPositiveDecision(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("no actions available: the state is terminal")]
    TerminalState,
    #[error("action `{action}` is not legal in state {state}")]
    IllegalAction { action: String, state: String },
    #[error("policy chose illegal action `{action}` at step {step}")]
    IllegalPolicyAction { step: usize, action: String },
    #[error("transition at step {step} neither consumed resources nor ended the episode")]
    NoProgress { step: usize },
    #[error("search expanded more than {cap} states (deepest level reached: {depth})")]
    BudgetExceeded { cap: usize, depth: u32 },
    #[error("unsupported domain: {0}")]
    Unsupported(String),
}
