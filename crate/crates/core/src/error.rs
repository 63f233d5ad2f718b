use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario violates one of its structural or numeric invariants.
    #[error("invalid scenario: {0}")]
    Validation(String),

    /// A function argument is outside its mathematical domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("empty market for task ({task}, {state})")]
    EmptyMarket { task: usize, state: usize },

    #[error("demand solver did not converge for agent {agent} in state {state}")]
    DemandNonConvergence { agent: usize, state: usize },

    #[error("weighted matching needs at most as many tasks as agents (tasks = {tasks}, agents = {agents})")]
    MatchingUndefined { tasks: usize, agents: usize },

    #[error("coalition enumeration refused: {agents} agents exceeds the limit of {limit}")]
    TooManyAgents { agents: usize, limit: usize },

    #[error("scenario parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("unknown built-in scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
