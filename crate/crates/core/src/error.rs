use thiserror::Error;

use crate::encounter::AgentId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("arc length {l} outside path of length {length}")]
    ArcLengthOutOfRange { l: f64, length: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
    #[error("collision point for agent {observer} lies behind it (l_coll {l_coll} < l {l})")]
    CollisionBehind {
        observer: AgentId,
        l_coll: f64,
        l: f64,
    },
    #[error("collision point observed by {found}, expected {expected}")]
    ForeignCollisionPoint { expected: AgentId, found: AgentId },
    #[error("planner produced no candidate profiles at step {step}")]
    PlannerAbort { step: usize },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
