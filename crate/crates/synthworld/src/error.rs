use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pose ({x}, {y}) is inside an obstacle")]
    PoseInsideObstacle { x: f64, y: f64 },
    #[error("invalid scene plan: {0}")]
    InvalidPlan(String),
    #[error("scene plan text: {0}")]
    Plan(String),
    #[error("class table has no {0:?} class")]
    MissingClass(String),
    #[error("invalid walk: {0}")]
    InvalidWalk(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("policy failed: {0}")]
    Policy(String),
    #[error(transparent)]
    Core(#[from] sightwalk_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
