use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid coefficient: {0}")]
    Coefficient(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution too coarse at y = {position}: {detail}")]
    ResolutionTooCoarse { position: f64, detail: String },
    #[error("step size error: {0}")]
    StepSize(String),
    #[error("maximum principle violated: {0}")]
    MaximumPrinciple(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("census overflow: {0} atoms")]
    CensusOverflow(usize),
    #[error("rejected parameter {name}: {constraint}")]
    Parameter { name: &'static str, constraint: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}
