use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("empty bag: {0}")]
    EmptyBag(&'static str),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid state: {0}")]
    State(&'static str),
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("training diverged at epoch {epoch}: total loss is not finite")]
    Divergence { epoch: usize },
    #[error("AUC undefined: scores need at least one positive and one negative label")]
    UndefinedAuc,
    #[error("gradient check invalid: {0}")]
    GradCheck(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}
