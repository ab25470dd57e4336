use crate::game::Coalition;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("variable count {n} exceeds capacity {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lexical error at position {pos}: unexpected character {ch:?}")]
    Lex { pos: usize, ch: char },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier {name:?} at position {pos}")]
    UnknownIdent { pos: usize, name: String },

    #[error("domain error at node {node}: {op} of {value}")]
    Domain {
        node: usize,
        op: &'static str,
        value: f64,
    },

    #[error("evaluation failed at coalition {coalition:?}: {source}")]
    Evaluation {
        coalition: Coalition,
        #[source]
        source: Box<Error>,
    },

    #[error("backend does not support {0}")]
    Capability(&'static str),

    #[error("training diverged: loss is not finite at epoch {epoch}")]
    Training { epoch: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_coalition(self, coalition: Coalition) -> Error {
        Error::Evaluation {
            coalition,
            source: Box::new(self),
        }
    }
}
