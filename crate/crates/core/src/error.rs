use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no inverse of zero")]
    ZeroInverse,

    #[error("singular system: rank {rank} of {size}")]
    Singular { rank: usize, size: usize },

    /// Code or layout parameters out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Parameters outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("insufficient symbols: have {have}, need {need}")]
    InsufficientSymbols { have: usize, need: usize },

    #[error("inconsistent symbols: position {position} disagrees with the decoded message")]
    InconsistentSymbols { position: usize },

    #[error("systematic cells immutable: cannot piggyback onto node {node}, stripe {stripe}")]
    SystematicImmutable { node: usize, stripe: usize },

    #[error("piggyback causality violation: node {node}, stripe {stripe} depends on stripe {source_stripe}")]
    CausalityViolation { node: usize, stripe: usize, source_stripe: usize },

    #[error("undecodable node set {0:?}")]
    UndecodableNodeSet(Vec<usize>),

    /// A condition the construction guarantees did not hold.
    #[error("internal invariant failure: {0}")]
    Invariant(String),

    #[error("unrecoverable: {0}")]
    Unrecoverable(String),

    #[error("node {node}: {source}")]
    NodeIo {
        node: usize,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
}
