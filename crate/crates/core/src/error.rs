use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the composition library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),

    #[error("output `{output}` does not match input `{input}`: not a robust causal link")]
    FailedMatch { output: String, input: String },

    #[error("unknown service id {0}")]
    UnknownService(usize),

    #[error("choice probabilities sum to {0}, expected 1")]
    ChoiceProbabilities(f64),

    #[error("invalid composite expression: {0}")]
    InvalidExpression(String),

    #[error("graph has no Start -> End connectivity")]
    Disconnected,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty repository")]
    EmptyRepository,

    #[error("duplicate service id {0}")]
    DuplicateServiceId(usize),

    #[error("service ids must be dense 0..{expected}, found id {found}")]
    NonDenseServiceIds { expected: usize, found: usize },

    #[error("service {service}: dangling concept `{concept}` not declared in the taxonomy")]
    DanglingConcept { service: usize, concept: String },

    #[error("service {service}: QoS field `{field}` out of range: {value}")]
    QosOutOfRange {
        service: usize,
        field: &'static str,
        value: f64,
    },

    #[error("task unsolvable: outputs {missing:?} cannot be produced from the repository")]
    TaskUnsolvable { missing: Vec<String> },

    #[error("undecodable permutation: scan exhausted with End unsatisfied")]
    UndecodablePermutation,

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("permutation universe mismatch: expected {expected} indexes, got {got}")]
    UniverseMismatch { expected: usize, got: usize },

    #[error("wsc import: unrecognized element `{0}`")]
    WscSchema(String),

    #[error("wsc import: service `{0}` is missing QoS attributes")]
    WscMissingQos(String),

    #[error("mixed permutation dimensions: {0} vs {1}")]
    MixedDimensions(usize, usize),

    #[error("relevant set of {0} services is too large for exhaustive search (max {1})")]
    RelevantTooLarge(usize, usize),

    #[error("exhaustive search exceeded its state budget ({0} states)")]
    OracleBudget(u64),

    #[error("synthetic generation failed after {0} attempts")]
    GenerationRetries(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("run failed (task `{task}`, algorithm `{algorithm}`, seed {seed}): {source}")]
    RunFailed {
        task: String,
        algorithm: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}
