use alloc::string::String;

use crate::factor::VarId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("variable {var} has cardinality {left} in one factor and {right} in another")]
    CardinalityMismatch { var: VarId, left: usize, right: usize },

    #[error("variable {0} is not in the factor scope")]
    NotInScope(VarId),

    #[error("variable {0} appears twice in a scope")]
    DuplicateScopeVariable(VarId),

    #[error("table has {actual} entries but its scope needs {expected}")]
    TableSize { expected: usize, actual: usize },

    #[error("table entry {index} is {value}; entries must be finite and nonnegative")]
    InvalidEntry { index: usize, value: f64 },

    #[error("variable {var} must have cardinality >= 2, got {cardinality}")]
    Cardinality { var: VarId, cardinality: usize },

    #[error("variable {0} is not binary")]
    NotBinary(VarId),

    #[error("unknown variable {0}")]
    UnknownVariable(VarId),

    #[error("state {state} is out of range for variable {var} (cardinality {cardinality})")]
    StateOutOfRange { var: VarId, state: usize, cardinality: usize },

    #[error("variable {var} observed twice with states {first} and {second}")]
    ConflictingEvidence { var: VarId, first: usize, second: usize },

    #[error("{what} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { what: String, value: f64 },

    #[error("{0}")]
    Parameter(String),

    #[error("network is not well formed: {0}")]
    InvalidNetwork(String),

    #[error("query target {0} is also observed")]
    TargetObserved(VarId),

    #[error("elimination order does not cover exactly the unobserved non-target variables")]
    InvalidOrder,

    #[error("evidence has zero probability")]
    InconsistentEvidence,

    #[error("joint state space of {states} exceeds the enumeration limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("rubric: {0}")]
    Rubric(String),

    #[error("missing inhibition for task {task}, answer {cell}, skill {skill}")]
    MissingInhibition { task: String, cell: String, skill: String },

    #[error("data: {0}")]
    Data(String),

    #[error("evidence from task {task} makes the observations inconsistent")]
    InconsistentTask { task: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
}
