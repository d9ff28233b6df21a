use thiserror::Error;

use crate::metric::Rat;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eps = {eps} is outside the admissible range {range}")]
    EpsOutOfRange { eps: f64, range: &'static str },

    #[error("operator is not self-adjoint (defect {defect:e})")]
    NotSelfAdjoint { defect: f64 },

    #[error("{which} = {value:e} is not below {bound:e}")]
    ResidualTooLarge {
        which: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("propagation {propagation} exceeds {limit}")]
    PropagationExceeded { propagation: Rat, limit: Rat },

    #[error("{what}: norm {norm:e} exceeds {bound:e}")]
    NormBoundExceeded {
        what: &'static str,
        norm: f64,
        bound: f64,
    },

    #[error("polynomial degree {needed} exceeds the cap {cap}")]
    DegreeCapExceeded { needed: usize, cap: usize },

    #[error("{what}: block ({row}, {col}) of norm {norm:e} lies outside {predicate}")]
    SupportViolation {
        what: String,
        predicate: String,
        row: usize,
        col: usize,
        norm: f64,
    },

    #[error("homotopy step {index} has size {step:e}, bound {bound:e}")]
    HomotopyStep { index: usize, step: f64, bound: f64 },

    #[error("scalar part has rank {found}, expected {expected}")]
    ScalarRank { expected: usize, found: usize },

    #[error("decomposition pair: {0}")]
    Pair(String),

    #[error("{0} did not converge")]
    NotConverged(&'static str),
}
