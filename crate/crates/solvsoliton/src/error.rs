//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, validation and the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {found} does not match algebra dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("structure constants violate antisymmetry at ({i},{j},{k}): {a} vs {b}")]
    AntisymmetryViolation {
        i: usize,
        j: usize,
        k: usize,
        a: f64,
        b: f64,
    },

    #[error("Jacobi identity fails with residual {residual:.3e} (tolerance {tol:.3e})")]
    JacobiViolation { residual: f64, tol: f64 },

    #[error("operation requires a solvable Lie algebra")]
    NotSolvable,

    #[error("operation requires a nilpotent Lie algebra")]
    NotNilpotent,

    #[error("gradient identity is only asserted for unimodular algebras")]
    NotUnimodular,

    #[error("matrix is not a derivation (Leibniz residual {residual:.3e})")]
    NotADerivation { residual: f64 },

    #[error("semidirect generators do not commute (residual {residual:.3e})")]
    NonCommutingGenerators { residual: f64 },

    #[error("metric matrix is not symmetric")]
    MetricNotSymmetric,

    #[error("metric is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    MetricNotPositiveDefinite { min_eig: f64 },

    #[error("trace system for the pre-Einstein derivation is singular (residual {residual:.3e})")]
    SingularSystem { residual: f64 },

    #[error("modification source does not classify as a solvsoliton (class {class})")]
    SourceNotSolvsoliton { class: String },

    #[error("modification conditions violated: {detail}")]
    ConditionsViolated { detail: String },

    #[error("modified bracket failed an internal consistency check: {detail}")]
    JacobiFailure { detail: String },

    #[error("modified algebra carries no source provenance")]
    MissingProvenance,

    #[error("flow trace has fewer than 3 samples")]
    TraceTooShort,

    #[error("classification verdict does not carry the data required here: {detail}")]
    InvalidVerdict { detail: String },

    #[error("parse error: {detail}")]
    ParseError { detail: String },

    #[error("document violates the schema: {detail}")]
    SchemaError { detail: String },

    #[error("unknown fixture '{name}'")]
    UnknownFixture { name: String },

    #[error("internal contract violation: {detail}")]
    ContractViolation { detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
