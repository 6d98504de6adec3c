use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chain specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("found {found} real quasimomenta, expected {expected_unbroken} or {expected_broken}")]
    RootCountMismatch {
        found: usize,
        expected_unbroken: usize,
        expected_broken: usize,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("operation requires the {required} phase (gamma = {gamma}, gamma_c = {gamma_c})")]
    PhaseError {
        required: &'static str,
        gamma: f64,
        gamma_c: f64,
    },

    #[error("quasimomentum k = {k} yields a null wavefunction")]
    NullState { k: f64 },

    #[error("state is self-orthogonal under the PT pairing; it cannot be normalized")]
    SelfOrthogonal,

    #[error("asymptotic formula outside its domain: {0}")]
    DomainError(String),

    #[error("metric is not real after gauging (imaginary residue {residue:e})")]
    GaugeError { residue: f64 },

    #[error("canonical metric basis: {0}")]
    DegeneracyError(String),

    #[error("equivalent Hamiltonian lacks bipartite block form (diagonal-block residue {residue:e})")]
    StructureError { residue: f64 },

    #[error("shifted system is numerically singular at lambda = {lambda}")]
    SingularSolve { lambda: String },
}

pub type Result<T> = std::result::Result<T, Error>;
