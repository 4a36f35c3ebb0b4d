// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator on {n_qubits} qubits exceeds the dense limit of {limit} qubits")]
    Capacity { n_qubits: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("expectation value has non-negligible imaginary part {imag:.3e}")]
    ComplexExpectation { imag: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator product has a non-real coefficient on {term}")]
    NonRealProduct { term: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("equation weight {0} is not strictly positive")]
    NonPositiveWeight(f64),

    #[error("no built-in instance for {0} (built-ins: 21, 77, 91, 187, 703, 2479)")]
    UnsupportedInstance(u64),

    #[error("{omega} is not a valid factoring target: {reason}")]
    InvalidOmega { omega: u64, reason: &'static str },

    #[error("problem Hamiltonian has no zero-energy assignment (minimum {min_energy})")]
    NoZeroEnergy { min_energy: f64 },

    #[error("ambiguous readout: bit `{bit}` has expectation {value:.3}")]
    AmbiguousReadout { bit: String, value: f64 },

    #[error("factorization of {omega} failed: {detail}")]
    FactorizationFailed { omega: u64, detail: String },

    #[error("state norm drifted to {norm:.3e}")]
    NormDrift { norm: f64 },

    #[error("density-matrix trace drifted to {trace:.3e}; increase the step count")]
    TraceDrift { trace: f64 },

    #[error("schedule evaluated at t = {t} outside [0, {total_time}]")]
    TimeOutOfRange { t: f64, total_time: f64 },

    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("term {term} is not a product of Z and identity factors")]
    NonZTerm { term: String },

    #[error("term {term} couples more than four qubits")]
    CouplingTooHigh { term: String },

    #[error("population tracking needs a pure-state trajectory")]
    MixedTrajectory,

    #[error("every level is degenerate with the ground state")]
    DegenerateSpectrum,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that mean the run finished but did not yield factors.
    pub fn is_factorization_failure(&self) -> bool {
        matches!(
            self,
            Error::AmbiguousReadout { .. } | Error::FactorizationFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
