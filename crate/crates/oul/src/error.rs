//! Crate-wide error type and exit-code mapping.
//!
//! Failures fall into two families that the command-line front end maps to
//! distinct process exit codes:
//!
//! * **validation** (exit code 2) — the input itself is unusable: malformed
//!   config files, non-Hermitian Hamiltonians, unstable drift matrices,
//!   out-of-range orders, violated preconditions.  Nothing was computed.
//! * **numerical** (exit code 3) — the input passed validation but a solver
//!   could not deliver a trustworthy answer: near-defective eigenproblems,
//!   singular linear systems, overflow, uncontrolled truncation leakage.

use num_complex::Complex64;
use thiserror::Error;

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix contains NaN or infinite entries, or an algorithm produced
    /// them (overflow in a matrix exponential, for instance).
    #[error("matrix has non-finite entries")]
    NonFinite,

    /// The eigenvector matrix is too ill-conditioned for spectral methods to
    /// be meaningful; the matrix is numerically defective.
    #[error("matrix is numerically non-diagonalizable (eigenvector condition {condition:.3e} exceeds 1e8)")]
    NonDiagonalizable { condition: f64 },

    /// A drift matrix has an eigenvalue with non-positive real part, so the
    /// process has no normalizable stationary state.
    #[error("drift matrix is not stable: eigenvalue {eigenvalue} has real part <= 1e-12")]
    Unstable { eigenvalue: Complex64 },

    /// The Kronecker-sum system of the stationary covariance equation is
    /// singular (eigenvalue sum crossing zero).
    #[error("Kronecker sum of the drift matrix is singular; stationary covariance equation has no unique solution")]
    SingularKroneckerSum,

    /// A matrix required to be (complex-)symmetric is not.
    #[error("matrix is not symmetric (max asymmetry {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    /// The split-Cholesky factorization hit a vanishing pivot and the
    /// square-root fallback also failed to produce a usable factor.
    #[error("whitening factorization failed: pivot magnitude {pivot:.3e} too small")]
    NearSingularPivot { pivot: f64 },

    /// A covariance matrix is singular or indefinite where positivity is
    /// required.
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,

    /// A polynomial order exceeds the supported recurrence range.
    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    /// A composition does not sum to the order whose multinomial coefficient
    /// was requested.
    #[error("composition sums to {got} where {expected} was required")]
    PartsMismatch { expected: usize, got: usize },

    /// The bilinear generating-function kernel is evaluated too close to its
    /// singular locus rho^2 = 1.
    #[error("kernel parameter rho is too close to +/-1 (|1 - rho^2| <= 1e-12)")]
    RhoTooCloseToOne,

    /// A quadrature order outside the tabulated Golub-Welsch range.
    #[error("quadrature order {order} outside supported range 2..=128")]
    OrderOutOfRange { order: usize },

    /// A Fock-space cutoff that would exhaust memory or LAPACK patience.
    #[error("Fock cutoff {requested} exceeds the supported maximum {max} for this mode count")]
    CutoffTooLarge { requested: usize, max: usize },

    /// Truncation leakage: the evolved density matrix accumulated weight at
    /// the edge of the Fock cutoff.
    #[error("probability mass {mass:.3e} leaked to the Fock-space cutoff boundary (limit 1e-6)")]
    TailMass { mass: f64 },

    /// A coherent-state amplitude too large for the supplied Fock cutoff.
    #[error("|alpha|^2 = {amplitude_sq:.3} exceeds cutoff/4 = {limit:.3}; enlarge the Fock cutoff")]
    AmplitudeTooLarge { amplitude_sq: f64, limit: f64 },

    /// Time evolution drifted away from Hermiticity beyond repair.
    #[error("evolved density lost Hermiticity (drift {drift:.3e} > 1e-7)")]
    HermiticityDrift { drift: f64 },

    /// Finite-difference grid too coarse for the advertised O(h^2) accuracy.
    #[error("grid spacing {spacing:.3} exceeds the maximum 0.05 for second-order stencils")]
    GridTooCoarse { spacing: f64 },

    /// A structural precondition of an operation does not hold for the given
    /// model (for example a factorized propagator requested for a model whose
    /// normal form does not decouple).
    #[error("precondition not met: {reason}")]
    PreconditionNotMet { reason: String },

    /// Config file could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// Config file parsed but a field is invalid.
    #[error("invalid field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// I/O failure reading or writing a file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A dense linear-algebra backend call failed.
    #[error("numerical backend failure: {reason}")]
    Numerical { reason: String },
}

impl Error {
    /// Process exit code for the CLI: 2 for validation failures, 3 for
    /// numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unstable { .. }
            | Error::NotSymmetric { .. }
            | Error::OrderTooLarge { .. }
            | Error::PartsMismatch { .. }
            | Error::RhoTooCloseToOne
            | Error::OrderOutOfRange { .. }
            | Error::CutoffTooLarge { .. }
            | Error::AmplitudeTooLarge { .. }
            | Error::GridTooCoarse { .. }
            | Error::PreconditionNotMet { .. }
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Io(_) => 2,
            Error::NonFinite
            | Error::NonDiagonalizable { .. }
            | Error::SingularKroneckerSum
            | Error::NearSingularPivot { .. }
            | Error::SingularCovariance
            | Error::TailMass { .. }
            | Error::HermiticityDrift { .. }
            | Error::Numerical { .. } => 3,
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Numerical { reason: e.to_string() }
    }
}
