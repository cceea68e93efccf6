//! Spectral theory of multidimensional Ornstein-Uhlenbeck processes and of
//! quadratic bosonic Lindblad master equations in the Husimi representation.
//!
//! The crate is organized in layers:
//!
//! * [`tensor_linalg`] — dense complex matrices, sorted eigendecompositions,
//!   stationary-covariance (Lyapunov) solves, whitening factorizations and
//!   matrix exponentials.
//! * [`hermite_mehler`] — probabilists' Hermite polynomials, multi-index
//!   combinatorics and the bilinear generating-function kernel.
//! * [`ou_core`] — classical Ornstein-Uhlenbeck processes: drift/diffusion
//!   models, symplectic normal forms, eigenvalue ladders, left/right
//!   eigenfunctions, transition densities and covariance trajectories.
//! * [`lindblad_core`] — quadratic bosonic Lindblad equations mapped to
//!   complex Ornstein-Uhlenbeck form: Husimi-representation drift/diffusion,
//!   stationary Husimi functions, spectra, eigenfunctions and propagators.
//! * [`oracles`] — independent brute-force references: Monte-Carlo sampling
//!   of the stochastic dynamics, truncated Fock-space Liouvillians,
//!   finite-difference generator stencils and Gauss-Hermite quadrature.
//! * [`cli_io`] — config parsing, CSV/JSON table output and the command
//!   implementations behind the `oul` binary, including the `verify`
//!   self-check suite.

pub mod error;
pub mod tensor_linalg;
pub mod hermite_mehler;
pub mod ou_core;
pub mod lindblad_core;
pub mod oracles;
pub mod cli_io;

pub use error::{Error, Result};
