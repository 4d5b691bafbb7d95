//! Closed-form eigenvalue/eigenvector joint densities for non-Hermitian
//! Gaussian random matrices, and the Monte-Carlo machinery that checks them.
//!
//! Two ensembles are covered:
//!
//! * the interpolating real/complex Ginibre ensemble
//!   `X = G1·√((1+τ)/2) + i·G2·√((1−τ)/2)`, see [`interp`];
//! * the additively deformed complex Ginibre ensemble `X = G + A`, see
//!   [`deform`].
//!
//! All densities use the *counting* convention: integrated over the complex
//! plane they give `N`, the expected number of eigenvalues, which is what a
//! histogram of every eigenvalue of every sampled matrix measures.

pub mod cli;
pub mod config;
pub mod deform;
pub mod ensemble;
pub mod error;
pub mod interp;
pub mod linalg;
pub mod quad;
pub mod specfn;
pub mod verify;

pub use config::{Tolerances, TOL};
pub use error::{Error, Result};
pub use num_complex::Complex64;
