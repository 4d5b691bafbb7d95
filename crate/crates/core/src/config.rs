//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Default absolute tolerance of one-dimensional quadratures.
    pub quad_abs: f64,
    /// Default relative tolerance of one-dimensional quadratures.
    pub quad_rel: f64,
    /// Eigenpair residual bound, relative to the Frobenius norm of the matrix.
    pub residual: f64,
    /// Largest admissible |t| of the zero mode of `T_A(v)`, relative to ‖T‖.
    pub zero_mode: f64,
    /// Admissible imaginary part of a JPD evaluated through complex arithmetic.
    pub imag_part: f64,
    /// Admissible |l*r − 1| for rank-one deformations.
    pub biorthogonality: f64,
    /// Admissible |v*v − 1| for unit vectors.
    pub unit_norm: f64,
    /// Relative gap below which |z − a_i|² = |z − a_k|² counts as degenerate.
    pub degeneracy: f64,
    /// Eigenvalue spacing below which a record is flagged degenerate.
    pub eigen_spacing: f64,
    /// Overlap slack: u may exceed 1 by this much through rounding.
    pub overlap_slack: f64,
    /// Fraction of skipped matrices that fails a Monte-Carlo run.
    pub max_skip_fraction: f64,
}

pub const TOL: Tolerances = Tolerances {
    quad_abs: 1e-10,
    quad_rel: 1e-12,
    residual: 1e-9,
    zero_mode: 1e-8,
    imag_part: 1e-9,
    biorthogonality: 1e-10,
    unit_norm: 1e-12,
    degeneracy: 1e-9,
    eigen_spacing: 1e-12,
    overlap_slack: 1e-10,
    max_skip_fraction: 1e-3,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}
