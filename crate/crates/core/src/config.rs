//! Numerical tolerances used across the crate, gathered in one record.

use serde::{Deserialize, Serialize};

/// Every threshold the algorithms consult. Defaults are the documented values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Max-norm asymmetry accepted for a density matrix.
    pub hermitian: f64,
    /// |tr ρ − 1| accepted for a density matrix.
    pub trace: f64,
    /// Most negative eigenvalue accepted for a density matrix.
    pub psd: f64,
    /// Asymmetry accepted on input to the eigensolver (relative to max(1, ‖M‖)).
    pub eig_hermitian: f64,
    /// Jacobi sweep budget.
    pub jacobi_max_sweeps: usize,
    /// Minimum eigenvalue for ln ρ and 1/ρ to be evaluated.
    pub faithful_floor: f64,
    /// Eigenvalues below this count as exact zeros in 0 ln 0 = 0.
    pub eigen_zero: f64,
    /// Largest violation the post-step repair will fix silently.
    pub repair_tol: f64,
    /// Shell-to-shell convergence threshold for the Σ series.
    pub conv_tol: f64,
    /// Default truncation order of the Σ series.
    pub k_max: usize,
    /// Branches with probability at or below this carry no filtered state.
    pub prob_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-12,
            psd: 1e-12,
            eig_hermitian: 1e-10,
            jacobi_max_sweeps: 64,
            faithful_floor: 1e-10,
            eigen_zero: 1e-14,
            repair_tol: 1e-6,
            conv_tol: 1e-10,
            k_max: 40,
            prob_floor: 1e-14,
        }
    }
}
