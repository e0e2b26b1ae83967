//! Dense complex operator algebra on small Hilbert spaces.

mod density;
mod eig;
mod functions;
mod matrix;

pub use density::{repair_state, trace_distance, validate_density, DensityMatrix, RepairPolicy};
pub use eig::{hermitian_eig, hermitian_eig_with, SpectralDecomposition};
pub use functions::{
    ad_pow, ad_powers, ensure_faithful, exp_anti_hermitian, exp_hermitian, matrix_function_psd,
    spectral_function, MatrixFunction,
};
pub use matrix::{anticommutator, commutator, pauli, vector_norm, ComplexMatrix};

use crate::error::{Error, Result};
use crate::real::{Real, C};

fn check_product_dim<T: Real>(m: &ComplexMatrix<T>, da: usize, db: usize) -> Result<()> {
    if da * db != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            found: m.dim(),
        });
    }
    Ok(())
}

/// tr_b of an operator on h_a ⊗ h_b.
pub fn partial_trace_second<T: Real>(
    m: &ComplexMatrix<T>,
    da: usize,
    db: usize,
) -> Result<ComplexMatrix<T>> {
    check_product_dim(m, da, db)?;
    Ok(ComplexMatrix::from_fn(da, |i, j| {
        (0..db).fold(C::new(T::zero(), T::zero()), |acc, k| {
            acc + m[(i * db + k, j * db + k)]
        })
    }))
}

/// tr_a of an operator on h_a ⊗ h_b.
pub fn partial_trace_first<T: Real>(
    m: &ComplexMatrix<T>,
    da: usize,
    db: usize,
) -> Result<ComplexMatrix<T>> {
    check_product_dim(m, da, db)?;
    Ok(ComplexMatrix::from_fn(db, |i, j| {
        (0..da).fold(C::new(T::zero(), T::zero()), |acc, k| {
            acc + m[(k * db + i, k * db + j)]
        })
    }))
}
