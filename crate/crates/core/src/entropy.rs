//! Von Neumann entropy, relative entropy and mutual information, in nats.

use crate::error::{Error, Result};
use crate::opalg::{
    hermitian_eig, partial_trace_first, partial_trace_second, ComplexMatrix, DensityMatrix,
};
use crate::real::{compensated_sum, Real};

/// Eigenvalues at or below this are exact zeros (0 ln 0 = 0).
pub const EIGEN_ZERO: f64 = 1e-14;

/// Weight of ρ outside the support of σ tolerated before D(ρ‖σ) is declared infinite.
pub const SUPPORT_TOL: f64 = 1e-12;

/// −Σ p ln p over the spectrum, ignoring eigenvalues at or below `floor`.
pub fn entropy_of_spectrum<T: Real>(eigenvalues: &[T], floor: f64) -> T {
    let floor = T::lit(floor);
    compensated_sum(
        eigenvalues
            .iter()
            .filter(|&&p| p > floor)
            .map(|&p| -p * p.ln()),
    )
}

/// S(ρ) = −tr ρ ln ρ
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(entropy_of_spectrum(
        &rho.spectrum()?.eigenvalues,
        EIGEN_ZERO,
    ))
}

/// S of a matrix that is a density matrix up to rounding (Hermitized first).
pub fn matrix_entropy<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    Ok(entropy_of_spectrum(
        &hermitian_eig(&m.hermitian_part())?.eigenvalues,
        EIGEN_ZERO,
    ))
}

/// D(ρ‖σ) = tr ρ ln ρ − tr ρ ln σ. Returns `+∞` when ρ has weight outside
/// the support of σ.
pub fn relative_entropy<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: rho.dim(),
        });
    }
    let neg_s_rho = -von_neumann_entropy(rho)?;
    let spec = sigma.spectrum()?;
    let rho_in_sigma_basis = spec.to_eigenbasis(rho.matrix());
    let mut cross = crate::real::CompensatedSum::new();
    for (i, &s) in spec.eigenvalues.iter().enumerate() {
        let w = rho_in_sigma_basis[(i, i)].re;
        if s > T::lit(EIGEN_ZERO) {
            cross.add(w * s.ln());
        } else if w > T::lit(SUPPORT_TOL) {
            return Ok(T::infinity());
        }
    }
    Ok(neg_s_rho - cross.value())
}

/// A state on h_a ⊗ h_b, factor a first.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState<T> {
    dims: (usize, usize),
    state: DensityMatrix<T>,
}

impl<T: Real> BipartiteState<T> {
    pub fn new(state: DensityMatrix<T>, da: usize, db: usize) -> Result<Self> {
        if da * db != state.dim() || da == 0 {
            return Err(Error::DimensionMismatch {
                expected: da * db,
                found: state.dim(),
            });
        }
        Ok(Self {
            dims: (da, db),
            state,
        })
    }

    pub fn product(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> Self {
        let m = a.matrix().kron(b.matrix());
        Self {
            dims: (a.dim(), b.dim()),
            state: DensityMatrix::from_matrix_unchecked(m),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn state(&self) -> &DensityMatrix<T> {
        &self.state
    }

    pub fn marginal_a(&self) -> DensityMatrix<T> {
        let m = partial_trace_second(self.state.matrix(), self.dims.0, self.dims.1)
            .expect("dims checked");
        DensityMatrix::from_matrix_unchecked(m.hermitian_part())
    }

    pub fn marginal_b(&self) -> DensityMatrix<T> {
        let m = partial_trace_first(self.state.matrix(), self.dims.0, self.dims.1)
            .expect("dims checked");
        DensityMatrix::from_matrix_unchecked(m.hermitian_part())
    }
}

/// I(a:b) = S(ρ_a) + S(ρ_b) − S(ρ)
pub fn mutual_information<T: Real>(rho: &BipartiteState<T>) -> Result<T> {
    Ok(
        von_neumann_entropy(&rho.marginal_a())? + von_neumann_entropy(&rho.marginal_b())?
            - von_neumann_entropy(rho.state())?,
    )
}

/// I(a:b) = D(ρ ‖ ρ_a ⊗ ρ_b)
pub fn mutual_information_relative<T: Real>(rho: &BipartiteState<T>) -> Result<T> {
    let prod = BipartiteState::product(&rho.marginal_a(), &rho.marginal_b());
    relative_entropy(rho.state(), prod.state())
}
