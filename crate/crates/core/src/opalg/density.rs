use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::opalg::eig::{hermitian_eig, hermitian_eig_with, SpectralDecomposition};
use crate::opalg::matrix::{vector_norm, ComplexMatrix};
use crate::real::{Real, C};

/// Trace-one, positive semidefinite, Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    matrix: ComplexMatrix<T>,
}

/// What `validate_density` does with a matrix outside tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepairPolicy {
    Reject,
    /// Hermitize, clip negative eigenvalues and renormalize, provided no
    /// violation exceeds `max_violation`.
    Repair {
        max_violation: f64,
    },
}

impl<T: Real> DensityMatrix<T> {
    /// Validates with the default tolerances and no repair.
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        validate_density(&m, Tolerances::default().hermitian, RepairPolicy::Reject)
    }

    pub fn from_diag(p: &[T]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diag(p))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(dim);
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(w),
        }
    }

    /// |ψ⟩⟨ψ| after normalizing ψ.
    pub fn pure(psi: &[C<T>]) -> Result<Self> {
        let n = vector_norm(psi);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidState(
                "pure state vector has zero or non-finite norm".into(),
            ));
        }
        let v: Vec<C<T>> = psi.iter().map(|&z| z / n).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&v, &v).hermitian_part(),
        })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix<T>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spectrum(&self) -> Result<SpectralDecomposition<T>> {
        hermitian_eig(&self.matrix)
    }

    /// tr ρ²
    pub fn purity(&self) -> T {
        self.matrix.trace_product(&self.matrix).re
    }

    /// (1 − w) ρ + w I/d
    pub fn mixed_with_identity(&self, w: T) -> Self {
        let d = self.dim();
        let mut m = self.matrix.scale_real(T::one() - w);
        m.axpy_real(w / T::from_usize_lossy(d), &ComplexMatrix::identity(d));
        Self { matrix: m }
    }

    pub fn cast<U: Real>(&self) -> DensityMatrix<U> {
        DensityMatrix {
            matrix: self.matrix.cast(),
        }
    }
}

impl<T> AsRef<ComplexMatrix<T>> for DensityMatrix<T> {
    fn as_ref(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }
}

/// Checks the density-matrix invariants at tolerance `tol`, optionally repairing.
pub fn validate_density<T: Real>(
    m: &ComplexMatrix<T>,
    tol: f64,
    policy: RepairPolicy,
) -> Result<DensityMatrix<T>> {
    if !m.is_finite() {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    let asym = m.asymmetry().as_f64();
    let h = m.hermitian_part();
    let spec = hermitian_eig(&h)?;
    let trace_err = (h.trace().re - T::one()).abs().as_f64();
    let min_eig = spec.min_eigenvalue().as_f64();

    if asym <= tol && trace_err <= tol && min_eig >= -tol {
        return Ok(DensityMatrix { matrix: h });
    }
    let describe = || {
        format!("asymmetry {asym:.3e}, trace error {trace_err:.3e}, min eigenvalue {min_eig:.3e} (tolerance {tol:.1e})")
    };
    match policy {
        RepairPolicy::Reject => Err(Error::InvalidState(describe())),
        RepairPolicy::Repair { max_violation } => {
            if asym > max_violation || trace_err > max_violation || min_eig < -max_violation {
                return Err(Error::InvalidState(describe()));
            }
            let (clipped, _) = clip_and_normalize(&h, &spec)?;
            Ok(clipped)
        }
    }
}

fn clip_and_normalize<T: Real>(
    h: &ComplexMatrix<T>,
    spec: &SpectralDecomposition<T>,
) -> Result<(DensityMatrix<T>, SpectralDecomposition<T>)> {
    let mut spec = spec.clone();
    let mut matrix = if spec.min_eigenvalue() < T::zero() {
        for x in spec.eigenvalues.iter_mut() {
            *x = x.max(T::zero());
        }
        spec.map(|x| x).hermitian_part()
    } else {
        h.clone()
    };
    let tr = matrix.trace().re;
    if !(tr > T::zero()) {
        return Err(Error::InvalidState("trace vanishes after clipping".into()));
    }
    if tr != T::one() {
        matrix = matrix.scale_real(T::one() / tr);
        for x in spec.eigenvalues.iter_mut() {
            *x /= tr;
        }
    }
    Ok((DensityMatrix { matrix }, spec))
}

/// Post-step repair: Hermitize, clip eigenvalues at zero, renormalize the trace.
/// Violations beyond `tol.repair_tol` are a hard error. Returns the spectrum of
/// the repaired state so callers need not decompose it again.
pub fn repair_state<T: Real>(
    m: &ComplexMatrix<T>,
    tol: &Tolerances,
) -> Result<(DensityMatrix<T>, SpectralDecomposition<T>)> {
    let h = m.hermitian_part();
    let spec = hermitian_eig_with(&h, tol)?;
    let trace_err = (h.trace().re - T::one()).abs();
    let min_eig = spec.min_eigenvalue();
    let limit = T::lit(tol.repair_tol);
    if !(trace_err <= limit) || !(min_eig >= -limit) {
        return Err(Error::StateRepairFailed {
            min_eigenvalue: min_eig.as_f64(),
            trace_error: trace_err.as_f64(),
            repair_tol: tol.repair_tol,
        });
    }
    clip_and_normalize(&h, &spec)
}

/// ½ ‖A − B‖₁
pub fn trace_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<T> {
    a.ensure_same_dim(b)?;
    let spec = hermitian_eig(&(a - b).hermitian_part())?;
    Ok(spec.eigenvalues.iter().map(|x| x.abs()).sum::<T>() * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_maximally_mixed_qubit() {
        let rho = validate_density(
            &ComplexMatrix::<f64>::from_diag(&[0.5, 0.5]),
            1e-12,
            RepairPolicy::Reject,
        );
        assert!(rho.is_ok());
    }

    #[test]
    fn repair_renormalizes_trace() {
        let m = ComplexMatrix::<f64>::from_diag(&[0.5, 0.6]);
        let rho = validate_density(&m, 1e-12, RepairPolicy::Repair { max_violation: 0.5 }).unwrap();
        let d = rho.matrix().diagonal_real();
        assert!((d[0] - 0.5 / 1.1).abs() < 1e-15);
        assert!((d[1] - 0.6 / 1.1).abs() < 1e-15);
        assert!((d[0] - 0.454_545_454_545).abs() < 1e-12);
    }

    #[test]
    fn negative_eigenvalue_without_repair_is_invalid() {
        let m = ComplexMatrix::<f64>::from_diag(&[1.1, -0.1]);
        assert!(matches!(
            validate_density(&m, 1e-8, RepairPolicy::Reject),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn post_step_repair_clips_small_negatives() {
        let m = ComplexMatrix::<f64>::from_diag(&[1.0 + 1e-9, -1e-9]);
        let (rho, spec) = repair_state(&m, &Tolerances::default()).unwrap();
        assert_eq!(spec.min_eigenvalue(), 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        let big = ComplexMatrix::<f64>::from_diag(&[1.01, -0.01]);
        assert!(matches!(
            repair_state(&big, &Tolerances::default()),
            Err(Error::StateRepairFailed { .. })
        ));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = ComplexMatrix::<f64>::from_diag(&[1.0, 0.0]);
        let b = ComplexMatrix::<f64>::from_diag(&[0.0, 1.0]);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }
}
