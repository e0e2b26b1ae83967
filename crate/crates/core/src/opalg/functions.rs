use crate::error::{Error, Result};
use crate::opalg::density::DensityMatrix;
use crate::opalg::eig::{hermitian_eig, SpectralDecomposition};
use crate::opalg::matrix::{commutator, ComplexMatrix};
use crate::real::{Real, C};

/// Scalar functions applied through the spectrum of a faithful state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFunction<T> {
    Log,
    Inverse,
    Power(T),
}

impl<T: Real> MatrixFunction<T> {
    pub fn eval(self, x: T) -> T {
        match self {
            MatrixFunction::Log => x.ln(),
            MatrixFunction::Inverse => x.recip(),
            MatrixFunction::Power(p) => x.powf(p),
        }
    }
}

pub fn ensure_faithful<T: Real>(spec: &SpectralDecomposition<T>, floor: f64) -> Result<()> {
    let min = spec.min_eigenvalue();
    if min >= T::lit(floor) {
        Ok(())
    } else {
        Err(Error::NotFaithful {
            min_eigenvalue: min.as_f64(),
            floor,
        })
    }
}

/// U f(Λ) U† for a faithful ρ (minimum eigenvalue at least `floor`).
pub fn matrix_function_psd<T: Real>(
    rho: &DensityMatrix<T>,
    f: MatrixFunction<T>,
    floor: f64,
) -> Result<ComplexMatrix<T>> {
    spectral_function(&rho.spectrum()?, f, floor)
}

pub fn spectral_function<T: Real>(
    spec: &SpectralDecomposition<T>,
    f: MatrixFunction<T>,
    floor: f64,
) -> Result<ComplexMatrix<T>> {
    ensure_faithful(spec, floor)?;
    Ok(spec.map(|x| f.eval(x)))
}

/// ad_ρ^k(X) = [ρ, [ρ, … [ρ, X]]] with k nested commutators.
pub fn ad_pow<T: Real>(
    rho: &ComplexMatrix<T>,
    x: &ComplexMatrix<T>,
    k: usize,
) -> Result<ComplexMatrix<T>> {
    rho.ensure_same_dim(x)?;
    let mut out = x.clone();
    for _ in 0..k {
        out = commutator(rho, &out);
    }
    Ok(out)
}

/// [X, ad_ρ(X), …, ad_ρ^k_max(X)]
pub fn ad_powers<T: Real>(
    rho: &ComplexMatrix<T>,
    x: &ComplexMatrix<T>,
    k_max: usize,
) -> Result<Vec<ComplexMatrix<T>>> {
    rho.ensure_same_dim(x)?;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(x.clone());
    for k in 0..k_max {
        let next = commutator(rho, &out[k]);
        out.push(next);
    }
    Ok(out)
}

/// e^H for Hermitian H.
pub fn exp_hermitian<T: Real>(h: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    Ok(hermitian_eig(h)?.map(|x| x.exp()))
}

/// e^X for anti-Hermitian X, through the spectrum of the Hermitian −iX.
pub fn exp_anti_hermitian<T: Real>(x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let h = x.scale(C::new(T::zero(), -T::one()));
    let spec = hermitian_eig(&h)?;
    Ok(spec.map_complex(|w| C::new(w.cos(), w.sin())))
}
