//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot a_pq with the diagonal
//! unitary diag(1, e^{-iφ}), then annihilates the now real pivot with a plane
//! rotation. Sweeps continue until the off-diagonal Frobenius mass falls below
//! machine epsilon relative to the matrix norm.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::opalg::matrix::ComplexMatrix;
use crate::real::{cr, Real, C};

/// M = U diag(λ) U† with λ ascending and U unitary (eigenvectors as columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// U f(Λ) U†
    pub fn map(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        self.map_complex(|x| cr(f(x)))
    }

    /// U g(Λ) U† for complex-valued g.
    pub fn map_complex(&self, g: impl Fn(T) -> C<T>) -> ComplexMatrix<T> {
        let n = self.dim();
        let u = &self.eigenvectors;
        let vals: Vec<C<T>> = self.eigenvalues.iter().map(|&x| g(x)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C::new(T::zero(), T::zero());
                for (k, &v) in vals.iter().enumerate() {
                    acc += u[(i, k)] * v * u[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map(|x| x)
    }

    /// U† M U
    pub fn to_eigenbasis(&self, m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let u = &self.eigenvectors;
        &(&u.adjoint() * m) * u
    }
}

/// Eigendecomposition with the default tolerances.
pub fn hermitian_eig<T: Real>(m: &ComplexMatrix<T>) -> Result<SpectralDecomposition<T>> {
    hermitian_eig_with(m, &Tolerances::default())
}

pub fn hermitian_eig_with<T: Real>(
    m: &ComplexMatrix<T>,
    tol: &Tolerances,
) -> Result<SpectralDecomposition<T>> {
    let scale = m.max_norm().max(T::one());
    let asym = m.asymmetry();
    // The symmetry check is only meaningful at f64 resolution or coarser.
    let sym_tol = T::lit(tol.eig_hermitian).max(T::epsilon() * T::lit(64.0)) * scale;
    if !(asym <= sym_tol) {
        return Err(Error::NotHermitian {
            asymmetry: asym.as_f64(),
            tol: sym_tol.as_f64(),
        });
    }
    jacobi(m.hermitian_part(), tol.jacobi_max_sweeps)
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.dim();
    let mut s = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[(i, j)].norm_sqr();
        }
    }
    (s + s).sqrt()
}

fn jacobi<T: Real>(mut a: ComplexMatrix<T>, max_sweeps: usize) -> Result<SpectralDecomposition<T>> {
    let n = a.dim();
    let mut v = ComplexMatrix::identity(n);
    let threshold = T::epsilon() * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                off_diagonal: off.as_f64(),
            });
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = a.diagonal_real();
    order.sort_by(|&i, &j| {
        diag[i]
            .partial_cmp(&diag[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    let n = a.dim();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (r + r);
    let t = {
        let mag = T::one() / (theta.abs() + theta.hypot(T::one()));
        if theta < T::zero() {
            -mag
        } else {
            mag
        }
    };
    let c = T::one() / t.hypot(T::one());
    let s = t * c;
    let phase = apq / r; // e^{iφ}
    let phase_conj = phase.conj();

    // A ← A G, columns p and q.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * phase_conj * s;
        a[(k, q)] = akp * s + akq * phase_conj * c;
    }
    // A ← G† A, rows p and q.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, p)] = cr(app - t * r);
    a[(q, q)] = cr(aqq + t * r);
    a[(p, q)] = C::new(T::zero(), T::zero());
    a[(q, p)] = C::new(T::zero(), T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase_conj * s;
        v[(k, q)] = vkp * s + vkq * phase_conj * c;
    }
}
