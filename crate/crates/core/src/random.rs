//! Seeded samplers for random operators and states.
//!
//! Used by the verification suites and tests; every stream is a ChaCha8
//! generator keyed by a 64-bit seed, so draws are reproducible across runs
//! and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::opalg::{exp_anti_hermitian, ComplexMatrix, DensityMatrix};
use crate::real::{Real, C};

pub struct StateSampler<T> {
    rng: ChaCha8Rng,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> StateSampler<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            _scalar: std::marker::PhantomData,
        }
    }

    pub fn normal(&mut self) -> T {
        T::lit(self.rng.sample::<f64, _>(StandardNormal))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> T {
        T::lit(self.rng.gen_range(lo..hi))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn complex_normal(&mut self) -> C<T> {
        let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        C::new(self.normal() * s, self.normal() * s)
    }

    /// Matrix with i.i.d. standard complex Gaussian entries.
    pub fn ginibre(&mut self, dim: usize) -> ComplexMatrix<T> {
        ComplexMatrix::from_fn(dim, |_, _| self.complex_normal())
    }

    pub fn hermitian(&mut self, dim: usize) -> ComplexMatrix<T> {
        self.ginibre(dim).hermitian_part()
    }

    /// Haar-ish unitary e^{iH} from a Gaussian Hermitian generator.
    pub fn unitary(&mut self, dim: usize) -> ComplexMatrix<T> {
        let h = self.hermitian(dim).scale_real(T::lit(2.0));
        exp_anti_hermitian(&h.scale(C::new(T::zero(), T::one()))).expect("Hermitian generator")
    }

    /// W W† / tr(W W†) with Ginibre W; full rank almost surely.
    pub fn density(&mut self, dim: usize) -> DensityMatrix<T> {
        let w = self.ginibre(dim);
        let m = &w * &w.adjoint();
        let tr = m.trace().re;
        DensityMatrix::from_matrix_unchecked(m.scale_real(T::one() / tr).hermitian_part())
    }

    /// U diag(p) U† with weights drawn uniformly from `[lo, hi]` before
    /// normalization, so the condition number is at most hi/lo.
    pub fn density_with_spread(&mut self, dim: usize, lo: f64, hi: f64) -> DensityMatrix<T> {
        let w: Vec<T> = (0..dim).map(|_| self.uniform(lo, hi)).collect();
        let total: T = w.iter().copied().sum();
        let p: Vec<T> = w.iter().map(|&x| x / total).collect();
        let u = self.unitary(dim);
        let m = &(&u * &ComplexMatrix::from_diag(&p)) * &u.adjoint();
        DensityMatrix::from_matrix_unchecked(m.hermitian_part())
    }

    /// Random unit vector.
    pub fn pure_vector(&mut self, dim: usize) -> Vec<C<T>> {
        let v: Vec<C<T>> = (0..dim).map(|_| self.complex_normal()).collect();
        let n = crate::opalg::vector_norm(&v);
        v.into_iter().map(|z| z / n).collect()
    }

    /// Ginibre matrix rescaled to spectral norm `norm`.
    pub fn operator_with_norm(&mut self, dim: usize, norm: f64) -> ComplexMatrix<T> {
        let g = self.ginibre(dim);
        let gg = &g.adjoint() * &g;
        let spec =
            crate::opalg::hermitian_eig(&gg.hermitian_part()).expect("Gram matrix is Hermitian");
        let op_norm = spec.max_eigenvalue().sqrt();
        g.scale_real(T::lit(norm) / op_norm)
    }
}
