#![allow(dead_code)]

use proptest::prelude::*;
use trajent::opalg::{exp_anti_hermitian, ComplexMatrix, DensityMatrix};
use trajent::C;

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

pub fn matrix(d: usize, scale: f64) -> impl Strategy<Value = ComplexMatrix<f64>> {
    prop::collection::vec(-scale..scale, 2 * d * d).prop_map(move |v| {
        let data = v.chunks_exact(2).map(|z| C::new(z[0], z[1])).collect();
        ComplexMatrix::from_entries(d, data).unwrap()
    })
}

pub fn hermitian(d: usize, scale: f64) -> impl Strategy<Value = ComplexMatrix<f64>> {
    matrix(d, scale).prop_map(|m| m.hermitian_part())
}

/// Operator rescaled to max-norm at most `norm`.
pub fn bounded(d: usize, norm: f64) -> impl Strategy<Value = ComplexMatrix<f64>> {
    matrix(d, 1.0).prop_map(move |m| {
        let s = m.max_norm().max(1e-3);
        m.scale_real(norm / (s * d as f64))
    })
}

pub fn unitary(d: usize) -> impl Strategy<Value = ComplexMatrix<f64>> {
    hermitian(d, 2.0).prop_map(|h| exp_anti_hermitian(&h.scale(C::new(0.0, 1.0))).unwrap())
}

/// U diag(p) U† with every eigenvalue at least `floor`.
pub fn density(d: usize, floor: f64) -> impl Strategy<Value = DensityMatrix<f64>> {
    (prop::collection::vec(0.0..1.0f64, d), unitary(d)).prop_map(move |(w, u)| {
        let total: f64 = w.iter().sum::<f64>() + 1e-9;
        let p: Vec<f64> = w
            .iter()
            .map(|x| floor + (1.0 - d as f64 * floor) * (x + 1e-9 / d as f64) / total)
            .collect();
        let m = &(&u * &ComplexMatrix::from_diag(&p)) * &u.adjoint();
        DensityMatrix::new(m.hermitian_part()).unwrap()
    })
}

pub fn dim() -> impl Strategy<Value = usize> {
    2usize..=3
}

/// Faithful state with eigenvalues proportional to draws from [1, `spread`].
pub fn density_with_spread(d: usize, spread: f64) -> impl Strategy<Value = DensityMatrix<f64>> {
    (prop::collection::vec(1.0..spread, d), unitary(d)).prop_map(|(w, u)| {
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let m = &(&u * &ComplexMatrix::from_diag(&p)) * &u.adjoint();
        DensityMatrix::new(m.hermitian_part()).unwrap()
    })
}
