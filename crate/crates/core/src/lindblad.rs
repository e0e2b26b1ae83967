//! Lindblad generator, its trace dual, and the open-system model record.
//!
//! Heisenberg picture:
//!   L(X) = −i[X, H] + Σ_k ½[L_k†, X] L_k + ½ L_k† [X, L_k]
//! Schrödinger picture, defined by tr(ρ L(X)) = tr(L*(ρ) X):
//!   L*(ρ) = Σ_k L_k ρ L_k† + K ρ + ρ K†,   K = −½ Σ_k L_k† L_k − iH.

use crate::error::{Error, Result};
use crate::opalg::{anticommutator, commutator, ComplexMatrix};
use crate::real::{Real, C};

#[derive(Debug, Clone, PartialEq)]
struct Channel<T> {
    l: ComplexMatrix<T>,
    l_dag: ComplexMatrix<T>,
    l_dag_l: ComplexMatrix<T>,
}

/// Hamiltonian, collapse operators, the monitored channel and detector efficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystemModel<T> {
    hamiltonian: ComplexMatrix<T>,
    channels: Vec<Channel<T>>,
    monitored_index: usize,
    eta: T,
    // −½ Σ L†L − iH
    k_op: ComplexMatrix<T>,
    k_dag: ComplexMatrix<T>,
}

impl<T: Real> OpenSystemModel<T> {
    pub fn new(
        hamiltonian: ComplexMatrix<T>,
        collapse_ops: Vec<ComplexMatrix<T>>,
        monitored_index: usize,
        eta: T,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        let asym = hamiltonian.asymmetry();
        if asym > T::lit(1e-12) {
            return Err(Error::InvalidModel(format!(
                "hamiltonian is not Hermitian (asymmetry {:.3e})",
                asym.as_f64()
            )));
        }
        if collapse_ops.is_empty() {
            return Err(Error::InvalidModel(
                "at least one collapse operator is required".into(),
            ));
        }
        if monitored_index >= collapse_ops.len() {
            return Err(Error::InvalidModel(format!(
                "monitored_index {monitored_index} out of range for {} collapse operators",
                collapse_ops.len()
            )));
        }
        if !(eta >= T::zero() && eta <= T::one()) {
            return Err(Error::InvalidModel(format!(
                "eta = {} outside [0, 1]",
                eta.as_f64()
            )));
        }
        for (k, l) in collapse_ops.iter().enumerate() {
            if l.dim() != dim {
                return Err(Error::InvalidModel(format!(
                    "collapse operator {k} has dimension {}, hamiltonian has {dim}",
                    l.dim()
                )));
            }
        }
        let channels: Vec<Channel<T>> = collapse_ops
            .into_iter()
            .map(|l| {
                let l_dag = l.adjoint();
                let l_dag_l = &l_dag * &l;
                Channel { l, l_dag, l_dag_l }
            })
            .collect();
        let mut k_op = hamiltonian.scale(C::new(T::zero(), -T::one()));
        for ch in &channels {
            k_op.axpy_real(T::lit(-0.5), &ch.l_dag_l);
        }
        let k_dag = k_op.adjoint();
        Ok(Self {
            hamiltonian,
            channels,
            monitored_index,
            eta,
            k_op,
            k_dag,
        })
    }

    /// Single monitored channel.
    pub fn single(hamiltonian: ComplexMatrix<T>, l: ComplexMatrix<T>, eta: T) -> Result<Self> {
        Self::new(hamiltonian, vec![l], 0, eta)
    }

    pub fn with_eta(&self, eta: T) -> Result<Self> {
        Self::new(
            self.hamiltonian.clone(),
            self.collapse_ops().cloned().collect(),
            self.monitored_index,
            eta,
        )
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix<T> {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> impl Iterator<Item = &ComplexMatrix<T>> {
        self.channels.iter().map(|c| &c.l)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn monitored_index(&self) -> usize {
        self.monitored_index
    }

    /// The monitored collapse operator L.
    pub fn monitored(&self) -> &ComplexMatrix<T> {
        &self.channels[self.monitored_index].l
    }

    pub fn monitored_adjoint(&self) -> &ComplexMatrix<T> {
        &self.channels[self.monitored_index].l_dag
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// K = −½ Σ_k L_k† L_k − iH
    pub fn k_operator(&self) -> &ComplexMatrix<T> {
        &self.k_op
    }

    fn check(&self, x: &ComplexMatrix<T>) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// L(X), Heisenberg picture.
    pub fn generator(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check(x)?;
        // −i[X, H] = i[H, X]
        let mut out = commutator(&self.hamiltonian, x).scale(C::new(T::zero(), T::one()));
        for ch in &self.channels {
            out += &(&(&ch.l_dag * x) * &ch.l);
            out.axpy_real(T::lit(-0.5), &anticommutator(&ch.l_dag_l, x));
        }
        Ok(out)
    }

    /// L*(ρ), Schrödinger picture.
    pub fn adjoint_generator(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check(rho)?;
        let mut out = &(&self.k_op * rho) + &(rho * &self.k_dag);
        for ch in &self.channels {
            out += &(&(&ch.l * rho) * &ch.l_dag);
        }
        Ok(out)
    }

    /// Lρ + ρL† for the monitored channel.
    pub fn measurement_operator(&self, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let ch = &self.channels[self.monitored_index];
        &(&ch.l * rho) + &(rho * &ch.l_dag)
    }

    /// λ = tr(ρ (L + L†)) for the monitored channel.
    pub fn signal(&self, rho: &ComplexMatrix<T>) -> T {
        let ch = &self.channels[self.monitored_index];
        (rho.trace_product(&ch.l) + rho.trace_product(&ch.l_dag)).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::pauli;
    use crate::random::StateSampler;

    fn zero2() -> ComplexMatrix<f64> {
        ComplexMatrix::zeros(2)
    }

    #[test]
    fn identity_is_annihilated() {
        let mut s = StateSampler::<f64>::new(1);
        let m =
            OpenSystemModel::new(s.hermitian(3), vec![s.ginibre(3), s.ginibre(3)], 1, 0.7).unwrap();
        let out = m.generator(&ComplexMatrix::identity(3)).unwrap();
        assert!(out.max_norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_only() {
        let mut s = StateSampler::<f64>::new(2);
        let h = s.hermitian(2);
        let m = OpenSystemModel::single(h.clone(), zero2(), 1.0).unwrap();
        let z = pauli::sigma_z::<f64>();
        let expected = commutator(&z, &h).scale(C::new(0.0, -1.0));
        assert!(m.generator(&z).unwrap().max_abs_diff(&expected) < 1e-15);
        let rho = s.density(2);
        let expected = commutator(&h, rho.matrix()).scale(C::new(0.0, -1.0));
        assert!(
            m.adjoint_generator(rho.matrix())
                .unwrap()
                .max_abs_diff(&expected)
                < 1e-15
        );
    }

    #[test]
    fn decay_term_by_term() {
        let l = pauli::sigma_minus::<f64>();
        let ld = l.adjoint();
        let m = OpenSystemModel::single(zero2(), l.clone(), 1.0).unwrap();
        let x = pauli::sigma_z::<f64>();
        let mut brute = &commutator(&ld, &x) * &l;
        brute += &(&ld * &commutator(&x, &l));
        let brute = brute.scale_real(0.5);
        assert!(m.generator(&x).unwrap().max_abs_diff(&brute) < 1e-15);
        // L(σ_z) = −(I + σ_z) for this decay channel
        assert!(brute.max_abs_diff(&ComplexMatrix::from_diag(&[-2.0, 0.0])) < 1e-15);
    }

    #[test]
    fn dephasing_fixes_maximally_mixed() {
        let m = OpenSystemModel::single(zero2(), pauli::sigma_z::<f64>(), 1.0).unwrap();
        let rho = ComplexMatrix::<f64>::identity(2).scale_real(0.5);
        assert!(m.adjoint_generator(&rho).unwrap().max_norm() < 1e-16);
    }

    #[test]
    fn duality_seed_3() {
        let mut s = StateSampler::<f64>::new(3);
        let m =
            OpenSystemModel::new(s.hermitian(3), vec![s.ginibre(3), s.ginibre(3)], 0, 0.5).unwrap();
        let rho = s.density(3);
        let x = s.ginibre(3);
        let lhs = rho.matrix().trace_product(&m.generator(&x).unwrap());
        let rhs = m.adjoint_generator(rho.matrix()).unwrap().trace_product(&x);
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(m.adjoint_generator(rho.matrix()).unwrap().trace().norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_models() {
        let l = pauli::sigma_z::<f64>();
        assert!(OpenSystemModel::single(pauli::sigma_plus(), l.clone(), 1.0).is_err());
        assert!(OpenSystemModel::single(zero2(), l.clone(), 1.5).is_err());
        assert!(OpenSystemModel::new(zero2(), vec![l.clone()], 1, 1.0).is_err());
        assert!(OpenSystemModel::single(zero2(), ComplexMatrix::identity(3), 1.0).is_err());
        assert!(OpenSystemModel::new(zero2(), vec![], 0, 1.0).is_err());
    }

    #[test]
    fn signal_of_sigma_z() {
        let m = OpenSystemModel::single(zero2(), pauli::sigma_z::<f64>(), 1.0).unwrap();
        let rho = ComplexMatrix::from_diag(&[0.7, 0.3]);
        assert!((m.signal(&rho) - 0.8).abs() < 1e-15);
        let b = m.measurement_operator(&rho);
        assert!(b.max_abs_diff(&ComplexMatrix::from_diag(&[1.4, -0.6])) < 1e-15);
    }
}
