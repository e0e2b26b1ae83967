use serde::Serialize;

use super::{conditional_map, unconditional_map, Outcome, ProbeModel};
use crate::entropy::{mutual_information, von_neumann_entropy, BipartiteState};
use crate::error::{Error, Result};
use crate::opalg::{
    hermitian_eig, matrix_function_psd, partial_trace_second, validate_density, ComplexMatrix,
    DensityMatrix, MatrixFunction, RepairPolicy,
};
use crate::real::{Real, C};

/// Terms of the two entropy inequalities for one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityReport<T> {
    /// S(ρ_n) − S(ρ_{n−1})
    pub delta_s: T,
    /// S(F_n σ)
    pub s_f_sigma: T,
    pub s_sigma: T,
    /// I(s:a) of V(ρ_{n−1}⊗σ)V†
    pub mutual_info: T,
    /// ΔS + S(F_n σ) − S(σ)
    pub lhs1: T,
    /// ΔS + tr((σ − F_n σ) ln σ); None for a probe without full rank.
    pub lhs2: Option<T>,
    pub probe_min_eigenvalue: T,
}

impl<T: Real> InequalityReport<T> {
    pub fn second(&self) -> Result<T> {
        self.lhs2.ok_or(Error::ProbeNotFaithful {
            min_eigenvalue: self.probe_min_eigenvalue.as_f64(),
        })
    }
}

/// The joint state after one interaction, renormalized (a first-order V is
/// not exactly unitary).
fn joint_density<T: Real>(
    rho: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
) -> Result<DensityMatrix<T>> {
    let w = probe.joint_state(rho.matrix());
    let tr = w.trace().re;
    let tol = probe.tolerances();
    validate_density(
        &w.scale_real(tr.recip()),
        tol.hermitian,
        RepairPolicy::Repair {
            max_violation: tol.repair_tol,
        },
    )
}

pub fn entropy_inequalities<T: Real>(
    rho_prev: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
) -> Result<InequalityReport<T>> {
    rho_prev.matrix().ensure_same_dim(probe.hamiltonian())?;
    let joint = BipartiteState::new(joint_density(rho_prev, probe)?, probe.system_dim(), 2)?;
    let rho_n = joint.marginal_a();
    let f_sigma = joint.marginal_b();
    let sigma = probe.probe_state();
    let delta_s = von_neumann_entropy(&rho_n)? - von_neumann_entropy(rho_prev)?;
    let s_f_sigma = von_neumann_entropy(&f_sigma)?;
    let s_sigma = von_neumann_entropy(sigma)?;
    let spec = sigma.spectrum()?;
    let floor = probe.tolerances().faithful_floor;
    let lhs2 = if spec.min_eigenvalue() >= T::lit(floor) {
        let ln_sigma = matrix_function_psd(sigma, MatrixFunction::Log, floor)?;
        let diff = sigma.matrix() - f_sigma.matrix();
        Some(delta_s + diff.trace_product(&ln_sigma).re)
    } else {
        None
    };
    Ok(InequalityReport {
        delta_s,
        s_f_sigma,
        s_sigma,
        mutual_info: mutual_information(&joint)?,
        lhs1: delta_s + s_f_sigma - s_sigma,
        lhs2,
        probe_min_eigenvalue: spec.min_eigenvalue(),
    })
}

/// Complete positivity and trace preservation of V_s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelCheck<T> {
    /// Smallest eigenvalue of Σ_ij |i⟩⟨j| ⊗ V_s(|i⟩⟨j|).
    pub min_choi_eigenvalue: T,
    /// ‖Σ A†A − I‖_max over the Kraus operators of both outcomes.
    pub trace_preservation_defect: T,
}

pub fn channel_check<T: Real>(probe: &ProbeModel<T>) -> Result<ChannelCheck<T>> {
    let d = probe.system_dim();
    let one = C::new(T::one(), T::zero());
    let mut choi = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = ComplexMatrix::zeros(d);
            e[(i, j)] = one;
            let img = unconditional_map(&e, probe);
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = img[(a, b)];
                }
            }
        }
    }
    let spec = hermitian_eig(&choi.hermitian_part())?;
    let mut sum = ComplexMatrix::zeros(d);
    for y in Outcome::BOTH {
        for a in probe.kraus(y) {
            sum += &(&a.adjoint() * a);
        }
    }
    Ok(ChannelCheck {
        min_choi_eigenvalue: spec.min_eigenvalue(),
        trace_preservation_defect: sum.max_abs_diff(&ComplexMatrix::identity(d)),
    })
}

fn innovation<T: Real>(y: Outcome, lambda: T, tau: T) -> T {
    T::from_i8(y.sign()).expect("sign fits") * tau.sqrt() - lambda * tau
}

/// max_y ‖ρ̂' − [ρ̂ + L*ρ̂ τ + (Lρ̂ + ρ̂L† − λρ̂) ΔI]‖_max with ΔI = y − λτ.
pub fn difference_equation_defect<T: Real>(
    rho: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
) -> Result<T> {
    let model = probe.open_system()?;
    let tau = probe.tau();
    let r = rho.matrix();
    let drift = model.adjoint_generator(r)?;
    let lambda = model.signal(r);
    let mut b = model.measurement_operator(r);
    b.axpy_real(-lambda, r);
    let mut worst = T::zero();
    for y in Outcome::BOTH {
        let (m, p) = conditional_map(r, probe, y);
        let filtered = m.scale_real(p.recip());
        let mut pred = r.clone();
        pred.axpy_real(tau, &drift);
        pred.axpy_real(innovation(y, lambda, tau), &b);
        worst = worst.max(filtered.max_abs_diff(&pred));
    }
    Ok(worst)
}

/// Σ_y p(y) ΔI_y² − τ
pub fn innovation_second_moment<T: Real>(
    rho: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
) -> Result<T> {
    let model = probe.open_system()?;
    let lambda = model.signal(rho.matrix());
    let tau = probe.tau();
    Ok(Outcome::BOTH.iter().fold(-tau, |acc, &y| {
        let (_, p) = conditional_map(rho.matrix(), probe, y);
        let di = innovation(y, lambda, tau);
        acc + p * di * di
    }))
}

/// Two-step records computed on system ⊗ ancilla₁ ⊗ ancilla₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingCheck<T> {
    /// max_y ‖P₂V₂P₁V₁ X V₁†P₁V₂†P₂ − P₂P₁U₂ X U₂†P₁P₂‖_max, U₂ = V₂V₁
    pub interleaved_vs_commuted: T,
    /// max_y ‖tr_a(interleaved) − M_{y₂}M_{y₁}ρ‖_max
    pub reduced_vs_sequential: T,
}

pub fn ordering_identity<T: Real>(
    rho: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
) -> Result<OrderingCheck<T>> {
    let d = probe.system_dim();
    rho.matrix().ensure_same_dim(probe.hamiltonian())?;
    let v = probe.unitary();
    let zero = C::new(T::zero(), T::zero());
    let dim = 4 * d;
    let split = |i: usize| (i / 4, (i / 2) % 2, i % 2);
    let v1 = ComplexMatrix::from_fn(dim, |r, c| {
        let ((s, a1, a2), (sp, a1p, a2p)) = (split(r), split(c));
        if a2 == a2p {
            v[(2 * s + a1, 2 * sp + a1p)]
        } else {
            zero
        }
    });
    let v2 = ComplexMatrix::from_fn(dim, |r, c| {
        let ((s, a1, a2), (sp, a1p, a2p)) = (split(r), split(c));
        if a1 == a1p {
            v[(2 * s + a2, 2 * sp + a2p)]
        } else {
            zero
        }
    });
    let on_first = |y: Outcome| {
        let p = y.projector::<T>();
        ComplexMatrix::from_fn(dim, |r, c| {
            let ((s, a1, a2), (sp, a1p, a2p)) = (split(r), split(c));
            if s == sp && a2 == a2p {
                p[(a1, a1p)]
            } else {
                zero
            }
        })
    };
    let on_second = |y: Outcome| {
        let p = y.projector::<T>();
        ComplexMatrix::from_fn(dim, |r, c| {
            let ((s, a1, a2), (sp, a1p, a2p)) = (split(r), split(c));
            if s == sp && a1 == a1p {
                p[(a2, a2p)]
            } else {
                zero
            }
        })
    };
    let sigma = probe.probe_state().matrix();
    let x = rho.matrix().kron(sigma).kron(sigma);
    let u2 = &v2 * &v1;
    let conj = |op: &ComplexMatrix<T>, m: &ComplexMatrix<T>| &(op * m) * &op.adjoint();
    let mut out = OrderingCheck {
        interleaved_vs_commuted: T::zero(),
        reduced_vs_sequential: T::zero(),
    };
    for y1 in Outcome::BOTH {
        for y2 in Outcome::BOTH {
            let (p1, p2) = (on_first(y1), on_second(y2));
            let interleaved = conj(&p2, &conj(&v2, &conj(&p1, &conj(&v1, &x))));
            let commuted = conj(&(&p2 * &p1), &conj(&u2, &x));
            out.interleaved_vs_commuted = out
                .interleaved_vs_commuted
                .max(interleaved.max_abs_diff(&commuted));
            let reduced = partial_trace_second(&interleaved, d, 4)?;
            let (m1, _) = conditional_map(rho.matrix(), probe, y1);
            let (m2, _) = conditional_map(&m1, probe, y2);
            out.reduced_vs_sequential = out.reduced_vs_sequential.max(reduced.max_abs_diff(&m2));
        }
    }
    Ok(out)
}
