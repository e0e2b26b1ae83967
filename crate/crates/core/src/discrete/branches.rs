use rayon::prelude::*;
use serde::Serialize;

use super::{conditional_map, unconditional_power, Outcome, ProbeModel};
use crate::entropy::{relative_entropy, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::opalg::{validate_density, ComplexMatrix, DensityMatrix, RepairPolicy};
use crate::real::{CompensatedSum, Real};

/// Longest record `enumerate_branches` accepts.
pub const MAX_RECORD_LEN: usize = 16;

/// One measurement record and the system state it leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranch<T> {
    pub record: Vec<Outcome>,
    /// M_{y_m} ∘ … ∘ M_{y_1} ρ0
    pub unnormalized_state: ComplexMatrix<T>,
    pub probability: T,
    /// None when the probability is at or below the floor.
    pub filtered_state: Option<DensityMatrix<T>>,
}

impl<T: Real> MeasurementBranch<T> {
    /// "+-+…"
    pub fn record_string(&self) -> String {
        self.record.iter().map(|y| y.symbol()).collect()
    }
}

fn normalize<T: Real>(
    m: &ComplexMatrix<T>,
    p: T,
    probe: &ProbeModel<T>,
) -> Result<Option<DensityMatrix<T>>> {
    let tol = probe.tolerances();
    if !(p > T::lit(tol.prob_floor)) {
        return Ok(None);
    }
    validate_density(
        &m.scale_real(p.recip()),
        tol.hermitian,
        RepairPolicy::Repair {
            max_violation: tol.repair_tol,
        },
    )
    .map(Some)
}

/// All 2ⁿ records of length n, "+" before "−" at every position.
pub fn enumerate_branches<T: Real>(
    rho0: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
    n: usize,
) -> Result<Vec<MeasurementBranch<T>>> {
    if n > MAX_RECORD_LEN {
        return Err(Error::BranchLimitExceeded {
            n,
            max: MAX_RECORD_LEN,
        });
    }
    rho0.matrix().ensure_same_dim(probe.hamiltonian())?;
    let mut level: Vec<(Vec<Outcome>, ComplexMatrix<T>)> =
        vec![(Vec::new(), rho0.matrix().clone())];
    for _ in 0..n {
        level = level
            .par_iter()
            .flat_map_iter(|(rec, m)| {
                Outcome::BOTH.into_iter().map(move |y| {
                    let mut r = Vec::with_capacity(rec.len() + 1);
                    r.extend_from_slice(rec);
                    r.push(y);
                    (r, conditional_map(m, probe, y).0)
                })
            })
            .collect();
    }
    level
        .into_par_iter()
        .map(|(record, m)| {
            let p = m.trace().re;
            let filtered_state = normalize(&m, p, probe)?;
            Ok(MeasurementBranch {
                record,
                unnormalized_state: m,
                probability: p,
                filtered_state,
            })
        })
        .collect()
}

/// H_{n|m} by both definitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolevoInfo<T> {
    pub n: usize,
    pub m: usize,
    /// S(ρ_n)
    pub s_n: T,
    /// Σ_y p_m(y) S(ρ̂_{n|m}(y))
    pub s_bar: T,
    /// S_n − S̄_{n|m}
    pub by_entropy: T,
    /// Σ_y p_m(y) D(ρ̂_{n|m}(y) ‖ ρ_n)
    pub by_relative: T,
    /// Probability of records below the floor, left out of both averages.
    pub excluded_weight: T,
}

/// Holevo information at step n about the first m outcomes.
pub fn holevo_info<T: Real>(
    rho0: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
    n: usize,
    m: usize,
) -> Result<HolevoInfo<T>> {
    if m > n {
        return Err(Error::InvalidConfig(format!(
            "conditioning depth m = {m} exceeds n = {n}"
        )));
    }
    let branches = enumerate_branches(rho0, probe, m)?;
    let tol = *probe.tolerances();
    let rho_n = validate_density(
        &unconditional_power(rho0.matrix(), probe, n),
        tol.hermitian,
        RepairPolicy::Repair {
            max_violation: tol.repair_tol,
        },
    )?;
    let s_n = von_neumann_entropy(&rho_n)?;
    let terms: Vec<(T, T, T)> = branches
        .par_iter()
        .map(|b| match &b.filtered_state {
            None => Ok((T::zero(), T::zero(), b.probability)),
            Some(f) => {
                let evolved = validate_density(
                    &unconditional_power(f.matrix(), probe, n - m),
                    tol.hermitian,
                    RepairPolicy::Repair {
                        max_violation: tol.repair_tol,
                    },
                )?;
                Ok((
                    b.probability * von_neumann_entropy(&evolved)?,
                    b.probability * relative_entropy(&evolved, &rho_n)?,
                    T::zero(),
                ))
            }
        })
        .collect::<Result<_>>()?;
    let s_bar: CompensatedSum<T> = terms.iter().map(|t| t.0).collect();
    let rel: CompensatedSum<T> = terms.iter().map(|t| t.1).collect();
    let excluded: CompensatedSum<T> = terms.iter().map(|t| t.2).collect();
    Ok(HolevoInfo {
        n,
        m,
        s_n,
        s_bar: s_bar.value(),
        by_entropy: s_n - s_bar.value(),
        by_relative: rel.value(),
        excluded_weight: excluded.value(),
    })
}

/// ΔH_n = G_n − L_n at step n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainLoss<T> {
    pub n: usize,
    /// H_{n|n} − H_{n|n−1}
    pub gain: T,
    /// H_{n−1|n−1} − H_{n|n−1}
    pub loss: T,
    /// H_{n|n} − H_{n−1|n−1}
    pub delta_h: T,
    /// S̄_{n|n−1} − S̄_{n|n}
    pub gain_from_conditional_entropies: T,
}

pub fn gain_loss<T: Real>(
    rho0: &DensityMatrix<T>,
    probe: &ProbeModel<T>,
    n: usize,
) -> Result<GainLoss<T>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "gain/loss needs at least one step".into(),
        ));
    }
    let h_nn = holevo_info(rho0, probe, n, n)?;
    let h_n_prev = holevo_info(rho0, probe, n, n - 1)?;
    let h_prev = holevo_info(rho0, probe, n - 1, n - 1)?;
    Ok(GainLoss {
        n,
        gain: h_nn.by_entropy - h_n_prev.by_entropy,
        loss: h_prev.by_entropy - h_n_prev.by_entropy,
        delta_h: h_nn.by_entropy - h_prev.by_entropy,
        gain_from_conditional_entropies: h_n_prev.s_bar - h_nn.s_bar,
    })
}
