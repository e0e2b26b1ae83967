use crate::config::Tolerances;
use crate::entropy::{entropy_of_spectrum, matrix_entropy, EIGEN_ZERO};
use crate::error::{Error, Result};
use crate::lindblad::OpenSystemModel;
use crate::opalg::{
    ensure_faithful, repair_state, vector_norm, ComplexMatrix, DensityMatrix, SpectralDecomposition,
};
use crate::paycha::{
    martingale_operator, sigma_oracle_from_spectrum, sigma_series, SigmaEstimate, SigmaVariant,
};
use crate::real::{Real, C};

/// L*(ρ) dt + √η (Lρ + ρL† − λρ) dW, the unrepaired Euler–Maruyama increment.
pub fn sme_increment<T: Real>(
    rho: &ComplexMatrix<T>,
    model: &OpenSystemModel<T>,
    dt: T,
    dw: T,
) -> Result<ComplexMatrix<T>> {
    let mut inc = model.adjoint_generator(rho)?.scale_real(dt);
    let sqrt_eta = model.eta().sqrt();
    if sqrt_eta > T::zero() {
        let b = martingale_operator(rho, model.monitored(), SigmaVariant::WithLambda);
        inc.axpy_real(sqrt_eta * dw, &b);
    }
    Ok(inc)
}

/// One Euler–Maruyama step of the stochastic master equation followed by the
/// repair policy.
pub fn step_sme<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
    dt: T,
    dw: T,
) -> Result<DensityMatrix<T>> {
    Ok(step_sme_with(rho, model, dt, dw, &Tolerances::default())?.0)
}

/// As [`step_sme`], also returning the spectrum of the repaired state.
pub fn step_sme_with<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
    dt: T,
    dw: T,
    tol: &Tolerances,
) -> Result<(DensityMatrix<T>, SpectralDecomposition<T>)> {
    let next = rho.matrix() + &sme_increment(rho.matrix(), model, dt, dw)?;
    repair_state(&next, tol)
}

/// Normalized Kraus form of the same update:
///
///   ρ' ∝ N ρ N† + (1 − η) L ρ L† dt + Σ_{k ≠ monitored} L_k ρ L_k† dt
///   N  = I + (−iH − ½ Σ L_k†L_k + ½ηλL − ⅛ηλ²) dt + √η (L − ½λ) dW
///
/// which agrees with the Euler–Maruyama step to the same order and cannot
/// leave the positive cone.
pub fn step_sme_kraus<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
    dt: T,
    dw: T,
    tol: &Tolerances,
) -> Result<(DensityMatrix<T>, SpectralDecomposition<T>)> {
    let r = rho.matrix();
    let eta = model.eta();
    let sqrt_eta = eta.sqrt();
    let l = model.monitored();
    let lambda = model.signal(r);
    let half = T::lit(0.5);

    let d = model.dim();
    let mut n = ComplexMatrix::identity(d);
    n.axpy_real(dt, model.k_operator());
    n.axpy_real(half * eta * lambda * dt + sqrt_eta * dw, l);
    let shift = -(T::lit(0.125) * eta * lambda * lambda * dt + half * sqrt_eta * lambda * dw);
    n.axpy_real(shift, &ComplexMatrix::identity(d));

    let mut next = &(&n * r) * &n.adjoint();
    for (k, lk) in model.collapse_ops().enumerate() {
        let w = if k == model.monitored_index() {
            T::one() - eta
        } else {
            T::one()
        };
        if w > T::zero() {
            next.axpy_real(w * dt, &(&(lk * r) * &lk.adjoint()));
        }
    }
    let tr = next.trace().re;
    repair_state(&next.scale_real(tr.recip()), tol)
}

/// One step of the pure-state unraveling at unit efficiency:
///
///   dψ = −(iH + ½(L†L − λL + ¼λ²)) ψ dt + (L − ½λ) ψ dW,   λ = 2 Re⟨ψ|L|ψ⟩
///
/// followed by renormalization.
pub fn step_sse<T: Real>(
    psi: &[C<T>],
    model: &OpenSystemModel<T>,
    dt: T,
    dw: T,
) -> Result<Vec<C<T>>> {
    if model.eta() != T::one() {
        return Err(Error::EfficiencyNotUnit {
            eta: model.eta().as_f64(),
        });
    }
    if model.n_channels() != 1 {
        return Err(Error::InvalidModel(
            "the pure-state unraveling takes a single collapse operator".into(),
        ));
    }
    if psi.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: psi.len(),
        });
    }
    let l = model.monitored();
    let l_psi = l.apply(psi);
    let lambda = T::lit(2.0)
        * psi
            .iter()
            .zip(&l_psi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<T>();
    let half = T::lit(0.5);

    // K = −½L†L − iH, so −(iH + ½L†L) = K
    let k_psi = model.k_operator().apply(psi);
    let next: Vec<C<T>> = (0..psi.len())
        .map(|i| {
            let drift =
                k_psi[i] + (l_psi[i] * half * lambda) - psi[i] * (T::lit(0.125) * lambda * lambda);
            let noise = l_psi[i] - psi[i] * (half * lambda);
            psi[i] + drift * dt + noise * dw
        })
        .collect();
    let norm = vector_norm(&next);
    Ok(next.into_iter().map(|z| z / norm).collect())
}

/// Euler step ρ + L*(ρ) dt of the master equation.
pub fn master_step<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
    dt: T,
) -> Result<DensityMatrix<T>> {
    let next = rho.matrix() + &model.adjoint_generator(rho.matrix())?.scale_real(dt);
    Ok(repair_state(&next, &Tolerances::default())?.0)
}

/// dS/dt = −tr(ρ L(ln ρ)) along the master equation.
pub fn unconditional_entropy_rate<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
) -> Result<T> {
    let spec = rho.spectrum()?;
    ensure_faithful(&spec, Tolerances::default().faithful_floor)?;
    let ln_rho = spec.map(|x| x.ln());
    Ok(-rho.matrix().trace_product(&model.generator(&ln_rho)?).re)
}

/// Central difference (S(ρ + h L*ρ) − S(ρ − h L*ρ)) / 2h of the entropy along
/// the master equation.
pub fn entropy_rate_finite_difference<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
    h: T,
) -> Result<T> {
    let r = rho.matrix();
    let drift = model.adjoint_generator(r)?;
    let mut fwd = r.clone();
    fwd.axpy_real(h, &drift);
    let mut bwd = r.clone();
    bwd.axpy_real(-h, &drift);
    Ok((matrix_entropy(&fwd)? - matrix_entropy(&bwd)?) / (T::lit(2.0) * h))
}

/// The pieces of the conditional entropy increment
/// dS = (drift_lindblad + Σ) dt + martingale_coeff dI at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRateTerms<T> {
    pub entropy: T,
    pub lambda: T,
    /// −tr(ρ L(ln ρ))
    pub drift_lindblad: T,
    /// Spectral oracle with B = Lρ + ρL†.
    pub sigma_paper: T,
    /// Spectral oracle with B = Lρ + ρL† − λρ.
    pub sigma_lambda: T,
    /// −√η tr((Lρ + ρL† − λρ) ln ρ)
    pub martingale_coeff: T,
    /// −tr((Lρ + ρL† − λρ) ln ρ), without the efficiency factor.
    pub martingale_coeff_unscaled: T,
    /// Truncated series for both variants, when requested.
    pub series: Option<[SigmaEstimate<T>; 2]>,
}

impl<T: Real> EntropyRateTerms<T> {
    pub fn sigma(&self, variant: SigmaVariant) -> T {
        match variant {
            SigmaVariant::PaperForm => self.sigma_paper,
            SigmaVariant::WithLambda => self.sigma_lambda,
        }
    }

    /// (drift_lindblad, Σ, martingale_coeff) for one variant.
    pub fn for_variant(&self, variant: SigmaVariant) -> (T, T, T) {
        (
            self.drift_lindblad,
            self.sigma(variant),
            self.martingale_coeff,
        )
    }

    /// Predicted increment (drift + Σ) dt + martingale_coeff dI.
    pub fn predicted_increment(&self, variant: SigmaVariant, dt: T, di: T) -> T {
        (self.drift_lindblad + self.sigma(variant)) * dt + self.martingale_coeff * di
    }

    pub(crate) fn from_spectrum(
        rho: &ComplexMatrix<T>,
        spec: &SpectralDecomposition<T>,
        model: &OpenSystemModel<T>,
        tol: &Tolerances,
    ) -> Result<Self> {
        ensure_faithful(spec, tol.faithful_floor)?;
        let ln_rho = spec.map(|x| x.ln());
        let drift_lindblad = -rho.trace_product(&model.generator(&ln_rho)?).re;
        let l = model.monitored();
        let b_paper = martingale_operator(rho, l, SigmaVariant::PaperForm);
        let lambda = model.signal(rho);
        let mut b_lambda = b_paper.clone();
        b_lambda.axpy_real(-lambda, rho);
        let eta = model.eta();
        let unscaled = -b_lambda.trace_product(&ln_rho).re;
        Ok(Self {
            entropy: entropy_of_spectrum(&spec.eigenvalues, EIGEN_ZERO),
            lambda,
            drift_lindblad,
            sigma_paper: sigma_oracle_from_spectrum(spec, &b_paper, eta),
            sigma_lambda: sigma_oracle_from_spectrum(spec, &b_lambda, eta),
            martingale_coeff: eta.sqrt() * unscaled,
            martingale_coeff_unscaled: unscaled,
            series: None,
        })
    }

    pub(crate) fn attach_series(
        &mut self,
        rho: &DensityMatrix<T>,
        model: &OpenSystemModel<T>,
        k_max: usize,
    ) -> Result<()> {
        let l = model.monitored();
        let p = sigma_series(rho, l, model.eta(), k_max, SigmaVariant::PaperForm)?;
        let w = sigma_series(rho, l, model.eta(), k_max, SigmaVariant::WithLambda)?;
        self.series = Some([p, w]);
        Ok(())
    }
}

/// Drift, Σ (both variants, spectral oracle) and martingale coefficient at ρ.
pub fn entropy_rate_terms<T: Real>(
    rho: &DensityMatrix<T>,
    model: &OpenSystemModel<T>,
) -> Result<EntropyRateTerms<T>> {
    let spec = rho.spectrum()?;
    EntropyRateTerms::from_spectrum(rho.matrix(), &spec, model, &Tolerances::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::pauli;

    fn dephasing(eta: f64) -> OpenSystemModel<f64> {
        OpenSystemModel::single(ComplexMatrix::zeros(2), pauli::sigma_z(), eta).unwrap()
    }

    #[test]
    fn zero_efficiency_is_master_step() {
        let m = OpenSystemModel::single(
            pauli::sigma_x::<f64>().scale_real(0.3),
            pauli::sigma_minus(),
            0.0,
        )
        .unwrap();
        let rho = DensityMatrix::new(
            ComplexMatrix::from_rows(&[
                vec![C::new(0.6, 0.0), C::new(0.1, 0.05)],
                vec![C::new(0.1, -0.05), C::new(0.4, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let a = step_sme(&rho, &m, 1e-3, 0.37).unwrap();
        let b = master_step(&rho, &m, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trivial_model_leaves_state() {
        let m =
            OpenSystemModel::single(ComplexMatrix::zeros(2), ComplexMatrix::zeros(2), 1.0).unwrap();
        let rho = DensityMatrix::from_diag(&[0.7, 0.3]).unwrap();
        assert_eq!(step_sme(&rho, &m, 1e-3, 0.1).unwrap(), rho);
    }

    #[test]
    fn hand_evaluated_step() {
        let m = dephasing(1.0);
        let rho = DensityMatrix::from_diag(&[0.7, 0.3]).unwrap();
        let (dt, dw) = (1e-4, 0.01);
        // L*ρ = σzρσz − ρ = 0 for diagonal ρ; B_λ = diag(0.84, −0.84)
        let expected = ComplexMatrix::from_diag(&[0.7 + 0.84 * dw, 0.3 - 0.84 * dw]);
        let got = step_sme(&rho, &m, dt, dw).unwrap();
        assert!(got.matrix().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn sse_limits() {
        let h = pauli::sigma_z::<f64>();
        let m = OpenSystemModel::single(h.clone(), ComplexMatrix::zeros(2), 1.0).unwrap();
        let psi = vec![C::new(0.6, 0.0), C::new(0.0, 0.8)];
        let free =
            OpenSystemModel::single(ComplexMatrix::zeros(2), ComplexMatrix::zeros(2), 1.0).unwrap();
        assert_eq!(step_sse(&psi, &free, 1e-3, 0.2).unwrap(), psi);
        let dt = 1e-3;
        let next = step_sse(&psi, &m, dt, 0.2).unwrap();
        // first-order Schrödinger step, renormalized
        let raw = [psi[0] * C::new(1.0, -dt), psi[1] * C::new(1.0, dt)];
        let n = vector_norm(&raw);
        assert!((next[0] - raw[0] / n).norm() < 1e-15 && (next[1] - raw[1] / n).norm() < 1e-15);
        assert!(matches!(
            step_sse(&psi, &dephasing(0.5), dt, 0.0),
            Err(Error::EfficiencyNotUnit { .. })
        ));
    }

    #[test]
    fn rate_terms_commuting_example() {
        let rho = DensityMatrix::from_diag(&[0.7, 0.3]).unwrap();
        let t = entropy_rate_terms(&rho, &dephasing(1.0)).unwrap();
        assert!(t.drift_lindblad.abs() < 1e-15);
        assert!((t.martingale_coeff + 0.84 * (7.0f64 / 3.0).ln()).abs() < 1e-14);
        assert!((t.martingale_coeff + 0.711_730_202_725).abs() < 1e-12);
        assert!((t.sigma_lambda + 1.68).abs() < 1e-12);
        assert!((t.sigma_paper + 2.0).abs() < 1e-12);
        let mixed =
            entropy_rate_terms(&DensityMatrix::maximally_mixed(2), &dephasing(1.0)).unwrap();
        assert!(mixed.martingale_coeff.abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_only_rate() {
        let h = pauli::sigma_x::<f64>();
        let m = OpenSystemModel::single(h.clone(), ComplexMatrix::zeros(2), 1.0).unwrap();
        let rho = DensityMatrix::from_diag(&[0.7, 0.3]).unwrap();
        let t = entropy_rate_terms(&rho, &m).unwrap();
        assert!(t.drift_lindblad.abs() < 1e-15);
        assert_eq!(t.sigma_lambda, 0.0);
        assert_eq!(t.martingale_coeff, 0.0);
        assert!(unconditional_entropy_rate(&rho, &m).unwrap().abs() < 1e-15);
        let commuting =
            OpenSystemModel::single(pauli::sigma_z(), ComplexMatrix::zeros(2), 1.0).unwrap();
        assert!(
            entropy_rate_terms(&rho, &commuting)
                .unwrap()
                .drift_lindblad
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn dephasing_fixed_point_rate() {
        let r = unconditional_entropy_rate(&DensityMatrix::maximally_mixed(2), &dephasing(1.0))
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn kraus_step_matches_em_to_first_order() {
        let m = OpenSystemModel::new(
            pauli::sigma_x::<f64>().scale_real(0.5),
            vec![
                pauli::sigma_minus(),
                pauli::sigma_z::<f64>().scale_real(0.3),
            ],
            0,
            0.6,
        )
        .unwrap();
        let rho = DensityMatrix::from_diag(&[0.55, 0.45]).unwrap();
        let tol = Tolerances::default();
        let errs: Vec<f64> = [1e-3, 5e-4]
            .iter()
            .map(|&dt: &f64| {
                let dw = dt.sqrt();
                let a = step_sme_with(&rho, &m, dt, dw, &tol).unwrap().0;
                let b = step_sme_kraus(&rho, &m, dt, dw, &tol).unwrap().0;
                a.matrix().max_abs_diff(b.matrix())
            })
            .collect();
        // with dW² = dt the two schemes agree through O(dt)
        assert!(errs[0] < 1e-3 && errs[0] / errs[1] > 2.4);
    }
}
