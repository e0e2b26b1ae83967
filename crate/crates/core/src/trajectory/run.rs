use rayon::prelude::*;

use super::step::{step_sme_kraus, step_sme_with, EntropyRateTerms};
use super::{InnovationPath, Scheme, TrajectoryConfig};
use crate::config::Tolerances;
use crate::entropy::{entropy_of_spectrum, EIGEN_ZERO};
use crate::error::Result;
use crate::lindblad::OpenSystemModel;
use crate::opalg::{ComplexMatrix, DensityMatrix, SpectralDecomposition};
use crate::paycha::SigmaVariant;
use crate::real::{CompensatedSum, Real, C};

/// What a trajectory runner reports after each step k → k + 1.
pub struct StepRecord<'a, T> {
    pub step: usize,
    pub t: T,
    /// ρ̂ at the start of the step.
    pub rho: &'a DensityMatrix<T>,
    pub lambda: T,
    pub d_i: T,
    /// S(ρ̂_k)
    pub entropy: T,
    /// S(ρ̂_{k+1}) − S(ρ̂_k)
    pub ds_actual: T,
    /// Rate terms at ρ̂_k when entropy recording is on.
    pub terms: Option<&'a EntropyRateTerms<T>>,
}

/// Steps one trajectory along `increments`, handing each step to `visit`,
/// and returns the final state.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory<T: Real>(
    model: &OpenSystemModel<T>,
    rho0: &DensityMatrix<T>,
    increments: &[f64],
    dt: T,
    scheme: Scheme,
    record_entropy: bool,
    series_k_max: Option<usize>,
    tol: &Tolerances,
    mut visit: impl FnMut(&StepRecord<'_, T>),
) -> Result<DensityMatrix<T>> {
    let mut rho = rho0.clone();
    let mut spec: SpectralDecomposition<T> = rho.spectrum()?;
    let mut entropy = entropy_of_spectrum(&spec.eigenvalues, EIGEN_ZERO);
    for (k, &dw) in increments.iter().enumerate() {
        let terms = if record_entropy {
            let mut t = EntropyRateTerms::from_spectrum(rho.matrix(), &spec, model, tol)?;
            if let Some(k_max) = series_k_max {
                t.attach_series(&rho, model, k_max)?;
            }
            Some(t)
        } else {
            None
        };
        let dw = T::lit(dw);
        let (next, next_spec) = match scheme {
            Scheme::EulerMaruyama => step_sme_with(&rho, model, dt, dw, tol)?,
            Scheme::Kraus => step_sme_kraus(&rho, model, dt, dw, tol)?,
        };
        let next_entropy = entropy_of_spectrum(&next_spec.eigenvalues, EIGEN_ZERO);
        visit(&StepRecord {
            step: k,
            t: T::from_usize_lossy(k) * dt,
            rho: &rho,
            lambda: model.signal(rho.matrix()),
            d_i: dw,
            entropy,
            ds_actual: next_entropy - entropy,
            terms: terms.as_ref(),
        });
        rho = next;
        spec = next_spec;
        entropy = next_entropy;
    }
    Ok(rho)
}

/// One recorded time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame<T> {
    pub t: T,
    pub dt: T,
    pub trajectory_id: usize,
    pub rho_hat: DensityMatrix<T>,
    pub lambda: T,
    /// Innovation increment over [t, t + dt].
    pub d_i: T,
    pub entropy: T,
    pub ds_actual: T,
    pub drift_lindblad: T,
    pub sigma_paper: T,
    pub sigma_lambda: T,
    pub martingale_coeff: T,
    /// Truncated series values (paper, lambda), when requested.
    pub series: Option<(T, T)>,
}

impl<T: Real> TrajectoryFrame<T> {
    pub fn sigma(&self, variant: SigmaVariant) -> T {
        match variant {
            SigmaVariant::PaperForm => self.sigma_paper,
            SigmaVariant::WithLambda => self.sigma_lambda,
        }
    }

    /// (drift_lindblad + Σ) dt + martingale_coeff dI
    pub fn ds_pred(&self, variant: SigmaVariant) -> T {
        (self.drift_lindblad + self.sigma(variant)) * self.dt + self.martingale_coeff * self.d_i
    }

    fn from_record(rec: &StepRecord<'_, T>, dt: T, trajectory_id: usize) -> Self {
        let nan = T::nan();
        let (drift, sp, sl, mc, series) = match rec.terms {
            Some(t) => (
                t.drift_lindblad,
                t.sigma_paper,
                t.sigma_lambda,
                t.martingale_coeff,
                t.series.as_ref().map(|[p, w]| (p.value, w.value)),
            ),
            None => (nan, nan, nan, nan, None),
        };
        Self {
            t: rec.t,
            dt,
            trajectory_id,
            rho_hat: rec.rho.clone(),
            lambda: rec.lambda,
            d_i: rec.d_i,
            entropy: rec.entropy,
            ds_actual: rec.ds_actual,
            drift_lindblad: drift,
            sigma_paper: sp,
            sigma_lambda: sl,
            martingale_coeff: mc,
            series,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub trajectory_id: usize,
    pub frames: Vec<TrajectoryFrame<T>>,
    pub final_state: DensityMatrix<T>,
}

/// Runs `config.n_trajectories` independent trajectories in parallel. Each
/// trajectory draws its innovations from its own stream of the seed, so the
/// output does not depend on scheduling.
pub fn simulate<T: Real>(
    config: &TrajectoryConfig,
    model: &OpenSystemModel<T>,
    rho0: &DensityMatrix<T>,
) -> Result<Vec<TrajectoryRecord<T>>> {
    config.validate()?;
    let n_steps = config.n_steps();
    let dt = T::lit(config.dt);
    let series = config.series_diagnostic.then_some(config.tolerances.k_max);
    (0..config.n_trajectories)
        .into_par_iter()
        .map(|id| {
            let path = InnovationPath::generate(config.seed, id as u64, config.dt, n_steps);
            let mut frames = Vec::with_capacity(n_steps / config.record_every + 1);
            let final_state = run_trajectory(
                model,
                rho0,
                &path.increments,
                dt,
                config.scheme,
                config.record_entropy,
                series,
                &config.tolerances,
                |rec| {
                    if rec.step % config.record_every == 0 {
                        frames.push(TrajectoryFrame::from_record(rec, dt, id));
                    }
                },
            )?;
            Ok(TrajectoryRecord {
                trajectory_id: id,
                frames,
                final_state,
            })
        })
        .collect()
}

/// Entrywise compensated mean of a set of states.
pub fn ensemble_mean_state<'a, T: Real>(
    states: impl IntoIterator<Item = &'a DensityMatrix<T>>,
) -> Option<ComplexMatrix<T>> {
    let mut it = states.into_iter().peekable();
    let d = it.peek()?.dim();
    let mut re = vec![CompensatedSum::<T>::new(); d * d];
    let mut im = vec![CompensatedSum::<T>::new(); d * d];
    let mut n = 0usize;
    for s in it {
        for (idx, z) in s.matrix().entries().iter().enumerate() {
            re[idx].add(z.re);
            im[idx].add(z.im);
        }
        n += 1;
    }
    let w = T::from_usize_lossy(n).recip();
    Some(ComplexMatrix::from_fn(d, |i, j| {
        C::new(re[i * d + j].value() * w, im[i * d + j].value() * w)
    }))
}
