//! Which Σ variant reproduces simulated entropy increments.
//!
//! Every trajectory is integrated twice on one Brownian path, at dt/2 and at
//! dt (pairwise-summed increments). Per step the residual
//! r = ΔS_actual − ΔS_pred is recorded for both variants. The matching variant
//! shows residual RMS shrinking under dt-halving and a time-averaged residual
//! rate r/dt compatible with zero; the other one carries a bias.

use rayon::prelude::*;
use serde::Serialize;

use super::run::run_trajectory;
use super::{InnovationPath, Scheme};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::lindblad::OpenSystemModel;
use crate::opalg::DensityMatrix;
use crate::paycha::SigmaVariant;
use crate::stats::mean_and_se;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjudicationConfig {
    /// The coarse step; the fine step is half of it.
    pub dt: f64,
    pub t_final: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// RMS ratio window for O(dt^{3/2})-consistent residuals.
    pub ratio_window: (f64, f64),
    /// Bias acceptance in standard errors.
    pub bias_sigmas: f64,
}

impl Default for AdjudicationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 0.5,
            n_trajectories: 500,
            seed: 1,
            scheme: Scheme::EulerMaruyama,
            ratio_window: (2.0, 3.7),
            bias_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantVerdict {
    pub variant: SigmaVariant,
    pub rms_coarse: f64,
    pub rms_fine: f64,
    pub rms_ratio: f64,
    /// Mean over trajectories of the time-averaged residual rate Σr/(n dt).
    pub bias_coarse: f64,
    pub se_coarse: f64,
    pub bias_fine: f64,
    pub se_fine: f64,
    /// RMS ratio when Σ is weighted by dI² instead of dt.
    pub pathwise_rms_ratio: f64,
    pub ratio_ok: bool,
    pub bias_ok: bool,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjudicationReport {
    pub eta: f64,
    pub dt_coarse: f64,
    pub dt_fine: f64,
    pub n_trajectories: usize,
    pub verdicts: Vec<VariantVerdict>,
    /// The single passing variant, if exactly one passes.
    pub identified: Option<SigmaVariant>,
    /// RMS ratio of the lambda-variant residual when the martingale
    /// coefficient omits the √η factor.
    pub unscaled_martingale_rms_ratio: f64,
    /// RMS of that residual at the coarse step.
    pub unscaled_martingale_rms_coarse: f64,
}

impl AdjudicationReport {
    pub fn verdict(&self, variant: SigmaVariant) -> &VariantVerdict {
        self.verdicts
            .iter()
            .find(|v| v.variant == variant)
            .expect("both variants are adjudicated")
    }
}

#[derive(Debug, Clone, Default)]
struct LevelStats {
    n: usize,
    sum_sq: [f64; 2],
    sum: [f64; 2],
    pathwise_sum_sq: [f64; 2],
    unscaled_sum_sq: f64,
}

fn run_level(
    model: &OpenSystemModel<f64>,
    rho0: &DensityMatrix<f64>,
    path: &InnovationPath,
    scheme: Scheme,
    tol: &Tolerances,
) -> Result<LevelStats> {
    let mut s = LevelStats::default();
    let dt = path.dt;
    run_trajectory(
        model,
        rho0,
        &path.increments,
        dt,
        scheme,
        true,
        None,
        tol,
        |rec| {
            let t = rec.terms.expect("entropy recording on");
            s.n += 1;
            for (i, v) in SigmaVariant::ALL.iter().enumerate() {
                let r = rec.ds_actual - t.predicted_increment(*v, dt, rec.d_i);
                s.sum_sq[i] += r * r;
                s.sum[i] += r;
                let pathwise = t.drift_lindblad * dt
                    + t.sigma(*v) * rec.d_i * rec.d_i
                    + t.martingale_coeff * rec.d_i;
                let rp = rec.ds_actual - pathwise;
                s.pathwise_sum_sq[i] += rp * rp;
            }
            let unscaled =
                (t.drift_lindblad + t.sigma_lambda) * dt + t.martingale_coeff_unscaled * rec.d_i;
            let ru = rec.ds_actual - unscaled;
            s.unscaled_sum_sq += ru * ru;
        },
    )?;
    Ok(s)
}

/// Runs the coupled dt / dt/2 ensembles and scores both variants.
pub fn adjudicate(
    model: &OpenSystemModel<f64>,
    rho0: &DensityMatrix<f64>,
    cfg: &AdjudicationConfig,
    tol: &Tolerances,
) -> Result<AdjudicationReport> {
    if cfg.n_trajectories < 2 {
        return Err(Error::InvalidConfig(
            "adjudication needs at least two trajectories".into(),
        ));
    }
    let n_coarse = (cfg.t_final / cfg.dt).round() as usize;
    if n_coarse == 0 {
        return Err(Error::InvalidConfig("t_final shorter than dt".into()));
    }
    let dt_fine = cfg.dt / 2.0;
    let per_traj: Vec<(LevelStats, LevelStats)> = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|i| {
            let fine = InnovationPath::generate(cfg.seed, i as u64, dt_fine, 2 * n_coarse);
            let coarse = fine.coarsen();
            Ok((
                run_level(model, rho0, &coarse, cfg.scheme, tol)?,
                run_level(model, rho0, &fine, cfg.scheme, tol)?,
            ))
        })
        .collect::<Result<_>>()?;

    // pooled RMS over all steps of all trajectories at one level
    let rms = |fine: bool, pick: &dyn Fn(&LevelStats) -> f64| {
        let (sq, n) = per_traj
            .iter()
            .map(|p| if fine { &p.1 } else { &p.0 })
            .fold((0.0, 0usize), |(a, n), s| (a + pick(s), n + s.n));
        (sq / n as f64).sqrt()
    };

    let mut verdicts = Vec::new();
    for (i, &variant) in SigmaVariant::ALL.iter().enumerate() {
        let rms_coarse = rms(false, &|s| s.sum_sq[i]);
        let rms_fine = rms(true, &|s| s.sum_sq[i]);
        let rms_ratio = rms_coarse / rms_fine;
        let pathwise_rms_ratio =
            rms(false, &|s| s.pathwise_sum_sq[i]) / rms(true, &|s| s.pathwise_sum_sq[i]);
        let rate = |s: &LevelStats, dt: f64| s.sum[i] / (s.n as f64 * dt);
        let (bias_coarse, se_coarse) = mean_and_se(
            &per_traj
                .iter()
                .map(|p| rate(&p.0, cfg.dt))
                .collect::<Vec<_>>(),
        );
        let (bias_fine, se_fine) = mean_and_se(
            &per_traj
                .iter()
                .map(|p| rate(&p.1, dt_fine))
                .collect::<Vec<_>>(),
        );
        let ratio_ok = rms_ratio >= cfg.ratio_window.0 && rms_ratio <= cfg.ratio_window.1;
        let bias_ok = bias_coarse.abs() <= cfg.bias_sigmas * se_coarse
            && bias_fine.abs() <= cfg.bias_sigmas * se_fine;
        verdicts.push(VariantVerdict {
            variant,
            rms_coarse,
            rms_fine,
            rms_ratio,
            bias_coarse,
            se_coarse,
            bias_fine,
            se_fine,
            pathwise_rms_ratio,
            ratio_ok,
            bias_ok,
            passes: ratio_ok && bias_ok,
        });
    }
    let passing: Vec<SigmaVariant> = verdicts
        .iter()
        .filter(|v| v.passes)
        .map(|v| v.variant)
        .collect();
    let unscaled_coarse = rms(false, &|s| s.unscaled_sum_sq);
    let unscaled_fine = rms(true, &|s| s.unscaled_sum_sq);
    Ok(AdjudicationReport {
        eta: model.eta(),
        dt_coarse: cfg.dt,
        dt_fine,
        n_trajectories: cfg.n_trajectories,
        verdicts,
        identified: if passing.len() == 1 {
            Some(passing[0])
        } else {
            None
        },
        unscaled_martingale_rms_ratio: unscaled_coarse / unscaled_fine,
        unscaled_martingale_rms_coarse: unscaled_coarse,
    })
}
