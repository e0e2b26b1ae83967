//! Fixed-seed property suites, one per module, run by the `verify` command
//! and the acceptance harness.
//!
//! Every property reduces each case to a violation measure that must stay at
//! or below the property's tolerance; the outcome records the worst case.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::config::Tolerances;
use crate::discrete::{
    channel_check, conditional_map, entropy_inequalities, enumerate_branches, holevo_info,
    ordering_identity, unconditional_map, unconditional_power, Outcome, ProbeModel, VMode,
};
use crate::entropy::{relative_entropy, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::lindblad::OpenSystemModel;
use crate::opalg::{
    ad_pow, exp_hermitian, hermitian_eig, matrix_function_psd, pauli, validate_density,
    ComplexMatrix, DensityMatrix, MatrixFunction, RepairPolicy,
};
use crate::paycha::{
    martingale_operator, paycha_term_filtered, sigma_coefficient, sigma_regrouped,
    sigma_series_for_operator, sigma_spectral_oracle, EntropyFunction, SeriesOptions, SigmaVariant,
};
use crate::random::StateSampler;
use crate::trajectory::{
    entropy_rate_finite_difference, master_step, simulate, sme_increment, step_sme,
    unconditional_entropy_rate, TrajectoryConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Opalg,
    Lindblad,
    Entropy,
    Paycha,
    Trajectory,
    Discrete,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Opalg,
        Suite::Lindblad,
        Suite::Entropy,
        Suite::Paycha,
        Suite::Trajectory,
        Suite::Discrete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Opalg => "opalg",
            Suite::Lindblad => "lindblad",
            Suite::Entropy => "entropy",
            Suite::Paycha => "paycha",
            Suite::Trajectory => "trajectory",
            Suite::Discrete => "discrete",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A suite name or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    One(Suite),
    All,
}

impl Selector {
    pub fn suites(self) -> Vec<Suite> {
        match self {
            Selector::One(s) => vec![s],
            Selector::All => Suite::ALL.to_vec(),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Selector::All);
        }
        Suite::ALL
            .iter()
            .find(|x| x.name() == s)
            .map(|&x| Selector::One(x))
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown suite '{s}' (expected {} or all)",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Random cases per property.
    pub seeds: u64,
    /// Σ shell coefficient used by the paycha suite.
    pub sigma_coefficient: fn(usize, usize) -> f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seeds: 100,
            sigma_coefficient,
        }
    }
}

/// The Σ coefficient scaled by 1.01, for checking that the suites notice.
pub fn mutated_sigma_coefficient(k1: usize, k2: usize) -> f64 {
    1.01 * sigma_coefficient(k1, k2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub suite: Suite,
    pub name: &'static str,
    pub cases: u64,
    /// Largest violation measure seen.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub elapsed: Duration,
    /// First error raised by a case, if any.
    pub error: Option<String>,
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}::{} worst={:.3e} tol={:.1e} cases={} ({:.1} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.worst,
            self.tolerance,
            self.cases,
            self.elapsed.as_secs_f64() * 1e3
        )?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        Ok(())
    }
}

fn property(
    suite: Suite,
    name: &'static str,
    tolerance: f64,
    cases: u64,
    mut case: impl FnMut(u64) -> Result<f64>,
) -> PropertyOutcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut error = None;
    for seed in 0..cases {
        match case(seed) {
            // NaN counts as a violation
            Ok(v) => {
                worst = if v.is_nan() {
                    f64::INFINITY
                } else {
                    worst.max(v)
                }
            }
            Err(e) => {
                error = Some(format!("seed {seed}: {e}"));
                break;
            }
        }
    }
    PropertyOutcome {
        suite,
        name,
        cases,
        worst,
        tolerance,
        passed: error.is_none() && worst <= tolerance,
        elapsed: start.elapsed(),
        error,
    }
}

fn sampler(suite: Suite, seed: u64) -> StateSampler<f64> {
    // distinct streams per suite so suites do not share draws
    StateSampler::new(seed ^ ((suite as u64 + 1) << 32))
}

fn random_model(s: &mut StateSampler<f64>, d: usize, eta: f64) -> Result<OpenSystemModel<f64>> {
    let h = s.hermitian(d);
    let l1 = s.operator_with_norm(d, 1.0);
    let l2 = s.operator_with_norm(d, 0.5);
    OpenSystemModel::new(h, vec![l1, l2], 0, eta)
}

fn faithful(s: &mut StateSampler<f64>, d: usize) -> DensityMatrix<f64> {
    s.density_with_spread(d, 1.0, 1.5)
}

fn opalg(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let n = opts.seeds;
    let su = Suite::Opalg;
    vec![
        property(su, "eig_reconstruction", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let m = s.hermitian(2 + (seed % 4) as usize).scale_real(3.0);
            let spec = hermitian_eig(&m)?;
            Ok(spec.reconstruct().max_abs_diff(&m) / m.max_norm().max(1.0))
        }),
        property(su, "exp_log_round_trip", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let rho = faithful(&mut s, 2 + (seed % 3) as usize);
            let log = matrix_function_psd(&rho, MatrixFunction::Log, 1e-10)?;
            Ok(exp_hermitian(&log)?.max_abs_diff(rho.matrix()))
        }),
        property(su, "inverse_times_state", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let rho = faithful(&mut s, 2 + (seed % 3) as usize);
            let inv = matrix_function_psd(&rho, MatrixFunction::Inverse, 1e-10)?;
            Ok((&inv * rho.matrix()).max_abs_diff(&ComplexMatrix::identity(rho.dim())))
        }),
        property(su, "ad_power_trace_vanishes", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let rho = faithful(&mut s, d);
            let x = s.ginibre(d);
            (1..=6).try_fold(0.0f64, |w, k| {
                Ok(w.max(ad_pow(rho.matrix(), &x, k)?.trace().norm()))
            })
        }),
        property(su, "ad_power_composition", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let rho = faithful(&mut s, d);
            let x = s.ginibre(d);
            let mut w = 0.0f64;
            for (j, k) in [(1, 1), (2, 1), (1, 3), (2, 2)] {
                let direct = ad_pow(rho.matrix(), &x, j + k)?;
                let nested = ad_pow(rho.matrix(), &ad_pow(rho.matrix(), &x, k)?, j)?;
                w = w.max(direct.max_abs_diff(&nested));
            }
            Ok(w)
        }),
    ]
}

fn lindblad(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let n = opts.seeds;
    let su = Suite::Lindblad;
    vec![
        property(su, "duality", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let m = random_model(&mut s, d, 1.0)?;
            let rho = s.hermitian(d);
            let x = s.hermitian(d);
            let lhs = rho.trace_product(&m.generator(&x)?);
            let rhs = m.adjoint_generator(&rho)?.trace_product(&x);
            Ok((lhs - rhs).norm())
        }),
        property(su, "adjoint_trace_preserving", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let m = random_model(&mut s, d, 1.0)?;
            let rho = s.density(d);
            Ok(m.adjoint_generator(rho.matrix())?.trace().norm())
        }),
        property(su, "adjoint_hermiticity", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let m = random_model(&mut s, d, 1.0)?;
            let rho = s.hermitian(d);
            Ok(m.adjoint_generator(&rho)?.asymmetry())
        }),
        property(su, "generator_unital", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let m = random_model(&mut s, d, 1.0)?;
            Ok(m.generator(&ComplexMatrix::identity(d))?.max_norm())
        }),
    ]
}

fn discrete_probe(s: &mut StateSampler<f64>, d: usize, tau: f64) -> Result<ProbeModel<f64>> {
    ProbeModel::new(
        s.hermitian(d),
        s.operator_with_norm(d, 1.0),
        tau,
        VMode::ExactExp,
    )
}

fn entropy(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let n = opts.seeds;
    let su = Suite::Entropy;
    vec![
        property(su, "klein", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let (rho, sigma) = (s.density(d), s.density(d));
            Ok(-relative_entropy(&rho, &sigma)?)
        }),
        property(su, "relative_entropy_to_self", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let rho = s.density(2 + (seed % 3) as usize);
            Ok(relative_entropy(&rho, &rho)?.abs())
        }),
        property(su, "data_processing", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 2) as usize;
            let probe = discrete_probe(&mut s, d, 0.05)?;
            let (rho, sigma) = (s.density(d), s.density(d));
            let tol = Tolerances::default();
            let push = |x: &DensityMatrix<f64>| {
                validate_density(
                    &unconditional_map(x.matrix(), &probe),
                    tol.hermitian,
                    RepairPolicy::Repair {
                        max_violation: tol.repair_tol,
                    },
                )
            };
            Ok(relative_entropy(&push(&rho)?, &push(&sigma)?)? - relative_entropy(&rho, &sigma)?)
        }),
        property(su, "entropy_bounds", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 4) as usize;
            let rho = if seed % 5 == 0 {
                DensityMatrix::pure(&s.pure_vector(d))?
            } else {
                s.density(d)
            };
            let v = von_neumann_entropy(&rho)?;
            Ok((-v).max(v - (d as f64).ln()))
        }),
        property(su, "unitary_invariance", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let rho = s.density(d);
            let u = s.unitary(d);
            let rot = DensityMatrix::new((&(&u * rho.matrix()) * &u.adjoint()).hermitian_part())?;
            Ok((von_neumann_entropy(&rot)? - von_neumann_entropy(&rho)?).abs())
        }),
    ]
}

fn paycha(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let n = opts.seeds;
    let su = Suite::Paycha;
    let series = SeriesOptions {
        coefficient: opts.sigma_coefficient,
        ..SeriesOptions::default()
    };
    vec![
        property(su, "series_matches_oracle", 1e-8, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 2) as usize;
            let rho = faithful(&mut s, d);
            let l = s.operator_with_norm(d, 1.0);
            let mut w = 0.0f64;
            for v in SigmaVariant::ALL {
                let b = martingale_operator(rho.matrix(), &l, v);
                let est = sigma_series_for_operator(&rho, &b, 1.0, v, &series)?;
                if !est.converged {
                    return Ok(f64::INFINITY);
                }
                w = w.max((est.value - sigma_spectral_oracle(&rho, &b, 1.0)?).abs());
            }
            Ok(w)
        }),
        property(su, "regrouped_shells", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 2) as usize;
            let rho = faithful(&mut s, d);
            let l = s.operator_with_norm(d, 1.0);
            let b = martingale_operator(rho.matrix(), &l, SigmaVariant::PaperForm);
            let a = sigma_series_for_operator(&rho, &b, 1.0, SigmaVariant::PaperForm, &series)?;
            let r = sigma_regrouped(&rho, &l, 1.0, series.k_max)?;
            Ok(a.shells
                .iter()
                .zip(&r.shells)
                .fold(0.0f64, |w, (x, y)| w.max((x - y).abs())))
        }),
        property(su, "commuting_shells_vanish", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 3) as usize;
            let p: Vec<f64> = (0..d).map(|_| s.uniform(0.2, 1.0)).collect();
            let total: f64 = p.iter().sum();
            let rho = DensityMatrix::from_diag(&p.iter().map(|x| x / total).collect::<Vec<_>>())?;
            let l = ComplexMatrix::from_diag(
                &(0..d).map(|_| s.uniform(-1.0, 1.0)).collect::<Vec<f64>>(),
            );
            let b = martingale_operator(rho.matrix(), &l, SigmaVariant::PaperForm);
            let est = sigma_series_for_operator(&rho, &b, 1.0, SigmaVariant::PaperForm, &series)?;
            Ok(est.shells[1..].iter().fold(0.0f64, |w, x| w.max(x.abs())))
        }),
        property(su, "first_order_trace_k1_zero", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 2) as usize;
            let rho = faithful(&mut s, d);
            let eps = s.hermitian(d).scale_real(1e-2);
            let t =
                paycha_term_filtered(rho.matrix(), &eps, 1, 12, &EntropyFunction, |ks| ks[0] >= 1)?;
            Ok(t.matrix.trace().norm())
        }),
    ]
}

fn trajectory(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let n = opts.seeds;
    let su = Suite::Trajectory;
    vec![
        property(su, "step_trace_guard", 0.0, n, |seed| {
            let mut s = sampler(su, seed);
            let m = random_model(&mut s, 2, 0.7)?;
            let rho = s.density(2);
            let dt = 1e-3f64;
            let dw = s.normal() * dt.sqrt();
            let inc = sme_increment(rho.matrix(), &m, dt, dw)?;
            Ok(((rho.matrix() + &inc).trace().re - 1.0).abs() - 10.0 * dt * dt)
        }),
        property(su, "zero_efficiency_is_master", 1e-15, n, |seed| {
            let mut s = sampler(su, seed);
            let m = random_model(&mut s, 2, 0.0)?;
            let rho = s.density(2);
            let a = step_sme(&rho, &m, 1e-3, s.normal())?;
            let b = master_step(&rho, &m, 1e-3)?;
            Ok(a.matrix().max_abs_diff(b.matrix()))
        }),
        property(su, "unconditional_rate", 1e-6, n.min(20), |seed| {
            let mut s = sampler(su, seed);
            let m = random_model(&mut s, 2, 1.0)?;
            let rho = faithful(&mut s, 2);
            let exact = unconditional_entropy_rate(&rho, &m)?;
            let fd = entropy_rate_finite_difference(&rho, &m, 1e-6)?;
            Ok((fd - exact).abs() / exact.abs().max(1e-3))
        }),
        property(su, "seeded_determinism", 0.0, 3, |seed| {
            let m = OpenSystemModel::single(
                pauli::sigma_x::<f64>().scale_real(0.5),
                pauli::sigma_minus(),
                0.8,
            )?;
            let cfg = TrajectoryConfig {
                t_final: 0.02,
                n_trajectories: 2,
                seed,
                ..TrajectoryConfig::default()
            };
            let rho = DensityMatrix::from_diag(&[0.6, 0.4])?;
            let a = simulate(&cfg, &m, &rho)?;
            let b = simulate(&cfg, &m, &rho)?;
            Ok(if a == b { 0.0 } else { 1.0 })
        }),
    ]
}

fn discrete(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let n = opts.seeds;
    let su = Suite::Discrete;
    let faithful_probe = |s: &mut StateSampler<f64>, d: usize| {
        discrete_probe(s, d, 0.05)?.with_probe_state(DensityMatrix::from_diag(&[0.9, 0.1])?)
    };
    vec![
        property(su, "unitarity", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let p = discrete_probe(&mut s, 2 + (seed % 2) as usize, 0.05)?;
            Ok(p.unitarity_defect()
                .max(p.measurement_completeness_defect()))
        }),
        property(su, "channel_cptp", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let p = faithful_probe(&mut s, 2 + (seed % 2) as usize)?;
            let c = channel_check(&p)?;
            Ok((-c.min_choi_eigenvalue).max(c.trace_preservation_defect))
        }),
        property(su, "conditional_maps_sum", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let d = 2 + (seed % 2) as usize;
            let p = discrete_probe(&mut s, d, 0.05)?;
            let rho = s.density(d);
            let (a, pa) = conditional_map(rho.matrix(), &p, Outcome::Plus);
            let (b, pb) = conditional_map(rho.matrix(), &p, Outcome::Minus);
            let joint = crate::opalg::partial_trace_second(&p.joint_state(rho.matrix()), d, 2)?;
            Ok((&a + &b).max_abs_diff(&joint).max((pa + pb - 1.0).abs()))
        }),
        property(su, "ordering_identity", 1e-12, n, |seed| {
            let mut s = sampler(su, seed);
            let p = faithful_probe(&mut s, 2)?;
            let o = ordering_identity(&s.density(2), &p)?;
            Ok(o.interleaved_vs_commuted.max(o.reduced_vs_sequential))
        }),
        property(su, "ensemble_identity", 1e-12, n.min(25), |seed| {
            let mut s = sampler(su, seed);
            let p = discrete_probe(&mut s, 2, 0.05)?;
            let rho = s.density(2);
            let mut w = 0.0f64;
            for depth in 1..=5 {
                let mut mean = ComplexMatrix::zeros(2);
                for b in enumerate_branches(&rho, &p, depth)? {
                    mean += &b.unnormalized_state;
                }
                w = w.max(mean.max_abs_diff(&unconditional_power(rho.matrix(), &p, depth)));
            }
            Ok(w)
        }),
        property(su, "entropy_inequalities", 1e-10, n, |seed| {
            let mut s = sampler(su, seed);
            let p = faithful_probe(&mut s, 2)?;
            let r = entropy_inequalities(&s.density(2), &p)?;
            Ok((-r.lhs1)
                .max(-r.second()?)
                .max((r.lhs1 - r.mutual_info).abs()))
        }),
        property(su, "holevo_definitions", 1e-10, n.min(25), |seed| {
            let mut s = sampler(su, seed);
            let p = discrete_probe(&mut s, 2, 0.05)?;
            let h = holevo_info(&s.density(2), &p, 4, 2 + (seed % 3) as usize)?;
            Ok((h.by_entropy - h.by_relative).abs())
        }),
        property(su, "holevo_nonnegative", 1e-12, n.min(25), |seed| {
            let mut s = sampler(su, seed);
            let p = discrete_probe(&mut s, 2, 0.05)?;
            Ok(-holevo_info(&s.density(2), &p, 4, 2 + (seed % 3) as usize)?.by_entropy)
        }),
    ]
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    match suite {
        Suite::Opalg => opalg(opts),
        Suite::Lindblad => lindblad(opts),
        Suite::Entropy => entropy(opts),
        Suite::Paycha => paycha(opts),
        Suite::Trajectory => trajectory(opts),
        Suite::Discrete => discrete(opts),
    }
}

pub fn run(selector: Selector, opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    selector
        .suites()
        .into_iter()
        .flat_map(|s| run_suite(s, opts))
        .collect()
}
