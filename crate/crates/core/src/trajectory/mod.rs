//! Continuous-time simulators for the monitored system and the per-step
//! entropy-rate bookkeeping.

mod adjudicate;
mod run;
mod step;

pub use adjudicate::{adjudicate, AdjudicationConfig, AdjudicationReport, VariantVerdict};
pub use run::{
    ensemble_mean_state, run_trajectory, simulate, StepRecord, TrajectoryFrame, TrajectoryRecord,
};
pub use step::{
    entropy_rate_finite_difference, entropy_rate_terms, master_step, sme_increment, step_sme,
    step_sme_kraus, step_sme_with, step_sse, unconditional_entropy_rate, EntropyRateTerms,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Discretization of the stochastic master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// ρ + L*ρ dt + √η B_λ dI, then the repair policy.
    #[default]
    EulerMaruyama,
    /// Normalized linear Kraus update; positive by construction and rank
    /// preserving for a pure state at η = 1 with one channel.
    Kraus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    /// Keep every `record_every`-th step as a frame.
    pub record_every: usize,
    pub scheme: Scheme,
    /// Evaluate the entropy-rate terms at each frame (requires faithful states).
    pub record_entropy: bool,
    /// Attach truncated Σ series values to frames.
    pub series_diagnostic: bool,
    pub tolerances: Tolerances,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            seed: 0,
            n_trajectories: 1,
            record_every: 1,
            scheme: Scheme::EulerMaruyama,
            record_entropy: true,
            series_diagnostic: false,
            tolerances: Tolerances::default(),
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.dt > 0.1 {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds the 0.1 limit",
                self.dt
            )));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_final = {} must be at least dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// round(t_final / dt)
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Innovation increments of one trajectory, i.i.d. N(0, dt).
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationPath {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl InnovationPath {
    /// Trajectory `trajectory` of run `seed`: ChaCha8 keyed by the seed, with
    /// the trajectory index as the stream number.
    pub fn generate(seed: u64, trajectory: u64, dt: f64, n_steps: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        let sd = dt.sqrt();
        let increments = (0..n_steps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect();
        Self { dt, increments }
    }

    /// The same Brownian path at twice the step (pairwise sums).
    pub fn coarsen(&self) -> Self {
        let increments = self
            .increments
            .chunks_exact(2)
            .map(|c| c[0] + c[1])
            .collect();
        Self {
            dt: 2.0 * self.dt,
            increments,
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}
