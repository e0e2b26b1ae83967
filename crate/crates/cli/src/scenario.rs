//! Scenario files: a TOML document describing one model, its initial state
//! and the experiments to run on it.
//!
//! Complex matrices are written row by row as arrays of `[re, im]` pairs:
//!
//! ```toml
//! hamiltonian = [[[0.0, 0.0], [0.5, 0.0]],
//!                [[0.5, 0.0], [0.0, 0.0]]]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trajent::discrete::VMode;
use trajent::opalg::{ComplexMatrix, DensityMatrix};
use trajent::paycha::SigmaVariant;
use trajent::trajectory::{AdjudicationConfig, Scheme, TrajectoryConfig};
use trajent::{Model, C};

use crate::error::CliError;

pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Defaults to `out/<name>`.
    pub output_dir: Option<PathBuf>,
    pub model: ModelSpec,
    pub initial_state: StateSpec,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    pub discrete: Option<DiscreteSpec>,
    #[serde(default)]
    pub sigma: SigmaSpec,
    pub adjudication: Option<AdjudicationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub hamiltonian: MatrixSpec,
    pub collapse: Vec<MatrixSpec>,
    #[serde(default)]
    pub monitored: usize,
    pub eta: f64,
}

/// Exactly one of `matrix` and `pure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub matrix: Option<MatrixSpec>,
    /// State vector as `[re, im]` pairs; normalized on load.
    pub pure: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSpec {
    pub tau: f64,
    pub n_steps: usize,
    /// Probe preparation; |0⟩⟨0| when absent.
    pub probe_state: Option<MatrixSpec>,
    #[serde(default)]
    pub mode: VMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Paper,
    Lambda,
}

impl VariantName {
    pub fn variant(self) -> SigmaVariant {
        match self {
            VariantName::Paper => SigmaVariant::PaperForm,
            VariantName::Lambda => SigmaVariant::WithLambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    #[serde(default = "both_variants")]
    pub variants: Vec<VariantName>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn both_variants() -> Vec<VariantName> {
    vec![VariantName::Paper, VariantName::Lambda]
}

fn default_k_max() -> usize {
    40
}

impl Default for SigmaSpec {
    fn default() -> Self {
        Self {
            variants: both_variants(),
            k_max: default_k_max(),
        }
    }
}

/// Settings for the two-step-size variant adjudication; unset fields take
/// the library defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjudicationSpec {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub n_trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
}

impl AdjudicationSpec {
    pub fn config(&self) -> AdjudicationConfig {
        let d = AdjudicationConfig::default();
        AdjudicationConfig {
            dt: self.dt.unwrap_or(d.dt),
            t_final: self.t_final.unwrap_or(d.t_final),
            n_trajectories: self.n_trajectories.unwrap_or(d.n_trajectories),
            seed: self.seed.unwrap_or(d.seed),
            scheme: self.scheme.unwrap_or(d.scheme),
            ..d
        }
    }
}

/// Scenario file as read, plus its raw bytes for hashing.
pub struct Loaded {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub scenario: Scenario,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Config(format!("{}: not valid UTF-8", path.display())))?;
    let scenario: Scenario =
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Loaded {
        path: path.to_path_buf(),
        bytes,
        scenario,
    })
}

pub fn parse_matrix(spec: &MatrixSpec, field: &str) -> Result<ComplexMatrix<f64>, CliError> {
    let d = spec.len();
    if d == 0 {
        return Err(CliError::Config(format!("{field}: empty matrix")));
    }
    let mut data = Vec::with_capacity(d * d);
    for (i, row) in spec.iter().enumerate() {
        if row.len() != d {
            return Err(CliError::Config(format!(
                "{field}: row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(CliError::Config(format!(
                    "{field}: entry ({i}, {j}) is not finite"
                )));
            }
            data.push(C::new(z[0], z[1]));
        }
    }
    ComplexMatrix::from_entries(d, data).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn parse_with_dim(
    spec: &MatrixSpec,
    field: &str,
    dim: usize,
) -> Result<ComplexMatrix<f64>, CliError> {
    let m = parse_matrix(spec, field)?;
    if m.dim() != dim {
        return Err(CliError::Config(format!(
            "{field}: dimension {} does not match the hamiltonian ({dim})",
            m.dim()
        )));
    }
    Ok(m)
}

fn parse_density(
    spec: &MatrixSpec,
    field: &str,
    dim: usize,
) -> Result<DensityMatrix<f64>, CliError> {
    let m = parse_with_dim(spec, field, dim)?;
    DensityMatrix::new(m).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

impl Scenario {
    pub fn build_model(&self) -> Result<Model, CliError> {
        let h = parse_matrix(&self.model.hamiltonian, "model.hamiltonian")?;
        let d = h.dim();
        if self.model.collapse.is_empty() {
            return Err(CliError::Config(
                "model.collapse: at least one collapse operator is required".into(),
            ));
        }
        let ls = self
            .model
            .collapse
            .iter()
            .enumerate()
            .map(|(k, l)| parse_with_dim(l, &format!("model.collapse[{k}]"), d))
            .collect::<Result<Vec<_>, _>>()?;
        Model::new(h, ls, self.model.monitored, self.model.eta)
            .map_err(|e| CliError::Config(format!("model: {e}")))
    }

    pub fn build_initial_state(&self, dim: usize) -> Result<DensityMatrix<f64>, CliError> {
        match (&self.initial_state.matrix, &self.initial_state.pure) {
            (Some(m), None) => parse_density(m, "initial_state.matrix", dim),
            (None, Some(v)) => {
                if v.len() != dim {
                    return Err(CliError::Config(format!(
                        "initial_state.pure: length {} does not match the hamiltonian ({dim})",
                        v.len()
                    )));
                }
                let psi: Vec<C<f64>> = v.iter().map(|z| C::new(z[0], z[1])).collect();
                DensityMatrix::pure(&psi)
                    .map_err(|e| CliError::Config(format!("initial_state.pure: {e}")))
            }
            _ => Err(CliError::Config(
                "initial_state: give exactly one of `matrix` and `pure`".into(),
            )),
        }
    }

    pub fn build_probe_state(&self) -> Result<Option<DensityMatrix<f64>>, CliError> {
        match self.discrete.as_ref().and_then(|d| d.probe_state.as_ref()) {
            None => Ok(None),
            Some(m) => parse_density(m, "discrete.probe_state", 2).map(Some),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| Path::new("out").join(&self.name))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() {
            return Err(CliError::Config("name: must not be empty".into()));
        }
        self.trajectory
            .validate()
            .map_err(|e| CliError::Config(format!("trajectory: {e}")))?;
        if let Some(d) = &self.discrete {
            if d.tau <= 0.0 || !d.tau.is_finite() {
                return Err(CliError::Config(format!(
                    "discrete.tau: must be positive, got {}",
                    d.tau
                )));
            }
            if d.n_steps > trajent::discrete::MAX_RECORD_LEN {
                return Err(CliError::Config(format!(
                    "discrete.n_steps: {} exceeds the enumeration limit {}",
                    d.n_steps,
                    trajent::discrete::MAX_RECORD_LEN
                )));
            }
        }
        if self.sigma.variants.is_empty() {
            return Err(CliError::Config("sigma.variants: must not be empty".into()));
        }
        if self.sigma.k_max == 0 {
            return Err(CliError::Config("sigma.k_max: must be at least 1".into()));
        }
        Ok(())
    }
}
