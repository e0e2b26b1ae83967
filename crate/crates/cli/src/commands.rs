use std::path::PathBuf;

use serde::Serialize;
use trajent::discrete::{
    entropy_inequalities, enumerate_branches, gain_loss, holevo_info, unconditional_power,
    ProbeModel,
};
use trajent::opalg::{validate_density, DensityMatrix, RepairPolicy};
use trajent::paycha::{martingale_operator, sigma_series, sigma_spectral_oracle};
use trajent::trajectory::{adjudicate, simulate, AdjudicationReport, TrajectoryFrame};
use trajent::verify::{self, Selector, VerifyOptions};
use trajent::{Density, Model};

use crate::error::CliError;
use crate::output::{fmt_f64, sha256_hex, Artifact, ArtifactEntry, Table};
use crate::scenario::{self, Scenario, VariantName};

/// Command-line settings that take precedence over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
    pub variants: Option<Vec<VariantName>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Discrete,
    Sigma,
    Run,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Discrete => "discrete",
            Experiment::Sigma => "sigma",
            Experiment::Run => "run",
        }
    }

    fn includes(self, part: Experiment) -> bool {
        self == Experiment::Run || self == part
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'static str,
    scenario: String,
    scenario_file: String,
    scenario_sha256: String,
    /// Hash of the effective configuration after command-line overrides.
    config_sha256: String,
    seed: u64,
    dt: f64,
    variants: Vec<VariantName>,
    artifacts: Vec<ArtifactEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<TrajectorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adjudication: Option<AdjudicationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<SigmaSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrete: Option<DiscreteSummary>,
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    n_trajectories: usize,
    n_steps: usize,
    frames: usize,
    /// Per-frame residual ΔS_actual − ΔS_pred; only with every step recorded.
    residuals: Vec<ResidualSummary>,
}

#[derive(Debug, Serialize)]
struct ResidualSummary {
    variant: VariantName,
    samples: usize,
    rms: f64,
    /// Mean of residual / dt.
    mean_rate: f64,
}

#[derive(Debug, Serialize)]
struct SigmaSummary {
    variant: VariantName,
    k_max: usize,
    value: f64,
    oracle: f64,
    abs_error: f64,
    converged: bool,
    diverged: bool,
    tail_estimate: f64,
}

#[derive(Debug, Serialize)]
struct DiscreteSummary {
    tau: f64,
    n_steps: usize,
    branches: usize,
    final_holevo: f64,
    min_inequality_1: f64,
    min_inequality_2: Option<f64>,
}

fn state_header(prefix: &str, d: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            h.push(format!("{prefix}_{i}{j}_re"));
            h.push(format!("{prefix}_{i}{j}_im"));
        }
    }
    h
}

fn state_fields(rho: Option<&Density>, d: usize) -> Vec<String> {
    match rho {
        Some(r) => r
            .matrix()
            .entries()
            .iter()
            .flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)])
            .collect(),
        None => vec![fmt_f64(f64::NAN); 2 * d * d],
    }
}

fn opt_field(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn trajectory_table(
    frames: &[&TrajectoryFrame<f64>],
    variants: &[VariantName],
    d: usize,
) -> Result<Artifact, CliError> {
    let mut header = strings(&[
        "trajectory",
        "t",
        "lambda",
        "d_i",
        "entropy",
        "ds_actual",
        "drift_lindblad",
        "martingale_coeff",
    ]);
    for v in variants {
        header.push(format!("sigma_{}", v.variant()));
        header.push(format!("ds_pred_{}", v.variant()));
    }
    header.push("purity".into());
    header.extend(state_header("rho", d));
    let mut t = Table::new("trajectory.csv", &header)?;
    for f in frames {
        let mut row = vec![
            f.trajectory_id.to_string(),
            fmt_f64(f.t),
            fmt_f64(f.lambda),
            fmt_f64(f.d_i),
            fmt_f64(f.entropy),
            fmt_f64(f.ds_actual),
            fmt_f64(f.drift_lindblad),
            fmt_f64(f.martingale_coeff),
        ];
        for v in variants {
            row.push(fmt_f64(f.sigma(v.variant())));
            row.push(fmt_f64(f.ds_pred(v.variant())));
        }
        row.push(fmt_f64(f.rho_hat.purity()));
        row.extend(state_fields(Some(&f.rho_hat), d));
        t.row(&row)?;
    }
    t.finish()
}

fn residuals(frames: &[&TrajectoryFrame<f64>], variants: &[VariantName]) -> Vec<ResidualSummary> {
    variants
        .iter()
        .map(|&v| {
            let (mut n, mut sq, mut rate) = (0usize, 0.0, 0.0);
            for f in frames {
                let r = f.ds_actual - f.ds_pred(v.variant());
                if r.is_finite() {
                    n += 1;
                    sq += r * r;
                    rate += r / f.dt;
                }
            }
            let n_f = n.max(1) as f64;
            ResidualSummary {
                variant: v,
                samples: n,
                rms: (sq / n_f).sqrt(),
                mean_rate: rate / n_f,
            }
        })
        .collect()
}

struct TrajectoryOutput {
    artifact: Artifact,
    summary: TrajectorySummary,
    adjudication: Option<AdjudicationReport>,
}

fn run_trajectories(
    sc: &Scenario,
    model: &Model,
    rho0: &Density,
    variants: &[VariantName],
) -> Result<TrajectoryOutput, CliError> {
    let cfg = &sc.trajectory;
    let records = simulate(cfg, model, rho0)?;
    let frames: Vec<&TrajectoryFrame<f64>> = records.iter().flat_map(|r| &r.frames).collect();
    let artifact = trajectory_table(&frames, variants, model.dim())?;
    let residuals = if cfg.record_entropy && cfg.record_every == 1 {
        residuals(&frames, variants)
    } else {
        Vec::new()
    };
    let adjudication = match &sc.adjudication {
        Some(a) => Some(adjudicate(model, rho0, &a.config(), &cfg.tolerances)?),
        None => None,
    };
    Ok(TrajectoryOutput {
        artifact,
        summary: TrajectorySummary {
            n_trajectories: cfg.n_trajectories,
            n_steps: cfg.n_steps(),
            frames: frames.len(),
            residuals,
        },
        adjudication,
    })
}

fn run_sigma(
    sc: &Scenario,
    model: &Model,
    rho0: &Density,
    variants: &[VariantName],
) -> Result<(Artifact, Vec<SigmaSummary>), CliError> {
    let l = model.monitored();
    let mut t = Table::new(
        "sigma.csv",
        &strings(&["variant", "k", "shell", "partial_sum", "oracle"]),
    )?;
    let mut summary = Vec::new();
    for &v in variants {
        let est = sigma_series(rho0, l, model.eta(), sc.sigma.k_max, v.variant())?;
        let b = martingale_operator(rho0.matrix(), l, v.variant());
        let oracle = sigma_spectral_oracle(rho0, &b, model.eta())?;
        for (k, (s, p)) in est.shells.iter().zip(&est.partial_sums).enumerate() {
            t.row(&[
                v.variant().to_string(),
                k.to_string(),
                fmt_f64(*s),
                fmt_f64(*p),
                fmt_f64(oracle),
            ])?;
        }
        summary.push(SigmaSummary {
            variant: v,
            k_max: est.k_max,
            value: est.value,
            oracle,
            abs_error: (est.value - oracle).abs(),
            converged: est.converged,
            diverged: est.diverged,
            tail_estimate: est.tail_estimate,
        });
    }
    Ok((t.finish()?, summary))
}

fn probe_model(sc: &Scenario, model: &Model) -> Result<ProbeModel<f64>, CliError> {
    let spec = sc
        .discrete
        .as_ref()
        .ok_or_else(|| CliError::Config("discrete: table missing from scenario".into()))?;
    if model.n_channels() != 1 {
        return Err(CliError::Config(format!(
            "discrete: the probe model couples one collapse operator, model.collapse has {}",
            model.n_channels()
        )));
    }
    let probe = match sc.build_probe_state()? {
        Some(s) => s,
        None => DensityMatrix::from_diag(&[1.0, 0.0])?,
    };
    ProbeModel::with_probe(
        model.hamiltonian().clone(),
        model.monitored().clone(),
        spec.tau,
        spec.mode,
        probe,
    )
    .map(|p| p.with_tolerances(sc.trajectory.tolerances))
    .map_err(|e| CliError::Config(format!("discrete: {e}")))
}

fn run_discrete(
    sc: &Scenario,
    model: &Model,
    rho0: &Density,
) -> Result<(Vec<Artifact>, DiscreteSummary), CliError> {
    let probe = probe_model(sc, model)?;
    let n_steps = sc.discrete.as_ref().map_or(0, |d| d.n_steps);
    let tol = sc.trajectory.tolerances;
    let repair = RepairPolicy::Repair {
        max_violation: tol.repair_tol,
    };
    let mut steps = Table::new(
        "discrete.csv",
        &strings(&[
            "n",
            "entropy",
            "holevo",
            "holevo_relative",
            "conditional_entropy",
            "excluded_weight",
            "gain",
            "loss",
            "delta_holevo",
            "delta_entropy",
            "mutual_information",
            "inequality_1",
            "inequality_2",
        ]),
    )?;
    let mut min_1 = f64::INFINITY;
    let mut min_2: Option<f64> = None;
    let mut final_holevo = 0.0;
    for n in 0..=n_steps {
        let h = holevo_info(rho0, &probe, n, n)?;
        final_holevo = h.by_entropy;
        let mut row = vec![
            n.to_string(),
            fmt_f64(h.s_n),
            fmt_f64(h.by_entropy),
            fmt_f64(h.by_relative),
            fmt_f64(h.s_bar),
            fmt_f64(h.excluded_weight),
        ];
        if n == 0 {
            row.extend(std::iter::repeat_n(String::new(), 7));
        } else {
            let g = gain_loss(rho0, &probe, n)?;
            let prev = validate_density(
                &unconditional_power(rho0.matrix(), &probe, n - 1),
                tol.hermitian,
                repair,
            )?;
            let ineq = entropy_inequalities(&prev, &probe)?;
            min_1 = min_1.min(ineq.lhs1);
            if let Some(x) = ineq.lhs2 {
                min_2 = Some(min_2.map_or(x, |m| m.min(x)));
            }
            row.extend([
                fmt_f64(g.gain),
                fmt_f64(g.loss),
                fmt_f64(g.delta_h),
                fmt_f64(ineq.delta_s),
                fmt_f64(ineq.mutual_info),
                fmt_f64(ineq.lhs1),
                opt_field(ineq.lhs2),
            ]);
        }
        steps.row(&row)?;
    }

    let d = model.dim();
    let mut header = strings(&["record", "probability"]);
    header.extend(state_header("rho_hat", d));
    let mut branches = Table::new("branches.csv", &header)?;
    let all = enumerate_branches(rho0, &probe, n_steps)?;
    for b in &all {
        let mut row = vec![b.record_string(), fmt_f64(b.probability)];
        row.extend(state_fields(b.filtered_state.as_ref(), d));
        branches.row(&row)?;
    }
    let summary = DiscreteSummary {
        tau: probe.tau(),
        n_steps,
        branches: all.len(),
        final_holevo,
        min_inequality_1: if n_steps == 0 { f64::NAN } else { min_1 },
        min_inequality_2: min_2,
    };
    Ok((vec![steps.finish()?, branches.finish()?], summary))
}

fn apply_overrides(sc: &mut Scenario, ov: &Overrides) {
    if let Some(seed) = ov.seed {
        sc.trajectory.seed = seed;
    }
    if let Some(dt) = ov.dt {
        sc.trajectory.dt = dt;
    }
    if let Some(out) = &ov.out {
        sc.output_dir = Some(out.clone());
    }
    if let Some(v) = &ov.variants {
        sc.sigma.variants = v.clone();
    }
}

/// Loads the scenario, runs the requested experiment and writes its files.
/// Nothing is written unless every computation succeeds.
pub fn run_scenario(
    path: &std::path::Path,
    what: Experiment,
    ov: &Overrides,
) -> Result<Vec<PathBuf>, CliError> {
    let loaded = scenario::load(path)?;
    let mut sc = loaded.scenario;
    apply_overrides(&mut sc, ov);
    sc.validate()?;
    let model = sc.build_model()?;
    let rho0 = sc.build_initial_state(model.dim())?;
    let variants = sc.sigma.variants.clone();
    if what == Experiment::Discrete {
        // fail fast on a missing table before any other work
        probe_model(&sc, &model)?;
    }

    let mut artifacts = Vec::new();
    let mut manifest = Manifest {
        tool: "trajent",
        version: env!("CARGO_PKG_VERSION"),
        core_version: trajent::VERSION,
        command: what.name(),
        scenario: sc.name.clone(),
        scenario_file: loaded.path.display().to_string(),
        scenario_sha256: sha256_hex(&loaded.bytes),
        config_sha256: config_hash(&sc)?,
        seed: sc.trajectory.seed,
        dt: sc.trajectory.dt,
        variants: variants.clone(),
        artifacts: Vec::new(),
        trajectory: None,
        adjudication: None,
        sigma: None,
        discrete: None,
    };
    if what.includes(Experiment::Simulate) {
        let out = run_trajectories(&sc, &model, &rho0, &variants)?;
        artifacts.push(out.artifact);
        manifest.trajectory = Some(out.summary);
        manifest.adjudication = out.adjudication;
    }
    if what.includes(Experiment::Discrete)
        && (what == Experiment::Discrete || sc.discrete.is_some())
    {
        let (files, summary) = run_discrete(&sc, &model, &rho0)?;
        artifacts.extend(files);
        manifest.discrete = Some(summary);
    }
    if what.includes(Experiment::Sigma) {
        let (file, summary) = run_sigma(&sc, &model, &rho0, &variants)?;
        artifacts.push(file);
        manifest.sigma = Some(summary);
    }
    manifest.artifacts = artifacts.iter().map(Artifact::entry).collect();
    artifacts.push(Artifact::json(
        &format!("{}-manifest.json", what.name()),
        &manifest,
    )?);
    crate::output::write_all(&sc.output_dir(), &artifacts)
}

fn config_hash(sc: &Scenario) -> Result<String, CliError> {
    let mut c = sc.clone();
    c.output_dir = None;
    let bytes = serde_json::to_vec(&c).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sha256_hex(&bytes))
}

pub fn run_verify(selector: Selector, seeds: u64, mutate_sigma: bool) -> Result<(), CliError> {
    let mut opts = VerifyOptions {
        seeds,
        ..VerifyOptions::default()
    };
    if mutate_sigma {
        opts.sigma_coefficient = verify::mutated_sigma_coefficient;
    }
    let outcomes = verify::run(selector, &opts);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{} of {} properties pass",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}

/// Caps the rayon pool from TRAJENT_THREADS.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TRAJENT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "TRAJENT_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("TRAJENT_THREADS: {e}")))
}
