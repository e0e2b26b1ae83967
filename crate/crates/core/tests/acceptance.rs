//! Acceptance run: one PASS/FAIL line per criterion, followed by indented
//! diagnostics. Exits 0 regardless so the workspace test run completes; set
//! ACCEPTANCE_STRICT=1 to make any FAIL a nonzero exit.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trajent::discrete::{
    difference_equation_defect, entropy_inequalities, enumerate_branches, gain_loss, holevo_info,
    innovation_second_moment, unconditional_power, ProbeModel, VMode,
};
use trajent::opalg::{pauli, trace_distance, ComplexMatrix, DensityMatrix};
use trajent::paycha::{
    martingale_operator, sigma_regrouped, sigma_series_with, sigma_spectral_oracle, SeriesOptions,
    SigmaVariant,
};
use trajent::random::StateSampler;
use trajent::stats::{bootstrap, log_log_slope};
use trajent::trajectory::{
    adjudicate, ensemble_mean_state, entropy_rate_finite_difference, master_step, run_trajectory,
    simulate, step_sse, unconditional_entropy_rate, AdjudicationConfig, InnovationPath, Scheme,
    TrajectoryConfig,
};
use trajent::verify::{self, Suite, VerifyOptions};
use trajent::{Model, Result, Tolerances, C};

struct Verdict {
    passed: bool,
    summary: String,
    notes: Vec<String>,
}

fn criterion(
    id: u32,
    title: &str,
    budget: Duration,
    run: impl FnOnce() -> Result<Verdict>,
) -> bool {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    let (passed, summary, notes) = match outcome {
        Ok(v) => (v.passed, v.summary, v.notes),
        Err(e) => (false, format!("error: {e}"), Vec::new()),
    };
    let in_time = elapsed <= budget;
    let ok = passed && in_time;
    println!(
        "{} {id}. {title}: {summary} [{:.2} s / {:.0} s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    if !in_time {
        println!("    runtime budget exceeded");
    }
    for n in notes {
        println!("    {n}");
    }
    ok
}

fn sigma_cross_validation() -> Result<Verdict> {
    let mut worst_oracle = 0.0f64;
    let mut worst_shell = 0.0f64;
    let mut all_converged = true;
    let opts = SeriesOptions::default().with_k_max(40);
    for seed in 0..20u64 {
        let mut s = StateSampler::<f64>::new(seed);
        let d = 2 + (seed % 2) as usize;
        let rho = s.density_with_spread(d, 1.0, 1.5);
        let l = s.operator_with_norm(d, 1.0);
        for v in SigmaVariant::ALL {
            let est = sigma_series_with(&rho, &l, 1.0, v, &opts)?;
            all_converged &= est.converged && !est.diverged;
            let oracle =
                sigma_spectral_oracle(&rho, &martingale_operator(rho.matrix(), &l, v), 1.0)?;
            worst_oracle = worst_oracle.max((est.value - oracle).abs());
        }
        let paper = sigma_series_with(&rho, &l, 1.0, SigmaVariant::PaperForm, &opts)?;
        let regrouped = sigma_regrouped(&rho, &l, 1.0, 40)?;
        for (a, b) in paper.shells.iter().zip(&regrouped.shells) {
            worst_shell = worst_shell.max((a - b).abs());
        }
    }
    Ok(Verdict {
        passed: all_converged && worst_oracle <= 1e-8 && worst_shell <= 1e-10,
        summary: format!(
            "converged={all_converged} max|series-oracle|={worst_oracle:.2e} (tol 1e-8), max shell diff={worst_shell:.2e} (tol 1e-10)"
        ),
        notes: vec![],
    })
}

fn adjudication() -> Result<Verdict> {
    let rho0 = DensityMatrix::new(ComplexMatrix::from_real(2, &[0.6, 0.15, 0.15, 0.4])?)?;
    let cfg = AdjudicationConfig::default();
    let tol = Tolerances::default();
    let mut passed = true;
    let mut notes = Vec::new();
    let mut identified = Vec::new();
    for eta in [0.5, 1.0] {
        let model = Model::single(ComplexMatrix::zeros(2), pauli::sigma_z(), eta)?;
        let rep = adjudicate(&model, &rho0, &cfg, &tol)?;
        passed &= rep.identified.is_some();
        identified.push(format!(
            "eta={eta}: {}",
            rep.identified.map_or("none".to_string(), |v| v.to_string())
        ));
        for v in &rep.verdicts {
            notes.push(format!(
                "eta={eta} {:<6} rms ratio={:.4} (window [{}, {}]) pathwise ratio={:.4} bias dt={:+.3e}±{:.1e} dt/2={:+.3e}±{:.1e} ratio_ok={} bias_ok={}",
                v.variant.name(),
                v.rms_ratio,
                cfg.ratio_window.0,
                cfg.ratio_window.1,
                v.pathwise_rms_ratio,
                v.bias_coarse,
                v.se_coarse,
                v.bias_fine,
                v.se_fine,
                v.ratio_ok,
                v.bias_ok
            ));
        }
        notes.push(format!(
            "eta={eta} martingale coefficient without sqrt(eta): rms ratio={:.4}, rms at dt={:.3e}",
            rep.unscaled_martingale_rms_ratio, rep.unscaled_martingale_rms_coarse
        ));
    }
    Ok(Verdict {
        passed,
        summary: format!(
            "{} trajectories, dt={} and dt/2; identified: {}",
            cfg.n_trajectories,
            cfg.dt,
            identified.join(", ")
        ),
        notes,
    })
}

fn unconditional_rate() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut s = StateSampler::<f64>::new(300 + seed);
        let h = s.hermitian(2);
        let l = s.operator_with_norm(2, 1.0);
        let model = Model::single(h, l, 1.0)?;
        let rho = s.density_with_spread(2, 1.0, 3.0);
        let exact = unconditional_entropy_rate(&rho, &model)?;
        let fd = entropy_rate_finite_difference(&rho, &model, 1e-6)?;
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(Verdict {
        passed: worst <= 1e-6,
        summary: format!("10 scenarios, max relative error={worst:.2e} (tol 1e-6)"),
        notes: vec![],
    })
}

#[derive(Default)]
struct DiscreteWorst {
    prob_sum: f64,
    ensemble: f64,
    holevo_gap: f64,
    holevo_min: f64,
    loss_min: f64,
    gain_loss_gap: f64,
    ineq1_min: f64,
    ineq2_min: f64,
}

fn discrete_identities() -> Result<Verdict> {
    let mut w = DiscreteWorst {
        ineq1_min: f64::INFINITY,
        ineq2_min: f64::INFINITY,
        holevo_min: f64::INFINITY,
        loss_min: f64::INFINITY,
        ..DiscreteWorst::default()
    };
    let rho_a = DensityMatrix::new(
        &ComplexMatrix::from_diag(&[0.7, 0.3]) + &pauli::sigma_x::<f64>().scale_real(0.1),
    )?;
    let mut s = StateSampler::<f64>::new(77);
    let (h_r, l_r, rho_r) = (s.hermitian(2), s.operator_with_norm(2, 1.0), s.density(2));
    let scenarios = [
        (ComplexMatrix::zeros(2), pauli::sigma_z(), rho_a),
        (h_r, l_r, rho_r),
    ];
    let faithful_probe = DensityMatrix::from_diag(&[0.9, 0.1])?;
    let mut cases = 0;
    for tau in [0.01, 0.05] {
        for (h, l, rho0) in &scenarios {
            let pure = ProbeModel::new(h.clone(), l.clone(), tau, VMode::ExactExp)?;
            let mixed = pure.clone().with_probe_state(faithful_probe.clone())?;
            for probe in [&pure, &mixed] {
                cases += 1;
                for n in 0..=8 {
                    let branches = enumerate_branches(rho0, probe, n)?;
                    let total: f64 = branches.iter().map(|b| b.probability).sum();
                    w.prob_sum = w.prob_sum.max((total - 1.0).abs());
                    let mut mean = ComplexMatrix::zeros(2);
                    for b in &branches {
                        if let Some(f) = &b.filtered_state {
                            mean.axpy_real(b.probability, f.matrix());
                        }
                    }
                    let target = unconditional_power(rho0.matrix(), probe, n);
                    w.ensemble = w.ensemble.max(mean.max_abs_diff(&target));
                    for m in 0..=n {
                        let hi = holevo_info(rho0, probe, n, m)?;
                        w.holevo_gap = w.holevo_gap.max((hi.by_entropy - hi.by_relative).abs());
                        w.holevo_min = w.holevo_min.min(hi.by_entropy);
                    }
                    if n >= 1 {
                        let g = gain_loss(rho0, probe, n)?;
                        w.loss_min = w.loss_min.min(g.loss);
                        w.gain_loss_gap =
                            w.gain_loss_gap.max((g.delta_h - (g.gain - g.loss)).abs());
                        let prev = DensityMatrix::new(
                            unconditional_power(rho0.matrix(), probe, n - 1).hermitian_part(),
                        )?;
                        let r = entropy_inequalities(&prev, probe)?;
                        w.ineq1_min = w.ineq1_min.min(r.lhs1);
                        if let Some(l2) = r.lhs2 {
                            w.ineq2_min = w.ineq2_min.min(l2);
                        }
                    }
                }
            }
        }
    }
    let passed = w.prob_sum <= 1e-10
        && w.ensemble <= 1e-10
        && w.holevo_gap <= 1e-10
        && w.holevo_min >= -1e-12
        && w.loss_min >= -1e-12
        && w.gain_loss_gap <= 1e-10
        && w.ineq1_min >= -1e-10
        && w.ineq2_min >= -1e-10;
    Ok(Verdict {
        passed,
        summary: format!("{cases} model/probe/tau cases, n ≤ 8, all m ≤ n"),
        notes: vec![
            format!(
                "|sum p - 1| ≤ {:.2e}; |sum p rho - V_s^n rho0| ≤ {:.2e}",
                w.prob_sum, w.ensemble
            ),
            format!(
                "Holevo definition gap ≤ {:.2e}; min H = {:.3e}",
                w.holevo_gap, w.holevo_min
            ),
            format!(
                "min L_n = {:.3e}; |dH - (G - L)| ≤ {:.2e}",
                w.loss_min, w.gain_loss_gap
            ),
            format!(
                "min slack: inequality 1 = {:.3e}, inequality 2 (faithful probe) = {:.3e}",
                w.ineq1_min, w.ineq2_min
            ),
        ],
    })
}

fn discrete_to_continuous() -> Result<Verdict> {
    let taus = [0.04, 0.02, 0.01];
    let mut min_slope = f64::INFINITY;
    let mut notes = Vec::new();
    for seed in 0..5u64 {
        let mut s = StateSampler::<f64>::new(500 + seed);
        let (h, l) = (s.hermitian(2), s.operator_with_norm(2, 1.0));
        let rho = s.density_with_spread(2, 1.0, 3.0);
        let mut errs = Vec::new();
        let mut moments = Vec::new();
        for &tau in &taus {
            let probe = ProbeModel::new(h.clone(), l.clone(), tau, VMode::ExactExp)?;
            errs.push(difference_equation_defect(&rho, &probe)?);
            moments.push(innovation_second_moment(&rho, &probe)?.abs() / tau);
        }
        let slope = log_log_slope(&taus, &errs);
        min_slope = min_slope.min(slope);
        notes.push(format!(
            "seed {seed}: defects {:.3e} {:.3e} {:.3e}, order {slope:.3}; |E dI^2 - tau|/tau {:.2e} {:.2e} {:.2e}",
            errs[0], errs[1], errs[2], moments[0], moments[1], moments[2]
        ));
    }
    Ok(Verdict {
        passed: min_slope >= 1.3,
        summary: format!("min fitted order over 5 models = {min_slope:.3} (need ≥ 1.3)"),
        notes,
    })
}

fn purity_and_sse() -> Result<Verdict> {
    let model = Model::single(
        pauli::sigma_x::<f64>().scale_real(0.5),
        pauli::sigma_minus(),
        1.0,
    )?;
    let psi0 = vec![C::new(0.6, 0.0), C::new(0.0, 0.8)];
    let rho0 = DensityMatrix::pure(&psi0)?;
    let dt = 1e-4;
    let path = InnovationPath::generate(6, 0, dt, 10_000);
    let tol = Tolerances::default();
    let (purity, gap) = sme_against_sse(&model, &psi0, &rho0, &path, Scheme::Kraus, &tol)?;
    let em = match sme_against_sse(&model, &psi0, &rho0, &path, Scheme::EulerMaruyama, &tol) {
        Ok((p, g)) => format!(
            "Euler-Maruyama SME on the same path: min purity={p:.9}, max |rho - psi psi^+|={g:.2e}"
        ),
        Err(e) => format!("Euler-Maruyama SME on the same path stops: {e}"),
    };
    Ok(Verdict {
        passed: purity >= 1.0 - 1e-6 && gap <= 1e-3,
        summary: format!(
            "Kraus SME: min purity={purity:.12} (need ≥ 1-1e-6), max |rho - psi psi^+|={gap:.2e} (tol 1e-3)"
        ),
        notes: vec![em],
    })
}

/// (min purity, max gap to the SSE projector) along one shared path.
fn sme_against_sse(
    model: &Model,
    psi0: &[C<f64>],
    rho0: &DensityMatrix<f64>,
    path: &InnovationPath,
    scheme: Scheme,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let dt = path.dt;
    let mut psi = psi0.to_vec();
    let mut min_purity = f64::INFINITY;
    let mut max_gap = 0.0f64;
    let mut err = None;
    let last = run_trajectory(
        model,
        rho0,
        &path.increments,
        dt,
        scheme,
        false,
        None,
        tol,
        |rec| {
            min_purity = min_purity.min(rec.rho.purity());
            max_gap = max_gap.max(
                rec.rho
                    .matrix()
                    .max_abs_diff(&ComplexMatrix::outer(&psi, &psi)),
            );
            match step_sse(&psi, model, dt, rec.d_i) {
                Ok(next) => psi = next,
                Err(e) => err = Some(e),
            }
        },
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    min_purity = min_purity.min(last.purity());
    max_gap = max_gap.max(
        last.matrix()
            .max_abs_diff(&ComplexMatrix::outer(&psi, &psi)),
    );
    Ok((min_purity, max_gap))
}

fn ensemble_consistency() -> Result<Verdict> {
    let model = Model::single(
        pauli::sigma_x::<f64>().scale_real(0.5),
        pauli::sigma_minus(),
        1.0,
    )?;
    let rho0 = DensityMatrix::new(ComplexMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5])?)?;
    let cfg = TrajectoryConfig {
        dt: 1e-3,
        t_final: 1.0,
        seed: 7,
        n_trajectories: 2000,
        record_every: 1000,
        record_entropy: false,
        ..TrajectoryConfig::default()
    };
    let runs = simulate(&cfg, &model, &rho0)?;
    let finals: Vec<&DensityMatrix<f64>> = runs.iter().map(|r| &r.final_state).collect();
    let mean = ensemble_mean_state(finals.iter().copied()).expect("non-empty ensemble");
    let mut master = rho0.clone();
    for _ in 0..cfg.n_steps() {
        master = master_step(&master, &model, cfg.dt)?;
    }
    let dist = trace_distance(&mean, master.matrix())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let boots = bootstrap(&mut rng, finals.len(), 200, |ix| {
        let m = ensemble_mean_state(ix.iter().map(|&i| finals[i])).expect("non-empty");
        trace_distance(&m, &mean).expect("same dimension")
    });
    let se = (boots.iter().map(|d| d * d).sum::<f64>() / boots.len() as f64).sqrt();
    Ok(Verdict {
        passed: dist <= 3.0 * se,
        summary: format!(
            "D(mean, master)={dist:.3e}, bootstrap SE={se:.3e}, ratio={:.2} (need ≤ 3)",
            dist / se
        ),
        notes: vec![],
    })
}

fn core_algebra() -> Result<Verdict> {
    let opts = VerifyOptions::default();
    let mut notes = Vec::new();
    let mut passed = true;
    for suite in [Suite::Opalg, Suite::Lindblad, Suite::Entropy] {
        for o in verify::run_suite(suite, &opts) {
            passed &= o.passed;
            notes.push(o.to_string());
        }
    }
    Ok(Verdict {
        passed,
        summary: format!("{} properties over {} seeds each", notes.len(), opts.seeds),
        notes,
    })
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(
            1,
            "Sigma series vs spectral oracle",
            secs(5),
            sigma_cross_validation,
        ),
        criterion(
            2,
            "Trajectory adjudication of the Sigma variant",
            secs(120),
            adjudication,
        ),
        criterion(3, "Unconditional entropy rate", secs(1), unconditional_rate),
        criterion(
            4,
            "Discrete exact identities",
            secs(30),
            discrete_identities,
        ),
        criterion(
            5,
            "Discrete-to-continuous consistency",
            secs(5),
            discrete_to_continuous,
        ),
        criterion(6, "Purity and SSE/SME agreement", secs(30), purity_and_sse),
        criterion(
            7,
            "Ensemble mean vs master equation",
            secs(120),
            ensemble_consistency,
        ),
        criterion(8, "Core algebra suite", secs(10), core_algebra),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "{} of {} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
