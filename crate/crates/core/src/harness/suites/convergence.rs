//! Convergence suite: evolution-equation residuals, ensemble martingale
//! z-tests for the components `M`, `S`, `C`, and the `N^{-1/2}` decay of
//! the local-time compensator defect `J^N`.

use rayon::prelude::*;

use crate::coefficients::{Boundary, CoefficientSet, InitialLaw};
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{fmt_f64, OutputWriter};
use crate::harness::report::{z_score, Check, Report};
use crate::measures::{
    martingale_components_streaming, MeasureDrift, RunningStats, TestFunction,
};
use crate::noise::NoisePath;
use crate::particles::{self, ParticleSystem};
use crate::rng::derive_run_seed;
use crate::Real;

use super::SuiteError;

const Z_TOL: f64 = 3.0;
const J_RATIO_BAND: (f64, f64) = (1.5, 3.0);
const VAR_RATIO_BAND: (f64, f64) = (2.0, 8.0);
const J_LADDER_REPS: usize = 24;
const VAR_PROBE_RUNS: usize = 40;
/// System size of the fine-grid evolution-residual ensembles.
const RESID_N: usize = 1000;

/// Martingale component values at the horizon plus residual diagnostics
/// for one independent run.
struct RunResult {
    /// `[m, s, c]` at the horizon, per test function.
    msc: Vec<[Real; 3]>,
    /// Evolution residual at T/4, T/2, T (first test function).
    residual: [Real; 3],
    j_sup: Real,
}

/// One simulated run, streamed through the martingale accumulators.
#[allow(clippy::too_many_arguments)]
fn martingale_run(
    coeffs: &CoefficientSet<Real>,
    initial: &InitialLaw<Real>,
    drift: Option<&MeasureDrift<Real>>,
    n: usize,
    dt: Real,
    steps: usize,
    seed: u64,
    run: u64,
    phis: &[TestFunction<Real>],
) -> Result<RunResult, SuiteError> {
    let noise = NoisePath::generate(derive_run_seed(seed, 2 * run), dt, steps);
    let sim_seed = derive_run_seed(seed, 2 * run + 1);
    let mut sys = ParticleSystem::new(coeffs, initial, drift.copied(), n, dt, sim_seed);
    let kappa = coeffs.boundary.kappa();

    let mut j_sup: Real = 0.0;
    let mut k = 0usize;
    let mut pending_error = None;
    let mut emitted_initial = false;
    let stats = {
        let iter = std::iter::from_fn(|| {
            if !emitted_initial {
                emitted_initial = true;
                return Some(sys.measure());
            }
            if k == steps {
                return None;
            }
            if let Err(e) = sys.step(noise.increments()[k]) {
                pending_error = Some(e);
                return None;
            }
            k += 1;
            if let Some(kap) = kappa {
                let j = kap * sys.mean_stopped_local_time() - sys.loss();
                j_sup = j_sup.max(j.abs());
            }
            Some(sys.measure())
        });
        martingale_components_streaming(iter, &noise, coeffs, drift, phis)
    };
    if let Some(e) = pending_error {
        return Err(e.into());
    }
    let stats = stats?;

    let msc = stats
        .iter()
        .map(|s| {
            [
                *s.m.last().expect("series"),
                *s.s.last().expect("series"),
                *s.c.last().expect("series"),
            ]
        })
        .collect();
    let resid = stats[0].evolution_residual();
    let residual = [resid[steps / 4], resid[steps / 2], resid[steps]];
    Ok(RunResult {
        msc,
        residual,
        j_sup,
    })
}

pub(crate) fn test_functions(kappa: Real, lambdas: &[Real]) -> Vec<TestFunction<Real>> {
    lambdas
        .iter()
        .map(|&lambda| TestFunction { kappa, lambda })
        .collect()
}

/// Ensemble of independent runs; returns per-quantity statistics.
#[allow(clippy::too_many_arguments)]
pub(crate) fn martingale_ensemble(
    coeffs: &CoefficientSet<Real>,
    initial: &InitialLaw<Real>,
    drift: Option<&MeasureDrift<Real>>,
    n: usize,
    dt: Real,
    steps: usize,
    seed: u64,
    runs: usize,
    phis: &[TestFunction<Real>],
) -> Result<EnsembleSummary, SuiteError> {
    let results: Vec<Result<RunResult, SuiteError>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| martingale_run(coeffs, initial, drift, n, dt, steps, seed, r, phis))
        .collect();
    let mut msc_stats = vec![[RunningStats::default(); 3]; phis.len()];
    let mut residual_stats = [RunningStats::default(); 3];
    let mut j_stats = RunningStats::default();
    for res in results {
        let r = res?;
        for (p, vals) in r.msc.iter().enumerate() {
            for (q, &v) in vals.iter().enumerate() {
                msc_stats[p][q].push(v);
            }
        }
        for (q, &v) in r.residual.iter().enumerate() {
            residual_stats[q].push(v);
        }
        j_stats.push(r.j_sup);
    }
    Ok(EnsembleSummary {
        msc_stats,
        residual_stats,
        j_stats,
    })
}

pub(crate) struct EnsembleSummary {
    pub msc_stats: Vec<[RunningStats; 3]>,
    pub residual_stats: [RunningStats; 3],
    pub j_stats: RunningStats,
}

/// Mean `sup_t |J^N|` over independent runs at one system size.
fn j_ladder_point(
    coeffs: &CoefficientSet<Real>,
    initial: &InitialLaw<Real>,
    n: usize,
    dt: Real,
    steps: usize,
    seed: u64,
    reps: usize,
) -> Result<RunningStats, SuiteError> {
    let sups: Vec<Result<Real, SuiteError>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let noise = NoisePath::generate(derive_run_seed(seed, 7000 + 2 * r), dt, steps);
            let traj = particles::simulate(
                coeffs,
                initial,
                None,
                n,
                &noise,
                derive_run_seed(seed, 7001 + 2 * r),
                &[],
            )?;
            Ok(traj.j_sup_norm())
        })
        .collect();
    let mut stats = RunningStats::default();
    for s in sups {
        stats.push(s?);
    }
    Ok(stats)
}

pub fn run(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("convergence");
    let coeffs = config.coefficient_set()?;
    let kappa = match coeffs.boundary {
        Boundary::Absorbing => {
            return Err(SuiteError::Config(
                crate::harness::config::ConfigError::Invalid(
                    "martingale checks need an elastic or reflecting boundary".into(),
                ),
            ))
        }
        b => b.kappa().expect("finite rate"),
    };
    let initial = config.initial_law();
    let drift = config.interaction_drift()?;
    let dt = config.particles.dt;
    let steps = config.steps();
    let phis = test_functions(kappa, &config.suite.lambda_values);

    let n_ladder = &config.suite.n_ladder;
    let n_mart = n_ladder.get(1).copied().unwrap_or(config.particles.n);

    // ensemble martingale z-tests at the horizon
    let summary = martingale_ensemble(
        &coeffs,
        &initial,
        drift.as_ref(),
        n_mart,
        dt,
        steps,
        seed,
        config.suite.martingale_runs,
        &phis,
    )?;
    let mut rows = Vec::new();
    for (p, stats) in summary.msc_stats.iter().enumerate() {
        for (q, name) in ["M", "S", "C"].iter().enumerate() {
            let z = z_score(stats[q].mean(), stats[q].std_error());
            report.push(
                Check::upper(
                    format!("|z| of {name} (lambda={})", config.suite.lambda_values[p]),
                    z.abs(),
                    Z_TOL,
                )
                .with_detail(format!(
                    "mean {:.3e}, se {:.3e}",
                    stats[q].mean(),
                    stats[q].std_error()
                )),
            );
            rows.push(format!(
                "{name},{},{},{},{}",
                config.suite.lambda_values[p],
                fmt_f64(stats[q].mean()),
                fmt_f64(stats[q].std_error()),
                fmt_f64(z)
            ));
        }
    }

    rows.push(format!(
        "j_sup@N={n_mart},,{},{},",
        fmt_f64(summary.j_stats.mean()),
        fmt_f64(summary.j_stats.std_error())
    ));

    // evolution-equation residual: mean within 3 SE of zero at checked times.
    // The one-step reflection scheme carries an O(sqrt(dt)) boundary bias,
    // so this runs on a grid ten times finer, at a system size whose
    // statistical resolution sits above that bias.
    let fine_dt = dt / 10.0;
    let fine_steps = steps * 10;
    let resid = martingale_ensemble(
        &coeffs,
        &initial,
        drift.as_ref(),
        RESID_N,
        fine_dt,
        fine_steps,
        derive_run_seed(seed, 600),
        config.suite.martingale_runs,
        &phis[..1],
    )?;
    for (q, frac) in ["T/4", "T/2", "T"].iter().enumerate() {
        let s = &resid.residual_stats[q];
        let z = z_score(s.mean(), s.std_error());
        report.push(
            Check::upper(format!("evolution residual |z| at {frac}"), z.abs(), Z_TOL)
                .with_detail(format!("mean {:.3e}, se {:.3e}", s.mean(), s.std_error())),
        );
        rows.push(format!(
            "evo_residual@{frac},,{},{},{}",
            fmt_f64(s.mean()),
            fmt_f64(s.std_error()),
            fmt_f64(z)
        ));
    }
    report.table("martingale_stats", "component,lambda,mean,se,z", rows);

    // J^N sup-norm decay along the ladder
    if kappa > 0.0 {
        let mut j_rows = Vec::new();
        let mut means = Vec::new();
        for (i, &n) in n_ladder.iter().enumerate() {
            let stats = j_ladder_point(
                &coeffs,
                &initial,
                n,
                dt,
                steps,
                derive_run_seed(seed, 100 + i as u64),
                J_LADDER_REPS,
            )?;
            j_rows.push(format!(
                "{n},{},{}",
                fmt_f64(stats.mean()),
                fmt_f64(stats.std_error())
            ));
            means.push(stats.mean());
        }
        for w in means.windows(2) {
            let ratio = w[0] / w[1];
            report.push(
                Check::lower("J^N decay ratio (4x particles)", ratio, J_RATIO_BAND.0)
                    .with_detail(format!("{:.4} -> {:.4}", w[0], w[1])),
            );
            report.push(Check::upper(
                "J^N decay ratio cap (4x particles)",
                ratio,
                J_RATIO_BAND.1,
            ));
        }
        report.table("j_ladder", "n,j_sup_mean,j_sup_se", j_rows);
    } else {
        // reflecting limit: no killing, the compensator defect vanishes
        let noise = NoisePath::generate(derive_run_seed(seed, 99), dt, steps);
        let traj = particles::simulate(
            &coeffs,
            &initial,
            None,
            n_ladder[0],
            &noise,
            derive_run_seed(seed, 98),
            &[],
        )?;
        report.push(Check::flag(
            "loss and J identically zero at kappa = 0",
            traj.final_loss() == 0.0 && traj.j_sup_norm() == 0.0,
            "",
        ));
    }

    // residual variance shrinks like 1/N (4x particles -> ratio near 4)
    let big = martingale_ensemble(
        &coeffs,
        &initial,
        drift.as_ref(),
        4 * RESID_N,
        fine_dt,
        fine_steps,
        derive_run_seed(seed, 500),
        VAR_PROBE_RUNS,
        &phis[..1],
    )?;
    let var_ratio = resid.residual_stats[2].variance() / big.residual_stats[2].variance();
    report.push(
        Check::lower("residual variance 1/N scaling", var_ratio, VAR_RATIO_BAND.0).with_detail(
            format!(
                "var({}) = {:.3e}, var({}) = {:.3e}",
                RESID_N,
                resid.residual_stats[2].variance(),
                4 * RESID_N,
                big.residual_stats[2].variance()
            ),
        ),
    );
    report.push(Check::upper(
        "residual variance 1/N scaling cap",
        var_ratio,
        VAR_RATIO_BAND.1,
    ));

    let _ = out;
    Ok(report)
}
