//! Particle-system vs SPDE-solver comparison under one shared common-noise
//! path (the conditional-law representation at finite N, dt, dx).

use crate::coefficients::Boundary;
use crate::fdsolver::{self, SolverConfig};
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{fmt_f64, OutputWriter};
use crate::harness::report::{Check, Report};
use crate::noise::NoisePath;
use crate::particles;
use crate::rng::derive_run_seed;
use crate::Real;

use super::SuiteError;

const L1_TOL: f64 = 0.05;
const MASS_TOL: f64 = 0.01;
const T0_BIN_TOL: f64 = 0.01;
const SCALING_BAND: (f64, f64) = (1.4, 3.0);

struct RungOutcome {
    times: Vec<Real>,
    l1: Vec<Real>,
    mass_diff: Vec<Real>,
    stat_component: Option<(Real, Real)>, // (at N, at 4N)
}

fn run_rung(
    config: &ExperimentConfig,
    boundary: Boundary<Real>,
    seed: u64,
    with_scaling: bool,
) -> Result<RungOutcome, SuiteError> {
    let mut coeffs = config.coefficient_set()?;
    coeffs.boundary = boundary;
    let initial = config.initial_law();
    let n = config.particles.n;
    let steps = config.steps();
    let dt = config.particles.dt;
    let noise = NoisePath::generate(seed, dt, steps);
    let snapshots = vec![0, steps / 2, steps];

    let traj = particles::simulate(
        &coeffs,
        &initial,
        None,
        n,
        &noise,
        derive_run_seed(seed, 1),
        &snapshots,
    )?;

    let x_max = config.x_max()?;
    let solver_cfg = SolverConfig {
        dx: config.solver.dx,
        x_max,
        boundary,
        v0: config.initial_grid_density()?,
        stability_guard: config.solver.stability_guard,
    };
    let refine = config.solver.refine;
    let solver_noise = noise.refine_by(refine);
    let scale = 1usize << refine;
    let solver_snapshots: Vec<usize> = snapshots.iter().map(|k| k * scale).collect();
    let solved = fdsolver::solve_spde_path(&coeffs, &solver_noise, &solver_cfg, &solver_snapshots)?;

    let bin = config.suite.bin_width;
    let mut l1 = Vec::new();
    let mut mass_diff = Vec::new();
    for (i, m) in traj.measures.iter().enumerate() {
        let (d, md) = fdsolver::compare_histograms(m, &solved.snapshots[i], bin)?;
        l1.push(d);
        mass_diff.push(md);
    }

    let stat_component = if with_scaling {
        let stat = |count: usize, tag: u64| -> Result<Real, SuiteError> {
            let a = particles::simulate(
                &coeffs,
                &initial,
                None,
                count,
                &noise,
                derive_run_seed(seed, 10 + tag),
                &[steps],
            )?;
            let b = particles::simulate(
                &coeffs,
                &initial,
                None,
                count,
                &noise,
                derive_run_seed(seed, 20 + tag),
                &[steps],
            )?;
            let x_hi = x_max;
            let nbins = (x_hi / bin).ceil() as usize;
            let ha = crate::measures::histogram_masses(&a.measures[0], bin, nbins);
            let hb = crate::measures::histogram_masses(&b.measures[0], bin, nbins);
            Ok(ha
                .iter()
                .zip(&hb)
                .map(|(u, v)| (u - v).abs())
                .sum::<Real>())
        };
        Some((stat(n, 0)?, stat(4 * n, 1)?))
    } else {
        None
    };

    Ok(RungOutcome {
        times: traj.snapshot_times,
        l1,
        mass_diff,
        stat_component,
    })
}

pub fn run(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("compare");
    let configured = config.boundary()?;
    let mut rungs: Vec<Boundary<Real>> = vec![Boundary::Reflecting];
    if configured != Boundary::Reflecting {
        rungs.push(configured);
    }

    let mut rows = Vec::new();
    for (idx, &boundary) in rungs.iter().enumerate() {
        let scaling = idx == rungs.len() - 1;
        let outcome = run_rung(config, boundary, seed, scaling)?;
        let label = match boundary {
            Boundary::Reflecting => "kappa=0".to_string(),
            Boundary::Elastic(k) => format!("kappa={k}"),
            Boundary::Absorbing => "absorbing".to_string(),
        };
        for i in 0..outcome.times.len() {
            rows.push(format!(
                "{},{},{},{}",
                label,
                fmt_f64(outcome.times[i]),
                fmt_f64(outcome.l1[i]),
                fmt_f64(outcome.mass_diff[i])
            ));
        }
        report.push(Check::upper(
            format!("binned L1 at t=0 ({label})"),
            outcome.l1[0],
            T0_BIN_TOL,
        ));
        report.push(Check::upper(
            format!("binned L1 at horizon ({label})"),
            *outcome.l1.last().expect("snapshots"),
            L1_TOL,
        ));
        report.push(Check::upper(
            format!("mass difference at horizon ({label})"),
            *outcome.mass_diff.last().expect("snapshots"),
            MASS_TOL,
        ));
        if let Some((stat_n, stat_4n)) = outcome.stat_component {
            let ratio = stat_n / stat_4n;
            report.push(
                Check::lower(
                    format!("statistical component scaling ({label})"),
                    ratio,
                    SCALING_BAND.0,
                )
                .with_detail(format!("stat(N)={stat_n:.4}, stat(4N)={stat_4n:.4}")),
            );
            report.push(Check::upper(
                format!("statistical component scaling cap ({label})"),
                ratio,
                SCALING_BAND.1,
            ));
        }
    }
    report.table("compare_l1", "rung,t,l1,mass_diff", rows);
    let _ = out;
    Ok(report)
}
