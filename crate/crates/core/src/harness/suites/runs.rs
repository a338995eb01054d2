//! Plain `simulate` and `solve` runs with their file exports.

use crate::fdsolver::{self, SolverConfig};
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{fmt_f64, OutputWriter};
use crate::harness::report::{Check, Report};
use crate::measures::{density_estimate, DensityMethod};
use crate::noise::NoisePath;
use crate::particles;
use crate::rng::derive_run_seed;

use super::SuiteError;

/// Run the particle system and export snapshots, histograms and the loss
/// series.
pub fn simulate(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("simulate");
    let coeffs = config.coefficient_set()?;
    let initial = config.initial_law();
    let drift = config.interaction_drift()?;
    let steps = config.steps();
    let noise = NoisePath::generate(seed, config.particles.dt, steps);
    let snapshots = vec![0, steps / 2, steps];
    let traj = particles::simulate(
        &coeffs,
        &initial,
        drift,
        config.particles.n,
        &noise,
        derive_run_seed(seed, 1),
        &snapshots,
    )?;

    for (i, m) in traj.measures.iter().enumerate() {
        let t = traj.snapshot_times[i];
        let rows: Vec<String> = m.atoms().iter().map(|x| fmt_f64(*x)).collect();
        out.write_csv(&format!("positions_t{i}"), "position", &rows)?;
        let est = density_estimate(
            m,
            DensityMethod::Histogram {
                bin: config.suite.bin_width,
            },
            config.x_max()?,
        );
        let hist_rows: Vec<String> = est
            .grid
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| {
                format!(
                    "{},{}",
                    fmt_f64(est.grid.x(j)),
                    fmt_f64(v * config.suite.bin_width)
                )
            })
            .collect();
        out.write_csv(&format!("histogram_t{i}"), "bin_left,mass", &hist_rows)?;
        report.push(Check::flag(
            format!("snapshot mass at t={t} within [0, 1]"),
            m.total_mass() >= 0.0 && m.total_mass() <= 1.0,
            format!("mass {}", m.total_mass()),
        ));
    }
    let loss_rows: Vec<String> = traj
        .loss_series
        .iter()
        .map(|&(t, l)| format!("{},{}", fmt_f64(t), fmt_f64(l)))
        .collect();
    out.write_csv("loss_series", "t,loss", &loss_rows)?;
    let final_loss = traj.final_loss();
    let alive = traj.measures.last().expect("snapshots").total_mass();
    report.push(Check::upper(
        "mass bookkeeping |alive + loss - 1|",
        (alive + final_loss - 1.0).abs(),
        1e-12,
    ));
    Ok(report)
}

/// Run the SPDE solver and export the density snapshots and mass series.
pub fn solve(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("solve");
    let coeffs = config.coefficient_set()?;
    let solver_cfg = SolverConfig {
        dx: config.solver.dx,
        x_max: config.x_max()?,
        boundary: coeffs.boundary,
        v0: config.initial_grid_density()?,
        stability_guard: config.solver.stability_guard,
    };
    let noise = NoisePath::generate(seed, config.particles.dt, config.steps())
        .refine_by(config.solver.refine);
    let steps = noise.steps();
    let snapshots = vec![0, steps / 2, steps];
    let solved = fdsolver::solve_spde_path(&coeffs, &noise, &solver_cfg, &snapshots)?;

    let mut rows = Vec::new();
    for (i, v) in solved.snapshots.iter().enumerate() {
        let t = solved.snapshot_times[i];
        for j in 0..v.len() {
            rows.push(format!(
                "{},{},{}",
                fmt_f64(t),
                fmt_f64(v.x(j)),
                fmt_f64(v.values()[j])
            ));
        }
    }
    out.write_csv("density", "t,x,v", &rows)?;
    let mass_rows: Vec<String> = solved
        .mass_series
        .iter()
        .map(|&(t, m)| format!("{},{}", fmt_f64(t), fmt_f64(m)))
        .collect();
    out.write_csv("mass_series", "t,mass", &mass_rows)?;

    let v0_peak = solver_cfg.v0.values().iter().cloned().fold(0.0, f64::max);
    let rho_max = (0..=8)
        .map(|i| coeffs.rho(i as f64 / 8.0 * config.particles.t_end))
        .fold(0.0, f64::max);
    if rho_max == 0.0 {
        report.push(Check::upper(
            "density stays nonnegative (undershoot floor)",
            -solved.min_value,
            1e-8 * v0_peak,
        ));
    } else {
        // the noisy Robin condition makes the boundary value rough: the
        // boundary cell absorbs flux kicks of order rho sigma V(0) dW/(dx/2)
        // per step, so negativity there is expected at this scale
        let swing = 2.0 * rho_max * coeffs.sigma(0.0, 0.0) * noise.dt().sqrt() / config.solver.dx;
        report.push(Check::upper(
            "boundary fluctuation bounded (noisy Robin condition)",
            -solved.min_value,
            v0_peak * (1.0 + 10.0 * swing),
        ));
    }
    report.push(Check::upper(
        "tail mass at the truncation edge",
        solved.tail_mass_max,
        1e-6,
    ));
    let series = fdsolver::mass_loss_series(&solved, &coeffs);
    report.push(Check::upper(
        "mass ledger relative gap",
        series.max_rel_gap,
        0.05,
    ));
    Ok(report)
}
