//! Elastic-rate ladder: the solver output must interpolate monotonically
//! between the reflecting and absorbing solutions under one shared noise
//! path, with the expected limits at the ladder ends.

use crate::fdsolver::{self, SolverConfig};
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{fmt_f64, OutputWriter};
use crate::harness::report::{Check, Report};
use crate::noise::NoisePath;

use super::SuiteError;

const REFLECTING_END_TOL: f64 = 0.02;
const ABSORBING_END_TOL: f64 = 0.05;

pub fn run(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("kappa-limits");
    let base = config.coefficient_set()?;
    let x_max = config.x_max()?;
    let solver_cfg = SolverConfig {
        dx: config.solver.dx,
        x_max,
        boundary: base.boundary,
        v0: config.initial_grid_density()?,
        stability_guard: config.solver.stability_guard,
    };
    let noise =
        NoisePath::generate(seed, config.particles.dt, config.steps()).refine_by(config.solver.refine);
    let ladder = config.suite.kappa_ladder.clone();

    let rows = fdsolver::kappa_limit_study(
        |boundary| {
            let mut c = base.clone();
            c.boundary = boundary;
            c
        },
        &noise,
        &solver_cfg,
        &ladder,
    )?;

    let mut csv = Vec::new();
    for r in &rows {
        csv.push(format!(
            "{},{},{}",
            fmt_f64(r.kappa),
            fmt_f64(r.dist_absorbing),
            fmt_f64(r.dist_reflecting)
        ));
    }
    for w in rows.windows(2) {
        report.push(
            Check::flag(
                format!(
                    "distance to absorbing decreasing ({} -> {})",
                    w[0].kappa, w[1].kappa
                ),
                w[1].dist_absorbing < w[0].dist_absorbing,
                format!("{:.4} -> {:.4}", w[0].dist_absorbing, w[1].dist_absorbing),
            ),
        );
        report.push(
            Check::flag(
                format!(
                    "distance to reflecting increasing ({} -> {})",
                    w[0].kappa, w[1].kappa
                ),
                w[1].dist_reflecting > w[0].dist_reflecting,
                format!(
                    "{:.4} -> {:.4}",
                    w[0].dist_reflecting, w[1].dist_reflecting
                ),
            ),
        );
    }
    let first = rows.first().expect("nonempty ladder");
    let last = rows.last().expect("nonempty ladder");
    report.push(Check::upper(
        format!("reflecting endpoint distance (kappa={})", first.kappa),
        first.dist_reflecting,
        REFLECTING_END_TOL,
    ));
    report.push(Check::upper(
        format!("absorbing endpoint distance (kappa={})", last.kappa),
        last.dist_absorbing,
        ABSORBING_END_TOL,
    ));

    report.table("kappa_ladder", "kappa,dist_absorbing,dist_reflecting", csv);
    let _ = out;
    Ok(report)
}
