//! Kernel identity suite: Robin boundary identity, derivative switching,
//! the correction-term bound, L2 contraction, Chapman–Kolmogorov, and the
//! boundary test function.

use crate::grid::GridFunction;
use crate::halton::halton2d;
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{fmt_f64, OutputWriter};
use crate::harness::report::{Check, Report};
use crate::kernels::{self, KernelParams};
use crate::rng;
use crate::Real;

use super::SuiteError;

const RESIDUAL_TOL: f64 = 1e-6;

pub fn run(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("verify-kernels");
    let boundary = config.boundary()?;
    let kappa_cfg = boundary.kappa().unwrap_or(f64::INFINITY);
    let param_grid: Vec<(Real, Real)> = if kappa_cfg.is_finite() {
        vec![(0.5, kappa_cfg), (0.25, kappa_cfg), (0.5, 0.0), (0.1, 2.0)]
    } else {
        vec![(0.5, 0.0), (0.1, 2.0), (0.25, 5.0)]
    };
    let mut residual_rows = Vec::new();

    for &(eps, kappa) in &param_grid {
        let points = halton2d(100, 3.0);
        let (r1, r2) = kernels::derivative_switch_residual(eps, kappa, &points);
        report.push(
            Check::upper(
                format!("derivative-switch first order (eps={eps}, kappa={kappa})"),
                r1,
                RESIDUAL_TOL,
            ),
        );
        report.push(
            Check::upper(
                format!("derivative-switch second order (eps={eps}, kappa={kappa})"),
                r2,
                RESIDUAL_TOL,
            ),
        );
        residual_rows.push(format!("derivative_switch_1,{eps},{kappa},{}", fmt_f64(r1)));
        residual_rows.push(format!("derivative_switch_2,{eps},{kappa},{}", fmt_f64(r2)));

        let offsets: Vec<Real> = (1..40).map(|i| 0.08 * i as Real).collect();
        let robin = kernels::robin_residual_with(
            |x, y| kernels::elastic_kernel(eps, kappa, x, y),
            eps,
            kappa,
            &offsets,
        );
        report.push(Check::upper(
            format!("elastic boundary identity (eps={eps}, kappa={kappa})"),
            robin,
            RESIDUAL_TOL,
        ));
        residual_rows.push(format!("robin_identity,{eps},{kappa},{}", fmt_f64(robin)));

        // correction-term bound and positivity of the kernel
        let mut bound_residual: f64 = 0.0;
        let mut negativity: f64 = 0.0;
        for (x, y) in halton2d(400, 4.0) {
            let g = kernels::elastic_correction(eps, kappa, x, y);
            let cap = kappa * (-(x + y) * (x + y) / (2.0 * eps)).exp();
            bound_residual = bound_residual.max(g - cap).max(-g);
            negativity = negativity.max(-kernels::elastic_kernel(eps, kappa, x, y));
        }
        report.push(Check::upper(
            format!("correction-term bound (eps={eps}, kappa={kappa})"),
            bound_residual.max(0.0),
            RESIDUAL_TOL,
        ));
        report.push(Check::upper(
            format!("kernel nonnegative (eps={eps}, kappa={kappa})"),
            negativity.max(0.0),
            RESIDUAL_TOL,
        ));
        residual_rows.push(format!(
            "correction_bound,{eps},{kappa},{}",
            fmt_f64(bound_residual.max(0.0))
        ));
    }

    // Chapman-Kolmogorov spot checks
    let ck_samples = [
        (0.3, 0.2, 1.0, 0.4, 0.9),
        (0.1, 0.1, 0.0, 0.0, 0.5),
        (0.5, 0.25, 2.0, 1.2, 0.1),
        (0.2, 0.4, 0.5, 0.8, 0.8),
    ];
    let mut ck_worst: f64 = 0.0;
    for (s, t, kappa, x, y) in ck_samples {
        ck_worst = ck_worst.max(kernels::chapman_kolmogorov_residual(s, t, kappa, x, y)?);
    }
    report.push(Check::upper(
        "Chapman-Kolmogorov spot checks",
        ck_worst,
        RESIDUAL_TOL,
    ));
    residual_rows.push(format!("chapman_kolmogorov,,,{}", fmt_f64(ck_worst)));

    // L2 contraction on random piecewise-constant inputs
    let params = KernelParams::new(0.05, kappa_cfg.min(4.0).max(0.0))?;
    let mut contraction_worst: f64 = 0.0;
    for rep in 0..100u64 {
        let vals: Vec<Real> = (0..241)
            .map(|j| 2.0 * rng::uniform_co(seed, rng::stream::MEASURE_PROBE, rep, j) - 0.5)
            .collect();
        let f = GridFunction::new(0.025, vals).expect("finite input");
        let tf = kernels::mollify_density(&f, params, 0.025, 6.0);
        contraction_worst = contraction_worst.max((tf.l2_norm() - f.l2_norm()) / f.l2_norm());
    }
    report.push(Check::upper(
        "L2 contraction of the mollifier",
        contraction_worst.max(0.0),
        RESIDUAL_TOL,
    ));
    residual_rows.push(format!(
        "l2_contraction,,,{}",
        fmt_f64(contraction_worst.max(0.0))
    ));

    // boundary test function: range, degenerate cases, quadrature vs closed form
    let mut phi_range_bad = false;
    for &(eps, kappa) in &param_grid {
        for i in 0..=20 {
            let x = 0.2 * i as Real;
            let phi = kernels::boundary_test_function(eps, kappa, x)?;
            if !(phi > 0.0 && phi <= 1.0 + 1e-12) {
                phi_range_bad = true;
            }
        }
    }
    report.push(Check::flag(
        "boundary test function in (0, 1]",
        !phi_range_bad,
        "",
    ));
    let phi_kappa0 = kernels::boundary_test_function(0.3f64, 0.0, 0.7)?;
    report.push(Check::upper(
        "boundary test function reflecting degenerate",
        (phi_kappa0 - 1.0).abs(),
        1e-12,
    ));
    let phi_concentrated = kernels::boundary_test_function(1e-4, 1.0, 0.5)?;
    report.push(Check::lower(
        "boundary test function small-eps limit",
        phi_concentrated,
        1.0 - 1e-8,
    ));

    // kernel mass never exceeds one
    let mut mass_excess: f64 = 0.0;
    for &(eps, kappa) in &param_grid {
        for i in 0..=10 {
            let x = 0.3 * i as Real;
            let phi = kernels::boundary_test_function(eps, kappa, x)?;
            mass_excess = mass_excess.max(phi - 1.0);
        }
    }
    report.push(Check::upper(
        "elastic kernel mass at most one",
        mass_excess.max(0.0),
        1e-9,
    ));

    report.table(
        "kernel_residuals",
        "check,eps,kappa,residual",
        residual_rows,
    );

    // sampled kernel table for plotting
    if out.enabled() {
        let xs: Vec<Real> = (0..=60).map(|i| 0.05 * i as Real).collect();
        let ys: Vec<Real> = (0..=60).map(|i| 0.05 * i as Real).collect();
        let mut buf = Vec::new();
        let table_params = KernelParams::new(0.25, kappa_cfg.min(4.0).max(0.0))?;
        kernels::dump_kernel_table(table_params, &xs, &ys, &mut buf)?;
        out.write_text("kernel_table.csv", std::str::from_utf8(&buf).expect("utf8"))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_passes() {
        let config = ExperimentConfig::default();
        let mut out = OutputWriter::disabled();
        let report = run(&config, 1, &mut out).unwrap();
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn absorbing_config_still_checks_kernels() {
        let config = ExperimentConfig::from_toml(
            "[coefficients]\nboundary = \"absorbing\"\n",
        )
        .unwrap();
        let mut out = OutputWriter::disabled();
        let report = run(&config, 1, &mut out).unwrap();
        assert!(report.all_pass(), "{report}");
    }
}
