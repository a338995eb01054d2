//! Measure-dependent drift extension: interaction off reproduces the linear
//! dynamics bit for bit, the drift functional respects its declared
//! Lipschitz constant in the bounded-Lipschitz metric, and the interacting
//! empirical measures retain the regularity and martingale structure.

use crate::coefficients::Boundary;
use crate::harness::config::{ConfigError, ExperimentConfig};
use crate::harness::io::OutputWriter;
use crate::harness::report::{z_score, Check, Report};
use crate::measures::{bounded_lipschitz_distance, EmpiricalMeasure};
use crate::noise::NoisePath;
use crate::particles;
use crate::rng::{self, derive_run_seed, stream};
use crate::Real;

use super::class_lambda::boundary_decay_study;
use super::convergence::{martingale_ensemble, test_functions};
use super::SuiteError;

const Z_TOL: f64 = 3.0;

pub fn run(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("nonlinear");
    let Some(drift) = config.interaction_drift()? else {
        return Err(SuiteError::Config(ConfigError::Invalid(
            "nonlinear checks need an [interaction] section".into(),
        )));
    };
    let coeffs = config.coefficient_set()?;
    let kappa = match coeffs.boundary {
        Boundary::Absorbing => {
            return Err(SuiteError::Config(ConfigError::Invalid(
                "nonlinear checks need an elastic or reflecting boundary".into(),
            )))
        }
        b => b.kappa().expect("finite rate"),
    };
    let initial = config.initial_law();
    let dt = config.particles.dt;
    let steps = config.steps();

    // interaction switched off reproduces the linear simulator bitwise
    {
        let mut off = drift;
        off.strength = 0.0;
        let mut base_coeffs = coeffs.clone();
        base_coeffs.mu = crate::coefficients::CoefFn::Constant(off.base);
        let noise = NoisePath::generate(derive_run_seed(seed, 1), dt, steps.min(500));
        let n = 2000.min(config.particles.n);
        let sim_seed = derive_run_seed(seed, 2);
        let lin =
            particles::simulate(&base_coeffs, &initial, None, n, &noise, sim_seed, &[noise.steps()])?;
        let non = particles::simulate(
            &base_coeffs,
            &initial,
            Some(off),
            n,
            &noise,
            sim_seed,
            &[noise.steps()],
        )?;
        // kill times hold NaN sentinels for survivors, so compare bits
        let bits = |v: &[f64]| -> Vec<u64> { v.iter().map(|x| x.to_bits()).collect() };
        let identical = lin.measures[0] == non.measures[0]
            && lin.loss_series == non.loss_series
            && bits(&lin.kill_times) == bits(&non.kill_times);
        report.push(Check::flag(
            "zero interaction is bit-identical to the linear simulator",
            identical,
            "",
        ));
    }

    // Lipschitz probe of the drift functional over random measure pairs
    {
        let declared = match &config.interaction {
            Some(sec) if sec.lipschitz > 0.0 => sec.lipschitz,
            _ => drift.lipschitz_constant(),
        };
        let mut worst_excess: f64 = 0.0;
        for probe in 0..100u64 {
            let make = |tag: u64| -> EmpiricalMeasure<Real> {
                let count = 100
                    + (rng::word(seed, stream::MEASURE_PROBE, probe, tag) % 200) as usize;
                let atoms: Vec<Real> = (0..count)
                    .map(|i| {
                        5.0 * rng::uniform_co(seed, stream::MEASURE_PROBE, probe * 1000 + tag, i as u64)
                    })
                    .collect();
                EmpiricalMeasure::new(atoms, count)
            };
            let nu = make(1);
            let nu_tilde = make(2);
            let mu_gap =
                (drift.eval(drift.pairing(&nu)) - drift.eval(drift.pairing(&nu_tilde))).abs();
            let d0 = bounded_lipschitz_distance(&nu, &nu_tilde, 1e-3 * 5.0, 6.0);
            let allowed = declared * (d0.value + d0.error_bound);
            worst_excess = worst_excess.max(mu_gap - allowed);
        }
        report.push(
            Check::upper(
                "drift functional respects the declared Lipschitz constant",
                worst_excess.max(0.0),
                1e-12,
            )
            .with_detail(format!("constant {declared}")),
        );
    }

    // interacting runs keep the boundary-decay regularity
    {
        let reps = config.suite.replications.min(24);
        let (slope_stats, _, tail_stats, _) = boundary_decay_study(
            &coeffs,
            &initial,
            Some(&drift),
            config.particles.n,
            dt,
            steps,
            derive_run_seed(seed, 3),
            reps,
            &config.suite.boundary_eps,
        )?;
        let lower = slope_stats.mean() - 3.0 * slope_stats.std_error();
        report.push(
            Check::lower("nonlinear boundary-decay slope lower 3SE bound", lower, 1.0)
                .with_detail(format!(
                    "slope {:.3} +- {:.3}",
                    slope_stats.mean(),
                    slope_stats.std_error()
                )),
        );
        for (i, lam) in [4.0f64, 6.0, 8.0].iter().enumerate() {
            let env: f64 = (-2.0 * lam).exp();
            report.push(Check::upper(
                format!("nonlinear tail mass at lambda={lam}"),
                tail_stats[i].mean(),
                env + 3.0 * tail_stats[i].std_error(),
            ));
        }
    }

    // interacting runs keep the martingale structure
    {
        let phis = test_functions(kappa, &config.suite.lambda_values);
        let n_mart = config.suite.n_ladder.get(1).copied().unwrap_or(10_000);
        let summary = martingale_ensemble(
            &coeffs,
            &initial,
            Some(&drift),
            n_mart,
            dt,
            steps,
            derive_run_seed(seed, 4),
            config.suite.martingale_runs,
            &phis,
        )?;
        for (p, stats) in summary.msc_stats.iter().enumerate() {
            for (q, name) in ["M", "S", "C"].iter().enumerate() {
                let z = z_score(stats[q].mean(), stats[q].std_error());
                report.push(
                    Check::upper(
                        format!(
                            "nonlinear |z| of {name} (lambda={})",
                            config.suite.lambda_values[p]
                        ),
                        z.abs(),
                        Z_TOL,
                    )
                    .with_detail(format!(
                        "mean {:.3e}, se {:.3e}",
                        stats[q].mean(),
                        stats[q].std_error()
                    )),
                );
            }
        }
    }

    let _ = out;
    Ok(report)
}
