//! Regularity-class statistics of the empirical measures: boundary decay,
//! super-exponential tails, spatial concentration, and the two-particle
//! boundary estimate against its closed-form ceiling.

use rayon::prelude::*;

use crate::coefficients::{CoefficientSet, InitialLaw};
use crate::harness::config::ExperimentConfig;
use crate::harness::io::{fmt_f64, OutputWriter};
use crate::harness::report::{ols_slope, Check, Report};
use crate::measures::{MeasureDrift, RunningStats};
use crate::noise::NoisePath;
use crate::particles::{self, ParticleSystem};
use crate::rng::derive_run_seed;
use crate::Real;

use super::SuiteError;

const TAIL_LAMBDAS: [Real; 3] = [4.0, 6.0, 8.0];
const TAIL_ENVELOPE_ALPHA: Real = 2.0;
const PAIR_EPS: [Real; 3] = [0.02, 0.05, 0.1];
const PAIR_SAMPLES: u64 = 10_000_000;
const SPATIAL_WIDTHS: [Real; 4] = [0.05, 0.1, 0.2, 0.4];
const SPATIAL_ANCHOR: Real = 0.5;
const SPATIAL_DELTA: Real = 0.5;

/// Time-integrated statistics of one run.
pub(crate) struct LambdaRunStats {
    /// `int_0^T nu_t(0, eps)^2 dt` per boundary epsilon.
    pub boundary_sq: Vec<Real>,
    /// `(1/T) int_0^T nu_t(lambda, inf) dt` per tail lambda.
    pub tail: Vec<Real>,
    /// `(1/T) int_0^T nu_t(a, a + w) dt` per spatial width.
    pub spatial: Vec<Real>,
}

/// Simulate one run and accumulate the interval statistics step by step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lambda_run(
    coeffs: &CoefficientSet<Real>,
    initial: &InitialLaw<Real>,
    drift: Option<&MeasureDrift<Real>>,
    n: usize,
    dt: Real,
    steps: usize,
    seed: u64,
    run: u64,
    boundary_eps: &[Real],
    tail_lambdas: &[Real],
) -> Result<LambdaRunStats, SuiteError> {
    let noise = NoisePath::generate(derive_run_seed(seed, 2 * run), dt, steps);
    let sim_seed = derive_run_seed(seed, 2 * run + 1);
    let mut sys = ParticleSystem::new(coeffs, initial, drift.copied(), n, dt, sim_seed);
    let inv_n = 1.0 / n as Real;
    let t_end = dt * steps as Real;

    let mut boundary_sq = vec![0.0; boundary_eps.len()];
    let mut tail = vec![0.0; tail_lambdas.len()];
    let mut spatial = vec![0.0; SPATIAL_WIDTHS.len()];
    let ne = boundary_eps.len();
    let nl = tail_lambdas.len();
    let nw = SPATIAL_WIDTHS.len();
    let mut counts = vec![0usize; ne + nl + nw];
    let eps_max = boundary_eps.iter().cloned().fold(0.0, Real::max);
    let lam_min = tail_lambdas.iter().cloned().fold(Real::INFINITY, Real::min);
    let width_max = SPATIAL_WIDTHS.iter().cloned().fold(0.0, Real::max);
    let mut accumulate = |sys: &ParticleSystem<Real>| {
        counts.iter_mut().for_each(|c| *c = 0);
        // one fused pass over the particles for every interval statistic
        for (&x, &a) in sys.positions().iter().zip(sys.alive()) {
            if !a {
                continue;
            }
            if x > 0.0 && x < eps_max {
                for (e, &eps) in boundary_eps.iter().enumerate() {
                    if x < eps {
                        counts[e] += 1;
                    }
                }
            }
            if x > lam_min {
                for (l, &lam) in tail_lambdas.iter().enumerate() {
                    if x > lam {
                        counts[ne + l] += 1;
                    }
                }
            }
            if x > SPATIAL_ANCHOR && x < SPATIAL_ANCHOR + width_max {
                for (w, &width) in SPATIAL_WIDTHS.iter().enumerate() {
                    if x < SPATIAL_ANCHOR + width {
                        counts[ne + nl + w] += 1;
                    }
                }
            }
        }
        for e in 0..ne {
            let mass = counts[e] as Real * inv_n;
            boundary_sq[e] += mass * mass * dt;
        }
        for l in 0..nl {
            tail[l] += counts[ne + l] as Real * inv_n * dt;
        }
        for w in 0..nw {
            spatial[w] += counts[ne + nl + w] as Real * inv_n * dt;
        }
    };

    accumulate(&sys);
    for k in 0..steps {
        sys.step(noise.increments()[k])?;
        accumulate(&sys);
    }
    for v in &mut tail {
        *v /= t_end;
    }
    for v in &mut spatial {
        *v /= t_end;
    }
    Ok(LambdaRunStats {
        boundary_sq,
        tail,
        spatial,
    })
}

/// Per-replication log-log slope of the boundary-decay statistic; the mean
/// and standard error over replications give the confidence interval.
#[allow(clippy::too_many_arguments)]
pub(crate) fn boundary_decay_study(
    coeffs: &CoefficientSet<Real>,
    initial: &InitialLaw<Real>,
    drift: Option<&MeasureDrift<Real>>,
    n: usize,
    dt: Real,
    steps: usize,
    seed: u64,
    replications: usize,
    boundary_eps: &[Real],
) -> Result<(RunningStats, Vec<RunningStats>, Vec<RunningStats>, Vec<RunningStats>), SuiteError>
{
    let runs: Vec<Result<LambdaRunStats, SuiteError>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            lambda_run(
                coeffs,
                initial,
                drift,
                n,
                dt,
                steps,
                seed,
                r,
                boundary_eps,
                &TAIL_LAMBDAS,
            )
        })
        .collect();
    let log_eps: Vec<f64> = boundary_eps.iter().map(|e| e.ln()).collect();
    let mut slope_stats = RunningStats::default();
    let mut boundary_stats = vec![RunningStats::default(); boundary_eps.len()];
    let mut tail_stats = vec![RunningStats::default(); TAIL_LAMBDAS.len()];
    let mut spatial_stats = vec![RunningStats::default(); SPATIAL_WIDTHS.len()];
    for res in runs {
        let r = res?;
        if r.boundary_sq.iter().all(|&v| v > 0.0) {
            let log_vals: Vec<f64> = r.boundary_sq.iter().map(|v| v.ln()).collect();
            let (slope, _) = ols_slope(&log_eps, &log_vals);
            slope_stats.push(slope);
        }
        for (i, &v) in r.boundary_sq.iter().enumerate() {
            boundary_stats[i].push(v);
        }
        for (i, &v) in r.tail.iter().enumerate() {
            tail_stats[i].push(v);
        }
        for (i, &v) in r.spatial.iter().enumerate() {
            spatial_stats[i].push(v);
        }
    }
    Ok((slope_stats, boundary_stats, tail_stats, spatial_stats))
}

pub fn run(
    config: &ExperimentConfig,
    seed: u64,
    out: &mut OutputWriter,
) -> Result<Report, SuiteError> {
    let mut report = Report::new("class-lambda");
    let coeffs = config.coefficient_set()?;
    let initial = config.initial_law();
    let drift = config.interaction_drift()?;
    let dt = config.particles.dt;
    let steps = config.steps();
    let n = config.particles.n;

    let (slope_stats, boundary_stats, tail_stats, spatial_stats) = boundary_decay_study(
        &coeffs,
        &initial,
        drift.as_ref(),
        n,
        dt,
        steps,
        seed,
        config.suite.replications,
        &config.suite.boundary_eps,
    )?;

    // boundary decay: lower confidence bound of the slope must exceed one
    let lower = slope_stats.mean() - 3.0 * slope_stats.std_error();
    report.push(
        Check::lower("boundary-decay slope lower 3SE bound", lower, 1.0).with_detail(format!(
            "slope {:.3} +- {:.3} over {} replications",
            slope_stats.mean(),
            slope_stats.std_error(),
            slope_stats.count()
        )),
    );

    let mut rows = Vec::new();
    for (i, &eps) in config.suite.boundary_eps.iter().enumerate() {
        rows.push(format!(
            "boundary_sq,{},{},{}",
            fmt_f64(eps),
            fmt_f64(boundary_stats[i].mean()),
            fmt_f64(boundary_stats[i].std_error())
        ));
    }

    // tails sit below the exp(-2 lambda) envelope, and remain
    // super-exponential on the probe rates
    for (i, &lam) in TAIL_LAMBDAS.iter().enumerate() {
        let env = (-TAIL_ENVELOPE_ALPHA * lam).exp();
        let v = tail_stats[i].mean();
        report.push(
            Check::upper(
                format!("tail mass at lambda={lam} under exp(-2 lambda)"),
                v,
                env + 3.0 * tail_stats[i].std_error(),
            )
            .with_detail(format!("envelope {env:.3e}")),
        );
        rows.push(format!(
            "tail,{},{},{}",
            fmt_f64(lam),
            fmt_f64(v),
            fmt_f64(tail_stats[i].std_error())
        ));
    }
    for alpha in [0.5, 1.0, 2.0] {
        let mut ok = true;
        for w in 0..TAIL_LAMBDAS.len() - 1 {
            let cur = tail_stats[w].mean() * (alpha * TAIL_LAMBDAS[w]).exp();
            let nxt = tail_stats[w + 1].mean() * (alpha * TAIL_LAMBDAS[w + 1]).exp();
            let slack = 3.0
                * (tail_stats[w].std_error() * (alpha * TAIL_LAMBDAS[w]).exp()
                    + tail_stats[w + 1].std_error() * (alpha * TAIL_LAMBDAS[w + 1]).exp());
            if nxt > cur + slack && tail_stats[w + 1].mean() > 0.0 {
                ok = false;
            }
        }
        report.push(Check::flag(
            format!("tail decays faster than exp(-{alpha} lambda)"),
            ok,
            "",
        ));
    }

    // spatial concentration: slope of mass vs interval width at least delta
    let log_w: Vec<f64> = SPATIAL_WIDTHS.iter().map(|w| w.ln()).collect();
    let log_mass: Vec<f64> = spatial_stats.iter().map(|s| s.mean().ln()).collect();
    if log_mass.iter().all(|v| v.is_finite()) {
        let (slope, se) = ols_slope(&log_w, &log_mass);
        report.push(
            Check::lower(
                "spatial concentration log-log slope",
                slope - 3.0 * se,
                SPATIAL_DELTA,
            )
            .with_detail(format!("slope {slope:.3} +- {se:.3}")),
        );
    } else {
        report.push(Check::flag(
            "spatial concentration log-log slope",
            false,
            "empty interval statistics",
        ));
    }
    for (i, &w) in SPATIAL_WIDTHS.iter().enumerate() {
        rows.push(format!(
            "spatial,{},{},{}",
            fmt_f64(w),
            fmt_f64(spatial_stats[i].mean()),
            fmt_f64(spatial_stats[i].std_error())
        ));
    }

    // two-particle boundary probability against the closed-form ceiling
    let rho = coeffs.rho(0.0);
    let t_pair = 1.0;
    for &eps in &PAIR_EPS {
        let (p, se) = particles::pair_boundary_probability(
            &initial,
            rho,
            t_pair,
            eps,
            PAIR_SAMPLES,
            derive_run_seed(seed, 31),
        );
        let ceiling = 2.0 * eps * eps / (std::f64::consts::PI * (1.0 - rho * rho).sqrt() * t_pair);
        report.push(
            Check::upper(
                format!("pair boundary probability at eps={eps}"),
                p,
                ceiling + 3.0 * se,
            )
            .with_detail(format!("ceiling {ceiling:.3e}, se {se:.3e}")),
        );
        rows.push(format!(
            "pair_probability,{},{},{}",
            fmt_f64(eps),
            fmt_f64(p),
            fmt_f64(se)
        ));
    }

    // diffusive-range sanity: initial law on (1,2) leaves nothing beyond
    // 2 + 6 sqrt(T)
    {
        let uniform = InitialLaw::Uniform { lo: 1.0, hi: 2.0 };
        let t_end = dt * steps as Real;
        let noise = NoisePath::generate(derive_run_seed(seed, 77), dt, steps);
        let traj = particles::simulate(
            &coeffs,
            &uniform,
            None,
            10_000,
            &noise,
            derive_run_seed(seed, 78),
            &[steps],
        )?;
        let bound = 2.0 + 6.0 * t_end.sqrt();
        let beyond = traj.measures[0].interval_mass(bound, 1e9)?;
        // the event is a 6-sigma excursion: essentially no atoms expected
        report.push(Check::upper(
            "no mass beyond the diffusive range",
            beyond,
            2.5 / 10_000.0,
        ));
    }

    report.table("class_lambda_stats", "statistic,parameter,mean,se", rows);
    let _ = out;
    Ok(report)
}
