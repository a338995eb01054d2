//! Scratch calibration probes, run on demand with
//! `cargo test --release -p halfline-core --test calibration -- --ignored --nocapture`.

use halfline_core::coefficients::{Boundary, CoefFn, CoefficientSet, InitialLaw};
use halfline_core::fdsolver::{self, SolverConfig};
use halfline_core::grid::GridFunction;
use halfline_core::kernels;
use halfline_core::noise::NoisePath;
use halfline_core::particles;
use halfline_core::quad;
use halfline_core::rng::derive_run_seed;

fn coeffs(mu: f64, sigma: f64, rho: f64, boundary: Boundary<f64>) -> CoefficientSet<f64> {
    CoefficientSet {
        mu: CoefFn::Constant(mu),
        sigma: CoefFn::Constant(sigma),
        rho: CoefFn::Constant(rho),
        boundary,
        bound_c: 4.0,
    }
}

const BUMP: InitialLaw<f64> = InitialLaw::GaussianBump {
    center: 1.0,
    width: 0.15,
};

/// Survival probability oracle: <nu_0, phi_T^{E,kappa}>.
fn survival_oracle(kappa: f64, t: f64, v0: &GridFunction<f64>) -> f64 {
    let dx = v0.dx();
    let mut acc = 0.0;
    for j in 0..v0.len() {
        let w = if j == 0 || j == v0.len() - 1 { 0.5 } else { 1.0 };
        acc += w * v0.values()[j]
            * kernels::boundary_test_function(t, kappa, v0.x(j)).unwrap();
    }
    acc * dx
}

#[test]
#[ignore]
fn loss_bias_vs_dt() {
    let v0 = BUMP.grid_density(0.002, 8.0).unwrap();
    let oracle = 1.0 - survival_oracle(1.0, 1.0, &v0);
    println!("kernel-oracle loss at T=1, kappa=1: {oracle:.6}");
    let c = coeffs(0.0, 1.0, 0.0, Boundary::Elastic(1.0));
    for dt in [1e-3f64, 5e-4, 2e-4, 1e-4] {
        let steps = (1.0 / dt).round() as usize;
        let n = 200_000;
        let noise = NoisePath::zero(dt, steps);
        let t0 = std::time::Instant::now();
        let traj =
            particles::simulate(&c, &BUMP, None, n, &noise, derive_run_seed(7, 1), &[]).unwrap();
        let loss = traj.final_loss();
        let se = (loss * (1.0 - loss) / n as f64).sqrt();
        println!(
            "dt={dt:.0e}: loss={loss:.6} bias={:+.6} ({:+.2} se) [{} ms]",
            loss - oracle,
            (loss - oracle) / se,
            t0.elapsed().as_millis()
        );
    }
}

#[test]
#[ignore]
fn criterion2_baseline_accuracy() {
    let c = coeffs(0.0, 1.0, 0.0, Boundary::Elastic(1.0));
    for (dx, dt) in [(1e-3f64, 1e-4f64), (5e-4, 5e-5)] {
        let x_max = 6.0;
        let v0 = BUMP.grid_density(dx, x_max).unwrap();
        let cfg = SolverConfig {
            dx,
            x_max,
            boundary: Boundary::Elastic(1.0),
            v0: v0.clone(),
            stability_guard: 512.0,
        };
        let steps = (0.5 / dt).round() as usize;
        let t0 = std::time::Instant::now();
        let out = fdsolver::solve_spde_path(&c, &NoisePath::zero(dt, steps), &cfg, &[steps]).unwrap();
        let reference = fdsolver::kernel_reference_solution(Boundary::Elastic(1.0), 0.5, &v0);
        let err = out.snapshots[0].l1_distance(&reference);
        println!(
            "dx={dx:.0e} dt={dt:.0e}: L1={err:.3e}, min={:.2e}, [{} ms]",
            out.min_value,
            t0.elapsed().as_millis()
        );
    }
}

#[test]
#[ignore]
fn noisy_solver_positivity_and_compare() {
    // criterion-3 style run: rho = 0.5, kappa in {0, 1}
    for kappa in [0.0f64, 1.0] {
        let boundary = if kappa == 0.0 {
            Boundary::Reflecting
        } else {
            Boundary::Elastic(kappa)
        };
        let c = coeffs(0.0, 1.0, 0.5, boundary);
        let dt = 2e-4;
        let steps = 5000; // T = 1
        let noise = NoisePath::generate(42, dt, steps);
        let n = 100_000;
        let t0 = std::time::Instant::now();
        let traj = particles::simulate(&c, &BUMP, None, n, &noise, derive_run_seed(42, 1), &[steps])
            .unwrap();
        let sim_ms = t0.elapsed().as_millis();

        let dx = 0.0125;
        let x_max = 7.5;
        let v0 = BUMP.grid_density(dx, x_max).unwrap();
        let cfg = SolverConfig {
            dx,
            x_max,
            boundary,
            v0,
            stability_guard: 512.0,
        };
        let t1 = std::time::Instant::now();
        let solver_noise = noise.refine_by(2);
        let out = fdsolver::solve_spde_path(&c, &solver_noise, &cfg, &[steps * 4]).unwrap();
        let solve_ms = t1.elapsed().as_millis();
        let (l1, mass_diff) =
            fdsolver::compare_histograms(&traj.measures[0], &out.snapshots[0], 0.05).unwrap();
        println!(
            "kappa={kappa}: L1={l1:.4}, mass_diff={mass_diff:.5}, minV={:.2e}, \
             loss_p={:.5}, loss_s={:.5} [sim {sim_ms} ms, solve {solve_ms} ms]",
            out.min_value,
            traj.final_loss(),
            1.0 - out.mass_series.last().unwrap().1,
        );
    }
}

#[test]
#[ignore]
fn mass_loss_pairing_quality() {
    // paired kernel-side vs realised loss at various bandwidths
    let c = coeffs(0.0, 1.0, 0.5, Boundary::Elastic(1.0));
    let eps_ladder = [0.1, 0.05, 0.02, 0.01];
    let n = 10_000;
    let dt = 1e-4;
    let steps = 5000; // T = 0.5
    let reps = 48u64;
    let t0 = std::time::Instant::now();
    let mut diff_stats = vec![halfline_core::measures::RunningStats::default(); 4];
    for r in 0..reps {
        let noise = NoisePath::generate(derive_run_seed(9, 2 * r), dt, steps);
        let mut sys = halfline_core::particles::ParticleSystem::new(
            &c,
            &BUMP,
            None,
            n,
            dt,
            derive_run_seed(9, 2 * r + 1),
        );
        let mut ks = [0.0f64; 4];
        for k in 0..steps {
            let positions = sys.positions();
            let alive = sys.alive();
            for (e, &eps) in eps_ladder.iter().enumerate() {
                let cutoff = (80.0f64 * eps).sqrt() + eps;
                let mut acc = 0.0;
                for (&x, &a) in positions.iter().zip(alive) {
                    if a && x < cutoff {
                        acc += 0.5
                            * (2.0 * kernels::gaussian_kernel(eps, x)
                                - kernels::elastic_correction(eps, 1.0, 0.0, x));
                    }
                }
                ks[e] += dt * acc / n as f64;
            }
            sys.step(noise.increments()[k]).unwrap();
        }
        let loss = sys.loss();
        for e in 0..4 {
            diff_stats[e].push(loss - ks[e]);
        }
    }
    for (e, eps) in eps_ladder.iter().enumerate() {
        println!(
            "eps={eps}: diff mean={:+.5e} se={:.3e} |z|={:.2}",
            diff_stats[e].mean(),
            diff_stats[e].std_error(),
            (diff_stats[e].mean() / diff_stats[e].std_error()).abs()
        );
    }
    println!("[{} s]", t0.elapsed().as_secs_f32());
}

#[test]
#[ignore]
fn quad_smoke() {
    let v: f64 = quad::integrate(|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12).unwrap();
    println!("sqrt(pi)/2 = {v}");
}
