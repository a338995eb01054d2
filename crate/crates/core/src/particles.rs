//! Interacting particle system: reflected Euler steps via the one-step
//! Skorokhod map, local-time accumulation, elastic killing against
//! exponential clocks, and empirical-measure snapshots.

use rayon::prelude::*;
use thiserror::Error;

use crate::coefficients::{Boundary, CoefficientSet, InitialLaw};
use crate::measures::{EmpiricalMeasure, MeasureDrift};
use crate::noise::NoisePath;
use crate::rng::{self, stream};
use crate::scalar::Scalar;

/// Fixed chunk size for parallel particle updates; reductions run over
/// chunks in index order, so results do not depend on the thread count.
const CHUNK: usize = 8192;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("particle {particle} reached a non-finite position at t = {time}")]
    NonFinitePosition { particle: usize, time: f64 },
    #[error("invalid simulation config: {0}")]
    Config(String),
}

/// Run parameters for one particle simulation.
#[derive(Debug, Clone)]
pub struct SimConfig<S> {
    pub n: usize,
    pub t_end: S,
    pub dt: S,
    pub seed: u64,
    pub snapshot_times: Vec<S>,
}

impl<S: Scalar> SimConfig<S> {
    /// Number of steps; fails unless `t_end/dt` is integral within 1e-9.
    pub fn steps(&self) -> Result<usize, SimError> {
        if self.n < 1 {
            return Err(SimError::Config("need at least one particle".into()));
        }
        if !(self.dt > S::zero()) {
            return Err(SimError::Config("dt must be positive".into()));
        }
        let ratio = (self.t_end / self.dt).to_f64_();
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 {
            return Err(SimError::Config(format!(
                "t_end/dt = {ratio} is not integral"
            )));
        }
        Ok(steps as usize)
    }

    pub fn snapshot_indices(&self) -> Result<Vec<usize>, SimError> {
        let steps = self.steps()?;
        let mut idx = Vec::with_capacity(self.snapshot_times.len());
        for &t in &self.snapshot_times {
            let u = (t / self.dt).to_f64_();
            let k = u.round();
            if (u - k).abs() > 1e-9 || k < 0.0 || k as usize > steps {
                return Err(SimError::Config(format!("snapshot time {t} is off-grid")));
            }
            idx.push(k as usize);
        }
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }
}

/// Idiosyncratic driving normal of particle `i` at step `k`: the two halves
/// of one Box–Muller draw serve consecutive steps.
#[inline]
pub fn idio_normal(seed: u64, particle: u64, step: u64) -> f64 {
    let (even, odd) = rng::standard_normal_pair(seed, stream::IDIOSYNCRATIC, particle, step / 2);
    if step % 2 == 0 {
        even
    } else {
        odd
    }
}

/// State of the `N`-particle system at one time barrier.
pub struct ParticleSystem<'a, S: Scalar> {
    coeffs: &'a CoefficientSet<S>,
    drift: Option<MeasureDrift<S>>,
    dt: S,
    seed: u64,
    positions: Vec<S>,
    local_times: Vec<S>,
    clocks: Vec<S>,
    alive: Vec<bool>,
    kill_times: Vec<S>,
    /// Unused second Box–Muller half from the previous (even) step.
    normal_cache: Vec<S>,
    alive_count: usize,
    step_index: usize,
}

impl<'a, S: Scalar> ParticleSystem<'a, S> {
    /// Draw initial positions and killing clocks.
    ///
    /// Clocks share one uniform per particle across kappa values
    /// (`chi = -ln(u)/kappa`), which couples the killed sets monotonically
    /// in kappa path by path. The reflecting mode has infinite clocks, the
    /// absorbing mode zero clocks.
    pub fn new(
        coeffs: &'a CoefficientSet<S>,
        initial: &InitialLaw<S>,
        drift: Option<MeasureDrift<S>>,
        n: usize,
        dt: S,
        seed: u64,
    ) -> Self {
        let positions: Vec<S> = (0..n).map(|i| initial.sample(seed, i as u64)).collect();
        let clocks: Vec<S> = match coeffs.boundary {
            Boundary::Reflecting => vec![S::infinity(); n],
            Boundary::Absorbing => vec![S::zero(); n],
            Boundary::Elastic(kappa) => (0..n)
                .map(|i| -S::of(rng::uniform_oc(seed, stream::CLOCK, i as u64, 0)).ln() / kappa)
                .collect(),
        };
        Self {
            coeffs,
            drift,
            dt,
            seed,
            positions,
            local_times: vec![S::zero(); n],
            clocks,
            alive: vec![true; n],
            kill_times: vec![S::nan(); n],
            normal_cache: vec![S::zero(); n],
            alive_count: n,
            step_index: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn time(&self) -> S {
        self.dt * S::of(self.step_index as f64)
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    /// Loss process `L^N_t = 1 - alive/N` (exact bookkeeping).
    pub fn loss(&self) -> S {
        S::of((self.n() - self.alive_count) as f64) / S::of(self.n() as f64)
    }

    pub fn positions(&self) -> &[S] {
        &self.positions
    }

    pub fn local_times(&self) -> &[S] {
        &self.local_times
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn kill_times(&self) -> &[S] {
        &self.kill_times
    }

    /// `(1/N) sum_i L_{t and tau_i}` (the compensator side of `J^N`).
    pub fn mean_stopped_local_time(&self) -> S {
        let n = self.n();
        let partials: Vec<S> = self
            .local_times
            .par_chunks(CHUNK)
            .map(|c| c.iter().copied().sum())
            .collect();
        partials.into_iter().sum::<S>() / S::of(n as f64)
    }

    /// Empirical measure of the surviving particles.
    pub fn measure(&self) -> EmpiricalMeasure<S> {
        let atoms: Vec<S> = self
            .positions
            .iter()
            .zip(&self.alive)
            .filter_map(|(&x, &a)| a.then_some(x))
            .collect();
        EmpiricalMeasure::new(atoms, self.n())
    }

    /// Pairing `<nu_t, f>` over alive particles without building a snapshot.
    pub fn pair(&self, f: impl Fn(S) -> S + Sync) -> S {
        let n = self.n();
        let partials: Vec<S> = self
            .positions
            .par_chunks(CHUNK)
            .zip(self.alive.par_chunks(CHUNK))
            .map(|(xs, alive)| {
                let mut acc = S::zero();
                for (&x, &a) in xs.iter().zip(alive) {
                    if a {
                        acc += f(x);
                    }
                }
                acc
            })
            .collect();
        partials.into_iter().sum::<S>() / S::of(n as f64)
    }

    /// One Euler step with reflection and killing, driven by the common
    /// increment `dw0`.
    ///
    /// Pre-point `Y = X + mu dt + sigma (rho dW0 + sqrt(1-rho^2) dWi)`;
    /// reflected update `X' = max(Y, 0)`, `dL = max(-Y, 0)`. A particle
    /// whose local time would cross its clock is killed at the step end,
    /// frozen at the boundary with its local time clamped to the clock
    /// (the continuous-time relation `L_tau = chi`), which keeps the
    /// discrete compensator identity exact.
    pub fn step(&mut self, dw0: S) -> Result<(), SimError> {
        let t = self.time();
        let t_next = t + self.dt;
        let rho = self.coeffs.rho(t);
        let rho_dw0 = rho * dw0;
        let idio_scale = (S::one() - rho * rho).sqrt() * self.dt.sqrt();
        let mu_measure = self.drift.as_ref().map(|d| {
            let pairing = self.pair(|x| d.kernel.eval(x));
            d.eval(pairing)
        });
        let dt = self.dt;
        let seed = self.seed;
        let k = self.step_index as u64;
        let coeffs = self.coeffs;

        let even_step = k % 2 == 0;
        let errors: Vec<Option<usize>> = self
            .positions
            .par_chunks_mut(CHUNK)
            .zip(self.local_times.par_chunks_mut(CHUNK))
            .zip(self.clocks.par_chunks(CHUNK))
            .zip(self.alive.par_chunks_mut(CHUNK))
            .zip(self.kill_times.par_chunks_mut(CHUNK))
            .zip(self.normal_cache.par_chunks_mut(CHUNK))
            .enumerate()
            .map(|(chunk_idx, (((((xs, ls), chis), alive), taus), cache))| {
                let base = chunk_idx * CHUNK;
                let mut first_bad = None;
                for j in 0..xs.len() {
                    if !alive[j] {
                        continue;
                    }
                    let i = base + j;
                    let x = xs[j];
                    let mu = match mu_measure {
                        Some(m) => m,
                        None => coeffs.mu(t, x),
                    };
                    let sigma = coeffs.sigma(t, x);
                    let dwi = if even_step {
                        let (z0, z1) = rng::standard_normal_pair(
                            seed,
                            stream::IDIOSYNCRATIC,
                            i as u64,
                            k / 2,
                        );
                        cache[j] = S::of(z1);
                        S::of(z0)
                    } else {
                        cache[j]
                    };
                    let y = x + mu * dt + sigma * (rho_dw0 + idio_scale * dwi);
                    if !y.is_finite() {
                        first_bad = first_bad.or(Some(i));
                        continue;
                    }
                    let dl = (-y).max(S::zero());
                    if ls[j] + dl > chis[j] {
                        alive[j] = false;
                        taus[j] = t_next;
                        xs[j] = S::zero();
                        ls[j] = chis[j];
                    } else {
                        xs[j] = y.max(S::zero());
                        ls[j] += dl;
                    }
                }
                first_bad
            })
            .collect();
        if let Some(i) = errors.into_iter().flatten().min() {
            return Err(SimError::NonFinitePosition {
                particle: i,
                time: t_next.to_f64_(),
            });
        }
        self.alive_count = self
            .alive
            .chunks(CHUNK)
            .map(|c| c.iter().filter(|&&a| a).count())
            .sum();
        self.step_index += 1;
        Ok(())
    }
}

/// Full simulation output.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub snapshot_indices: Vec<usize>,
    pub snapshot_times: Vec<S>,
    pub measures: Vec<EmpiricalMeasure<S>>,
    /// `(t, loss)` at every grid time.
    pub loss_series: Vec<(S, S)>,
    /// `kappa * mean stopped local time` minus loss, at every grid time.
    pub j_series: Vec<S>,
    pub kill_times: Vec<S>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn final_loss(&self) -> S {
        self.loss_series.last().expect("nonempty").1
    }

    pub fn j_sup_norm(&self) -> S {
        self.j_series
            .iter()
            .fold(S::zero(), |acc, &j| acc.max(j.abs()))
    }
}

/// Run the system over a noise path, snapshotting at the given step indices.
pub fn simulate<S: Scalar>(
    coeffs: &CoefficientSet<S>,
    initial: &InitialLaw<S>,
    drift: Option<MeasureDrift<S>>,
    n: usize,
    noise: &NoisePath<S>,
    particle_seed: u64,
    snapshot_indices: &[usize],
) -> Result<Trajectory<S>, SimError> {
    let mut sys = ParticleSystem::new(coeffs, initial, drift, n, noise.dt(), particle_seed);
    let kappa = coeffs.boundary.kappa();
    let steps = noise.steps();

    let mut traj = Trajectory {
        snapshot_indices: snapshot_indices.to_vec(),
        snapshot_times: Vec::new(),
        measures: Vec::new(),
        loss_series: Vec::with_capacity(steps + 1),
        j_series: Vec::with_capacity(steps + 1),
        kill_times: Vec::new(),
    };
    let record = |sys: &ParticleSystem<S>, traj: &mut Trajectory<S>| {
        let loss = sys.loss();
        traj.loss_series.push((sys.time(), loss));
        let j = match kappa {
            Some(k) => k * sys.mean_stopped_local_time() - loss,
            None => S::zero(),
        };
        traj.j_series.push(j);
    };
    record(&sys, &mut traj);
    if snapshot_indices.contains(&0) {
        traj.snapshot_times.push(S::zero());
        traj.measures.push(sys.measure());
    }
    for k in 0..steps {
        sys.step(noise.increments()[k])?;
        record(&sys, &mut traj);
        if snapshot_indices.contains(&(k + 1)) {
            traj.snapshot_times.push(sys.time());
            traj.measures.push(sys.measure());
        }
    }
    traj.kill_times = sys.kill_times().to_vec();
    Ok(traj)
}

/// Monte Carlo estimate of the two-particle boundary event
/// `P(0 < |X0 + W^1_t| < eps, 0 < |Y0 + W^2_t| < eps)` for correlated
/// Brownian pairs with initial draws from `initial`. Returns the estimate
/// and its standard error.
pub fn pair_boundary_probability<S: Scalar>(
    initial: &InitialLaw<S>,
    rho: S,
    t: S,
    eps: S,
    samples: u64,
    seed: u64,
) -> (S, S) {
    let sqrt_t = t.sqrt();
    let cross = (S::one() - rho * rho).sqrt();
    let hits: u64 = (0..samples as usize)
        .into_par_iter()
        .chunks(1 << 16)
        .map(|chunk| {
            let mut count = 0u64;
            for j in chunk {
                let j = j as u64;
                let x0 = initial.sample(seed, 2 * j);
                let y0 = initial.sample(seed, 2 * j + 1);
                let z1 = S::of(rng::standard_normal(seed, stream::PAIR_MC, j, 0));
                let z2 = S::of(rng::standard_normal(seed, stream::PAIR_MC, j, 1));
                let w1 = sqrt_t * z1;
                let w2 = sqrt_t * (rho * z1 + cross * z2);
                let a = (x0 + w1).abs();
                let b = (y0 + w2).abs();
                if a > S::zero() && a < eps && b > S::zero() && b < eps {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let p = S::of(hits as f64) / S::of(samples as f64);
    let se = (p * (S::one() - p) / S::of(samples as f64)).sqrt();
    (p, se)
}
