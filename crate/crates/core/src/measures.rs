//! Empirical measures and their analytics: interval masses, pairings, the
//! bounded-Lipschitz metric, an H^{-1}-style discrepancy proxy, density
//! estimates, and the martingale components of the evolution equation.

use thiserror::Error;

use crate::coefficients::{Boundary, CoefficientSet};
use crate::grid::GridFunction;
use crate::kernels::{self, KernelParams};
use crate::noise::NoisePath;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("test function returned a non-finite value at atom {0}")]
    NonFiniteTestValue(f64),
    #[error("test function violates the boundary condition: |phi'(0) - kappa phi(0)| = {0:e}")]
    BoundaryCondition(f64),
    #[error("martingale components need an elastic or reflecting rate, not the absorbing limit")]
    AbsorbingBoundary,
    #[error("trajectory has {got} snapshots but the noise grid has {want} steps")]
    GridMismatch { got: usize, want: usize },
    #[error("interval bounds must satisfy a < b")]
    BadInterval,
}

/// Atoms of mass `1/N` at the surviving particle positions.
///
/// `atom_weight` uses the original particle count, so `total_mass <= 1` and
/// the deficit is exactly the loss process.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<S> {
    atoms: Vec<S>,
    n_original: usize,
}

impl<S: Scalar> EmpiricalMeasure<S> {
    pub fn new(mut atoms: Vec<S>, n_original: usize) -> Self {
        assert!(n_original >= 1, "empirical measure needs N >= 1");
        assert!(
            atoms.len() <= n_original,
            "more atoms than original particles"
        );
        atoms.sort_by(|a, b| a.partial_cmp(b).expect("atom positions are finite"));
        Self { atoms, n_original }
    }

    pub fn atoms(&self) -> &[S] {
        &self.atoms
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn atom_weight(&self) -> S {
        S::of(self.n_original as f64).recip()
    }

    pub fn total_mass(&self) -> S {
        S::of(self.atoms.len() as f64) / S::of(self.n_original as f64)
    }

    /// Mass of the open interval `(a, b)`, by binary search.
    pub fn interval_mass(&self, a: S, b: S) -> Result<S, MeasureError> {
        if !(a < b) {
            return Err(MeasureError::BadInterval);
        }
        let lo = self.atoms.partition_point(|&x| x <= a);
        let hi = self.atoms.partition_point(|&x| x < b);
        Ok(S::of((hi - lo) as f64) * self.atom_weight())
    }

    /// Pairing with a test function.
    pub fn pair(&self, phi: impl Fn(S) -> S) -> Result<S, MeasureError> {
        let mut acc = S::zero();
        for &x in &self.atoms {
            let v = phi(x);
            if !v.is_finite() {
                return Err(MeasureError::NonFiniteTestValue(x.to_f64_()));
            }
            acc += v;
        }
        Ok(acc * self.atom_weight())
    }
}

/// Bounded-Lipschitz distance estimate with its approximation guarantee:
/// `value <= d_0 <= value + error_bound`.
#[derive(Debug, Clone, Copy)]
pub struct BlDistance<S> {
    pub value: S,
    pub error_bound: S,
}

/// Bounded-Lipschitz distance by an exact dual solve on a grid.
///
/// Maximises `<psi, m1 - m2>` over grid-piecewise-linear `psi` with
/// `|psi| <= 1` and slope at most 1. Vertices of that polytope take values
/// on the lattice `-1 + k*h`, so a dynamic program over lattice levels is
/// exact; `h` is snapped so that `2/h` is an integer.
pub fn bounded_lipschitz_distance<S: Scalar>(
    m1: &EmpiricalMeasure<S>,
    m2: &EmpiricalMeasure<S>,
    h_request: S,
    x_max: S,
) -> BlDistance<S> {
    let levels = (S::of(2.0) / h_request)
        .ceil()
        .to_f64_()
        .max(2.0) as usize;
    let h = S::of(2.0) / S::of(levels as f64);
    let nodes = (x_max / h).ceil().to_f64_() as usize + 1;

    // signed masses projected onto nodes by linear interpolation; this is
    // exact for evaluating <psi, m> with piecewise-linear psi
    let mut c = vec![S::zero(); nodes + 1];
    let mut spread = |m: &EmpiricalMeasure<S>, sign: S| {
        let w = m.atom_weight() * sign;
        for &a in m.atoms() {
            let u = (a / h).min(S::of(nodes as f64));
            let i = u.floor().to_f64_() as usize;
            let frac = u - S::of(i as f64);
            c[i] += w * (S::one() - frac);
            c[i + 1] += w * frac;
        }
    };
    spread(m1, S::one());
    spread(m2, -S::one());

    let psi = |k: usize| -S::one() + h * S::of(k as f64);
    let mut next: Vec<S> = (0..=levels).map(|k| c[nodes] * psi(k)).collect();
    let mut cur = vec![S::zero(); levels + 1];
    for i in (0..nodes).rev() {
        for k in 0..=levels {
            let mut best = next[k];
            if k > 0 {
                best = best.max(next[k - 1]);
            }
            if k < levels {
                best = best.max(next[k + 1]);
            }
            cur[k] = c[i] * psi(k) + best;
        }
        std::mem::swap(&mut next, &mut cur);
    }
    let value = next
        .iter()
        .copied()
        .fold(S::zero(), S::max);
    let tv = m1.total_mass() + m2.total_mass();
    BlDistance {
        value,
        error_bound: h * tv,
    }
}

/// H^{-1}-style discrepancy proxy
/// `||d_x^{-1} T_eps (m1 - m2)||_{L2} + |int T_eps (m1 - m2)|`.
pub fn h_minus1_proxy<S: Scalar>(
    m1: &EmpiricalMeasure<S>,
    m2: &EmpiricalMeasure<S>,
    params: KernelParams<S>,
    dx: S,
    x_max: S,
) -> S {
    let t1 = kernels::mollify_atoms(m1.atoms(), m1.atom_weight(), params, dx, x_max);
    let t2 = kernels::mollify_atoms(m2.atoms(), m2.atom_weight(), params, dx, x_max);
    let diff = t1.axpy(S::one(), &t2, -S::one());
    let (anti, _) = kernels::antiderivative(&diff, S::of(1e-8));
    anti.l2_norm() + diff.integral().abs()
}

/// Test function family `phi(x) = (1 + kappa x) exp(-lambda x^2)`, which
/// satisfies the elastic boundary condition `phi'(0) = kappa phi(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction<S> {
    pub kappa: S,
    pub lambda: S,
}

impl<S: Scalar> TestFunction<S> {
    pub fn eval(&self, x: S) -> S {
        (S::one() + self.kappa * x) * (-self.lambda * x * x).exp()
    }

    pub fn d1(&self, x: S) -> S {
        let e = (-self.lambda * x * x).exp();
        e * (self.kappa - S::of(2.0) * self.lambda * x * (S::one() + self.kappa * x))
    }

    pub fn d2(&self, x: S) -> S {
        let e = (-self.lambda * x * x).exp();
        let l = self.lambda;
        let k = self.kappa;
        e * (S::of(4.0) * l * l * x * x * (S::one() + k * x)
            - S::of(6.0) * l * k * x
            - S::of(2.0) * l)
    }

    /// `(phi', phi'')` sharing a single exponential evaluation.
    #[inline]
    pub fn d1_d2(&self, x: S) -> (S, S) {
        let e = (-self.lambda * x * x).exp();
        let l = self.lambda;
        let k = self.kappa;
        let one_k = S::one() + k * x;
        (
            e * (k - S::of(2.0) * l * x * one_k),
            e * (S::of(4.0) * l * l * x * x * one_k - S::of(6.0) * l * k * x - S::of(2.0) * l),
        )
    }
}

/// Per-run martingale component series on the simulation grid.
///
/// `noise_integral` is the discrete Ito integral
/// `sum_j <nu_j, rho sigma phi'> dW0_j`; subtracting it from `m` gives the
/// residual of the evolution equation without its vanishing terms.
#[derive(Debug, Clone)]
pub struct MartingaleStats<S> {
    pub times: Vec<S>,
    pub m: Vec<S>,
    pub s: Vec<S>,
    pub c: Vec<S>,
    pub noise_integral: Vec<S>,
}

impl<S: Scalar> MartingaleStats<S> {
    /// Evolution-equation residual series `M(t) - int <nu, rho sigma phi'> dW0`.
    pub fn evolution_residual(&self) -> Vec<S> {
        self.m
            .iter()
            .zip(&self.noise_integral)
            .map(|(&m, &w)| m - w)
            .collect()
    }
}

/// Drift functional `mu(t, x, nu) = base + strength * <nu, f>` for the
/// measure-dependent dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureDrift<S> {
    pub base: S,
    pub strength: S,
    pub kernel: InteractionKernel<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionKernel<S> {
    /// `f(x) = tanh(scale * x)`
    Tanh { scale: S },
    /// `f(x) = min(x, cap)`
    ClippedLinear { cap: S },
}

impl<S: Scalar> InteractionKernel<S> {
    pub fn eval(&self, x: S) -> S {
        match self {
            InteractionKernel::Tanh { scale } => (*scale * x).tanh(),
            InteractionKernel::ClippedLinear { cap } => x.min(*cap),
        }
    }

    pub fn sup_norm(&self) -> S {
        match self {
            InteractionKernel::Tanh { .. } => S::one(),
            InteractionKernel::ClippedLinear { cap } => *cap,
        }
    }

    pub fn lipschitz(&self) -> S {
        match self {
            InteractionKernel::Tanh { scale } => scale.abs(),
            InteractionKernel::ClippedLinear { .. } => S::one(),
        }
    }
}

impl<S: Scalar> MeasureDrift<S> {
    pub fn eval(&self, measure_pairing: S) -> S {
        self.base + self.strength * measure_pairing
    }

    pub fn pairing(&self, m: &EmpiricalMeasure<S>) -> S {
        m.pair(|x| self.kernel.eval(x))
            .expect("interaction kernels are bounded")
    }

    /// Lipschitz constant of `nu -> mu(t, x, nu)` in the bounded-Lipschitz
    /// metric: `|strength| * max(sup |f|, Lip(f))`.
    pub fn lipschitz_constant(&self) -> S {
        self.strength.abs() * self.kernel.sup_norm().max(self.kernel.lipschitz())
    }
}

struct PhiAccumulator<S> {
    phi: TestFunction<S>,
    phi0: S,
    drift_int: S,
    quad_var_int: S,
    cross_int: S,
    noise_int: S,
    out: MartingaleStats<S>,
}

/// Streaming martingale components for several test functions at once
/// (left-endpoint Riemann sums on the simulation grid).
///
/// The iterator must yield the snapshot at every grid time, `steps + 1` in
/// total. `drift` overrides the coefficient drift with a measure functional
/// when the trajectory came from the interacting dynamics.
pub fn martingale_components_streaming<S: Scalar>(
    measures: impl IntoIterator<Item = EmpiricalMeasure<S>>,
    noise: &NoisePath<S>,
    coeffs: &CoefficientSet<S>,
    drift: Option<&MeasureDrift<S>>,
    phis: &[TestFunction<S>],
) -> Result<Vec<MartingaleStats<S>>, MeasureError> {
    let kappa = match coeffs.boundary {
        Boundary::Absorbing => return Err(MeasureError::AbsorbingBoundary),
        b => b.kappa().expect("elastic or reflecting"),
    };
    for phi in phis {
        let bc = (phi.d1(S::zero()) - kappa * phi.eval(S::zero())).abs();
        if bc > S::of(1e-8) {
            return Err(MeasureError::BoundaryCondition(bc.to_f64_()));
        }
    }
    let steps = noise.steps();
    let dt = noise.dt();
    let mut iter = measures.into_iter();
    let mismatch = |got| MeasureError::GridMismatch {
        got,
        want: steps + 1,
    };
    let mut nu = iter.next().ok_or(mismatch(0))?;

    let mut accs: Vec<PhiAccumulator<S>> = Vec::with_capacity(phis.len());
    for phi in phis {
        let mut out = MartingaleStats {
            times: Vec::with_capacity(steps + 1),
            m: Vec::with_capacity(steps + 1),
            s: Vec::with_capacity(steps + 1),
            c: Vec::with_capacity(steps + 1),
            noise_integral: Vec::with_capacity(steps + 1),
        };
        out.times.push(S::zero());
        out.m.push(S::zero());
        out.s.push(S::zero());
        out.c.push(S::zero());
        out.noise_integral.push(S::zero());
        accs.push(PhiAccumulator {
            phi: *phi,
            phi0: nu.pair(|x| phi.eval(x))?,
            drift_int: S::zero(),
            quad_var_int: S::zero(),
            cross_int: S::zero(),
            noise_int: S::zero(),
            out,
        });
    }

    let mut w = S::zero();
    for k in 0..steps {
        let t = noise.time(k);
        let dw = noise.increments()[k];
        let mu_measure = drift.map(|d| d.eval(d.pairing(&nu)));
        let rho = coeffs.rho(t);
        for acc in &mut accs {
            let phi = acc.phi;
            // fused pass: one exponential per atom for all three pairings
            let mut a = S::zero();
            let mut b = S::zero();
            let mut c = S::zero();
            for &x in nu.atoms() {
                let (d1, d2) = phi.d1_d2(x);
                let mu = match mu_measure {
                    Some(m) => m,
                    None => coeffs.mu(t, x),
                };
                let sig = coeffs.sigma(t, x);
                a += mu * d1;
                b += sig * sig * d2;
                c += rho * sig * d1;
            }
            let w_atom = nu.atom_weight();
            let (a, b, c) = (a * w_atom, b * w_atom, c * w_atom);
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(MeasureError::NonFiniteTestValue(f64::NAN));
            }
            acc.drift_int += (a + S::of(0.5) * b) * dt;
            acc.quad_var_int += c * c * dt;
            acc.cross_int += c * dt;
            acc.noise_int += c * dw;
        }
        w += dw;
        nu = iter.next().ok_or(mismatch(k + 1))?;
        let t_next = noise.time(k + 1);
        for acc in &mut accs {
            let phi = acc.phi;
            let m = nu.pair(|x| phi.eval(x))? - acc.phi0 - acc.drift_int;
            acc.out.times.push(t_next);
            acc.out.m.push(m);
            acc.out.s.push(m * m - acc.quad_var_int);
            acc.out.c.push(m * w - acc.cross_int);
            acc.out.noise_integral.push(acc.noise_int);
        }
    }
    if iter.next().is_some() {
        return Err(mismatch(steps + 2));
    }
    Ok(accs.into_iter().map(|a| a.out).collect())
}

/// Martingale components of a stored trajectory for one test function.
pub fn martingale_components<S: Scalar>(
    trajectory: &[EmpiricalMeasure<S>],
    noise: &NoisePath<S>,
    coeffs: &CoefficientSet<S>,
    drift: Option<&MeasureDrift<S>>,
    phi: &TestFunction<S>,
) -> Result<MartingaleStats<S>, MeasureError> {
    martingale_components_streaming(trajectory.iter().cloned(), noise, coeffs, drift, &[*phi])
        .map(|mut v| v.pop().expect("one test function in, one series out"))
}

/// Density estimation method.
#[derive(Debug, Clone, Copy)]
pub enum DensityMethod<S> {
    Histogram { bin: S },
    Mollified(KernelParams<S>),
}

/// Density estimate together with the mass unaccounted for by the grid
/// (atoms falling outside, or elastic-kernel mass loss).
#[derive(Debug, Clone)]
pub struct DensityEstimate<S> {
    pub grid: GridFunction<S>,
    pub deficit: S,
}

/// Histogram values live at the left edge of each bin; the final node is a
/// zero pad so the rectangle sum `sum_j v_j * bin` equals the binned mass.
pub fn density_estimate<S: Scalar>(
    m: &EmpiricalMeasure<S>,
    method: DensityMethod<S>,
    x_max: S,
) -> DensityEstimate<S> {
    match method {
        DensityMethod::Histogram { bin } => {
            let nbins = (x_max / bin).ceil().to_f64_() as usize;
            let mut values = vec![S::zero(); nbins + 1];
            let mut outside = 0usize;
            for &a in m.atoms() {
                let j = (a / bin).floor().to_f64_() as usize;
                if j < nbins {
                    values[j] += S::one();
                } else {
                    outside += 1;
                }
            }
            let scale = m.atom_weight() / bin;
            for v in &mut values {
                *v *= scale;
            }
            DensityEstimate {
                grid: GridFunction::new(bin, values).expect("finite histogram"),
                deficit: S::of(outside as f64) * m.atom_weight(),
            }
        }
        DensityMethod::Mollified(params) => {
            let dx = (params.epsilon.sqrt() * S::of(0.1)).min(x_max * S::of(0.01));
            let grid = kernels::mollify_atoms(m.atoms(), m.atom_weight(), params, dx, x_max);
            let deficit = m.total_mass() - grid.integral();
            DensityEstimate { grid, deficit }
        }
    }
}

/// Histogram bin masses (not densities) on `[0, nbins*bin)`.
pub fn histogram_masses<S: Scalar>(m: &EmpiricalMeasure<S>, bin: S, nbins: usize) -> Vec<S> {
    let mut masses = vec![S::zero(); nbins];
    for &a in m.atoms() {
        let j = (a / bin).floor().to_f64_() as usize;
        if j < nbins {
            masses[j] += S::one();
        }
    }
    for v in &mut masses {
        *v *= m.atom_weight();
    }
    masses
}

/// Running mean / standard-error accumulator (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefFn;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn meas(atoms: &[f64], n: usize) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure::new(atoms.to_vec(), n)
    }

    #[test]
    fn interval_mass_counts_strict_interior() {
        let m = meas(&[0.5, 1.5, 2.5], 3);
        assert_relative_eq!(m.interval_mass(1.0, 3.0).unwrap(), 2.0 / 3.0);
        assert_eq!(m.interval_mass(5.0, 6.0).unwrap(), 0.0);
        assert!(m.interval_mass(2.0, 1.0).is_err());
        // endpoints excluded
        assert_eq!(m.interval_mass(0.5, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn interval_mass_matches_linear_scan() {
        let mut state = 1u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let atoms: Vec<f64> = (0..500).map(|_| next() * 10.0).collect();
        let m = EmpiricalMeasure::new(atoms.clone(), 500);
        for _ in 0..1000 {
            let a = next() * 10.0;
            let b = a + next() * 3.0 + 1e-9;
            let brute =
                atoms.iter().filter(|&&x| x > a && x < b).count() as f64 / 500.0;
            assert_relative_eq!(m.interval_mass(a, b).unwrap(), brute);
        }
    }

    #[test]
    fn pairing_examples() {
        let single = meas(&[2.0], 1);
        assert_relative_eq!(single.pair(|x| x.sin()).unwrap(), 2.0f64.sin());
        let m = meas(&[1.0, 2.0], 2);
        assert_relative_eq!(m.pair(|_| 1.0).unwrap(), m.total_mass());
        assert_relative_eq!(m.pair(|x| x * x).unwrap(), 2.5);
        assert!(m.pair(|x| (x - 1.0).ln()).is_err());
    }

    #[test]
    fn bl_distance_atom_pairs() {
        let d = |x: f64, y: f64| {
            bounded_lipschitz_distance(&meas(&[x], 1), &meas(&[y], 1), 0.005, 12.0)
        };
        let same = d(1.0, 1.0);
        assert_eq!(same.value, 0.0);
        let unit = d(0.0, 1.0);
        assert_relative_eq!(unit.value, 1.0, epsilon = 1e-12);
        let capped = d(0.0, 5.0);
        assert_relative_eq!(capped.value, 2.0, epsilon = 1e-12);
        // brute-force confirmation of min(2, |x-y|) on a few off-grid pairs
        for (x, y) in [(0.31, 0.93), (0.2, 4.9), (2.0, 2.00049)] {
            let got = d(x, y).value;
            let want = (x - y).abs().min(2.0);
            assert!((got - want).abs() <= 0.011, "d({x},{y}) = {got}, want {want}");
        }
    }

    #[test]
    fn bl_distance_symmetry_and_bounds() {
        let m1 = meas(&[0.2, 0.7, 3.1], 4);
        let m2 = meas(&[0.5, 2.0], 4);
        let a = bounded_lipschitz_distance(&m1, &m2, 0.01, 8.0);
        let b = bounded_lipschitz_distance(&m2, &m1, 0.01, 8.0);
        assert_eq!(a.value, b.value);
        assert!(a.value <= 2.0 + 1e-12);
        // mass-difference lower bound: psi = 1 is admissible
        assert!(a.value >= (m1.total_mass() - m2.total_mass()).abs() - 1e-12);
    }

    proptest! {
        #[test]
        fn bl_distance_triangle_inequality_within_slack(
            xs in prop::collection::vec(0.0f64..6.0, 1..8),
            ys in prop::collection::vec(0.0f64..6.0, 1..8),
            zs in prop::collection::vec(0.0f64..6.0, 1..8),
        ) {
            let n = xs.len().max(ys.len()).max(zs.len());
            let h = 0.01;
            let m1 = EmpiricalMeasure::new(xs, n);
            let m2 = EmpiricalMeasure::new(ys, n);
            let m3 = EmpiricalMeasure::new(zs, n);
            let d12 = bounded_lipschitz_distance(&m1, &m2, h, 8.0).value;
            let d23 = bounded_lipschitz_distance(&m2, &m3, h, 8.0).value;
            let d13 = bounded_lipschitz_distance(&m1, &m3, h, 8.0).value;
            // true d0 satisfies the triangle inequality; grid values sit within
            // h * TV of it, so allow twice that slack
            prop_assert!(d13 <= d12 + d23 + 2.0 * h * 2.0 + 1e-12);
        }

        #[test]
        fn pair_is_linear_and_monotone(
            xs in prop::collection::vec(0.0f64..5.0, 1..40),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let n = xs.len();
            let m = EmpiricalMeasure::new(xs, n);
            let f = |x: f64| (x * 0.7).sin();
            let g = |x: f64| (-x).exp();
            let lhs = m.pair(|x| a * f(x) + b * g(x)).unwrap();
            let rhs = a * m.pair(f).unwrap() + b * m.pair(g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!(m.pair(g).unwrap() >= 0.0);
        }
    }

    #[test]
    fn h_minus1_proxy_basic_properties() {
        let params = KernelParams::new(0.05, 1.0).unwrap();
        let m1 = meas(&[0.5, 1.0, 1.5], 3);
        let m2 = meas(&[0.6, 1.1, 1.4], 3);
        assert_eq!(h_minus1_proxy(&m1, &m1, params, 0.01, 6.0), 0.0);
        let p12 = h_minus1_proxy(&m1, &m2, params, 0.01, 6.0);
        let p21 = h_minus1_proxy(&m2, &m1, params, 0.01, 6.0);
        assert!(p12 > 0.0);
        assert_relative_eq!(p12, p21, max_relative = 1e-12);
    }

    #[test]
    fn h_minus1_proxy_separates_shifted_samples() {
        // two samples of one law vs samples of laws shifted by 0.5
        let n = 10_000;
        let draw = |seed: u64, shift: f64| -> EmpiricalMeasure<f64> {
            let atoms = (0..n)
                .map(|i| {
                    1.0 + shift
                        + 0.2 * crate::rng::standard_normal(seed, crate::rng::stream::MEASURE_PROBE, i, 0)
                })
                .map(|x: f64| x.max(1e-3))
                .collect();
            EmpiricalMeasure::new(atoms, n as usize)
        };
        let params = KernelParams::new(0.05, 1.0).unwrap();
        let same = h_minus1_proxy(&draw(1, 0.0), &draw(2, 0.0), params, 0.01, 6.0);
        let apart = h_minus1_proxy(&draw(3, 0.0), &draw(4, 0.5), params, 0.01, 6.0);
        assert!(
            apart > 3.0 * same,
            "shifted laws not separated: same={same}, apart={apart}"
        );
    }

    #[test]
    fn test_function_family_satisfies_robin_condition() {
        for (kappa, lambda) in [(0.0, 1.0), (1.0, 0.5), (2.5, 2.0)] {
            let phi = TestFunction { kappa, lambda };
            assert_relative_eq!(phi.d1(0.0), kappa * phi.eval(0.0), epsilon = 1e-14);
            // finite-difference cross-check of the closed-form derivatives
            let h = 1e-6;
            for &x in &[0.3, 1.1, 2.7] {
                let fd1 = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
                assert_relative_eq!(phi.d1(x), fd1, max_relative = 1e-7);
                let fd2 = (phi.eval(x + h) - 2.0 * phi.eval(x) + phi.eval(x - h)) / (h * h);
                assert_relative_eq!(phi.d2(x), fd2, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn static_particles_have_zero_martingale_part() {
        // sigma = 0, mu = 0, kappa = 0: M is identically zero
        let coeffs = CoefficientSet::<f64> {
            mu: CoefFn::Constant(0.0),
            sigma: CoefFn::Constant(0.0),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Reflecting,
            bound_c: 2.0,
        };
        let noise: NoisePath<f64> = NoisePath::generate(3, 0.01, 20);
        let snap = meas(&[0.5, 1.0, 2.0], 3);
        let traj: Vec<_> = (0..=20).map(|_| snap.clone()).collect();
        let phi = TestFunction { kappa: 0.0, lambda: 1.0 };
        let stats = martingale_components(&traj, &noise, &coeffs, None, &phi).unwrap();
        assert!(stats.m.iter().all(|&v| v == 0.0));
        assert!(stats.s.iter().all(|&v| v == 0.0));
        assert!(stats.c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn martingale_components_reject_wrong_boundary_condition() {
        let coeffs = CoefficientSet::<f64> {
            mu: CoefFn::Constant(0.0),
            sigma: CoefFn::Constant(1.0),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Elastic(1.0),
            bound_c: 2.0,
        };
        let noise: NoisePath<f64> = NoisePath::generate(3, 0.01, 5);
        let traj: Vec<_> = (0..=5).map(|_| meas(&[1.0], 1)).collect();
        let phi = TestFunction { kappa: 0.0, lambda: 1.0 };
        let err = martingale_components(&traj, &noise, &coeffs, None, &phi).unwrap_err();
        assert!(matches!(err, MeasureError::BoundaryCondition(_)));
    }

    #[test]
    fn histogram_density_integrates_to_total_mass() {
        let m = meas(&[0.1, 0.2, 0.7, 1.4, 3.9], 10);
        let est = density_estimate(&m, DensityMethod::Histogram { bin: 0.5 }, 4.0);
        let mass: f64 = est
            .grid
            .values()
            .iter()
            .map(|v| v * 0.5)
            .sum();
        assert_relative_eq!(mass + est.deficit, m.total_mass(), epsilon = 1e-12);
        assert_eq!(est.deficit, 0.0);
    }

    #[test]
    fn mollified_density_of_single_atom_is_kernel_row() {
        let m = meas(&[1.0], 1);
        let params = KernelParams::new(0.1, 0.0).unwrap();
        let est = density_estimate(&m, DensityMethod::Mollified(params), 5.0);
        for j in 0..est.grid.len() {
            assert_relative_eq!(
                est.grid.values()[j],
                kernels::reflecting_kernel(0.1, est.grid.x(j), 1.0),
                max_relative = 1e-12
            );
        }
        // reflecting kernel conserves mass on a generous grid
        assert!(est.deficit.abs() < 1e-6);
    }

    #[test]
    fn empty_measure_density_is_zero() {
        let m = EmpiricalMeasure::<f64>::new(vec![], 5);
        let est = density_estimate(&m, DensityMethod::Histogram { bin: 0.25 }, 2.0);
        assert!(est.grid.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_histogram_bins_are_flat() {
        // inverse-CDF uniform atoms: max deviation from density 1 below binomial noise
        let n = 1_000_000usize;
        let atoms: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let m = EmpiricalMeasure::new(atoms, n);
        let est = density_estimate(&m, DensityMethod::Histogram { bin: 0.01 }, 1.0);
        let worst = est.grid.values()[..100]
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "max bin deviation {worst}");
    }

    #[test]
    fn running_stats_against_closed_form() {
        let mut s = RunningStats::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.push(x);
        }
        assert_relative_eq!(s.mean(), 2.5);
        assert_relative_eq!(s.variance(), 5.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(s.std_error(), (5.0 / 12.0f64).sqrt(), max_relative = 1e-14);
    }
}
