//! Model coefficients, standing-assumption validation, and the scale
//! transform / transformed drift used by the analytic baselines.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, Expr};
use crate::grid::GridFunction;
use crate::quad::{self, QuadError};
use crate::rng::{self, stream};
use crate::scalar::Scalar;
use crate::special::normal_cdf;

#[derive(Debug, Error)]
pub enum CoefficientError {
    #[error("coefficient expression: {0}")]
    Parse(#[from] expr::ParseError),
    #[error("named coefficient '{0}' expects {1} parameters")]
    BadArity(String, usize),
    #[error("unknown coefficient form '{0}'")]
    UnknownForm(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("initial law has no grid density (point mass)")]
    NoDensity,
    #[error("invalid initial law: {0}")]
    BadInitialLaw(String),
}

/// Coefficient of `(t, x)`; the common cases carry fast closed forms, the
/// general case is an expression tree.
#[derive(Debug, Clone)]
pub enum CoefFn<S> {
    Constant(S),
    /// `a + bt * t + cx * x`
    Affine { a: S, bt: S, cx: S },
    /// `base + amp * tanh(rate * x)`
    TanhRamp { base: S, amp: S, rate: S },
    Expr(Arc<Expr>),
}

impl<S: Scalar> CoefFn<S> {
    #[inline]
    pub fn eval(&self, t: S, x: S) -> S {
        match self {
            CoefFn::Constant(c) => *c,
            CoefFn::Affine { a, bt, cx } => *a + *bt * t + *cx * x,
            CoefFn::TanhRamp { base, amp, rate } => *base + *amp * (*rate * x).tanh(),
            CoefFn::Expr(e) => e.eval(t, x),
        }
    }

    /// Parse a config-file declaration: either a named built-in
    /// (`constant(c)`, `affine(a, bt, cx)`, `tanh-ramp(base, amp, rate)`)
    /// or a free-form expression in `t` and `x`.
    pub fn parse(src: &str) -> Result<Self, CoefficientError> {
        let s = src.trim();
        if let Some((name, args)) = split_named(s) {
            let vals: Result<Vec<f64>, _> = args
                .split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect();
            let arity_err = |n| CoefficientError::BadArity(name.to_string(), n);
            return match name {
                "constant" => {
                    let v = vals.map_err(|_| arity_err(1))?;
                    if v.len() != 1 {
                        return Err(arity_err(1));
                    }
                    Ok(CoefFn::Constant(S::of(v[0])))
                }
                "affine" => {
                    let v = vals.map_err(|_| arity_err(3))?;
                    if v.len() != 3 {
                        return Err(arity_err(3));
                    }
                    Ok(CoefFn::Affine {
                        a: S::of(v[0]),
                        bt: S::of(v[1]),
                        cx: S::of(v[2]),
                    })
                }
                "tanh-ramp" => {
                    let v = vals.map_err(|_| arity_err(3))?;
                    if v.len() != 3 {
                        return Err(arity_err(3));
                    }
                    Ok(CoefFn::TanhRamp {
                        base: S::of(v[0]),
                        amp: S::of(v[1]),
                        rate: S::of(v[2]),
                    })
                }
                other => Err(CoefficientError::UnknownForm(other.to_string())),
            };
        }
        match expr::parse(s)? {
            Expr::Const(c) => Ok(CoefFn::Constant(S::of(c))),
            e => Ok(CoefFn::Expr(Arc::new(e))),
        }
    }
}

fn split_named(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    let name = s[..open].trim();
    if !s.ends_with(')') || !name.chars().all(|c| c.is_ascii_alphabetic() || c == '-') {
        return None;
    }
    match name {
        "constant" | "affine" | "tanh-ramp" => Some((name, &s[open + 1..s.len() - 1])),
        _ => None,
    }
}

/// Boundary behaviour at the origin. `Reflecting` and `Absorbing` are the
/// exact `kappa = 0` and `kappa -> infinity` limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary<S> {
    Elastic(S),
    Reflecting,
    Absorbing,
}

impl<S: Scalar> Boundary<S> {
    /// Elastic rate; `None` for the absorbing limit.
    pub fn kappa(&self) -> Option<S> {
        match self {
            Boundary::Elastic(k) => Some(*k),
            Boundary::Reflecting => Some(S::zero()),
            Boundary::Absorbing => None,
        }
    }
}

const FD_STEP: f64 = 1e-5;

/// Model data `(mu, sigma, rho, kappa)` with the constant of the standing
/// regularity bounds. Immutable after construction; all evaluators are pure.
#[derive(Debug, Clone)]
pub struct CoefficientSet<S> {
    pub mu: CoefFn<S>,
    pub sigma: CoefFn<S>,
    pub rho: CoefFn<S>,
    pub boundary: Boundary<S>,
    pub bound_c: S,
}

impl<S: Scalar> CoefficientSet<S> {
    #[inline]
    pub fn mu(&self, t: S, x: S) -> S {
        self.mu.eval(t, x)
    }

    #[inline]
    pub fn sigma(&self, t: S, x: S) -> S {
        self.sigma.eval(t, x)
    }

    #[inline]
    pub fn rho(&self, t: S) -> S {
        self.rho.eval(t, S::zero())
    }

    /// 5-point central difference in `x` (step 1e-5).
    fn dx5(f: impl Fn(S) -> S, x: S) -> S {
        let h = S::of(FD_STEP);
        (f(x - h - h) - S::of(8.0) * f(x - h) + S::of(8.0) * f(x + h) - f(x + h + h))
            / (S::of(12.0) * h)
    }

    fn dxx5(f: impl Fn(S) -> S, x: S) -> S {
        let h = S::of(FD_STEP);
        (-f(x + h + h) + S::of(16.0) * f(x + h) - S::of(30.0) * f(x)
            + S::of(16.0) * f(x - h)
            - f(x - h - h))
            / (S::of(12.0) * h * h)
    }

    pub fn dmu_dx(&self, t: S, x: S) -> S {
        Self::dx5(|u| self.mu(t, u), x)
    }

    pub fn dsigma_dx(&self, t: S, x: S) -> S {
        Self::dx5(|u| self.sigma(t, u), x)
    }

    pub fn dmu_dxx(&self, t: S, x: S) -> S {
        Self::dxx5(|u| self.mu(t, u), x)
    }

    pub fn dsigma_dxx(&self, t: S, x: S) -> S {
        Self::dxx5(|u| self.sigma(t, u), x)
    }

    pub fn dsigma_dt(&self, t: S, x: S) -> S {
        Self::dx5(|u| self.sigma(u, x), t)
    }

    /// Scale transform `zeta(t, x) = int_0^x dy / sigma(t, y)` (adaptive
    /// quadrature, relative tolerance 1e-10).
    pub fn scale_transform(&self, t: S, x: S) -> Result<S, CoefficientError> {
        if let CoefFn::Constant(c) = self.sigma {
            return Ok(x / c);
        }
        Ok(quad::integrate(
            |y| self.sigma(t, y).recip(),
            S::zero(),
            x,
            S::of(1e-10),
        )?)
    }

    /// Transformed drift
    /// `mu~(t,x) = (mu/sigma - d_x sigma)(t,x) - int_0^x (d_t sigma / sigma^2)(t,y) dy`.
    pub fn transformed_drift(&self, t: S, x: S) -> Result<S, CoefficientError> {
        let local = self.mu(t, x) / self.sigma(t, x) - self.dsigma_dx(t, x);
        let time_part = match self.sigma {
            // time-independent sigma: the integrand vanishes identically
            CoefFn::Constant(_) | CoefFn::TanhRamp { .. } => S::zero(),
            CoefFn::Affine { bt, .. } if bt == S::zero() => S::zero(),
            _ => quad::integrate(
                |y| {
                    let s = self.sigma(t, y);
                    self.dsigma_dt(t, y) / (s * s)
                },
                S::zero(),
                x,
                S::of(1e-10),
            )?,
        };
        Ok(local - time_part)
    }

    /// Numeric inverse of `zeta(t, .)` by bisection on `[0, hi]`.
    pub fn scale_transform_inverse(&self, t: S, z: S, hi: S) -> Result<S, CoefficientError> {
        let mut lo = S::zero();
        let mut hi = hi;
        for _ in 0..200 {
            let mid = S::of(0.5) * (lo + hi);
            if self.scale_transform(t, mid)? < z {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < S::of(1e-13) * hi.max(S::one()) {
                break;
            }
        }
        Ok(S::of(0.5) * (lo + hi))
    }

    /// Check the standing assumptions on the sampled grids.
    pub fn validate_assumptions(&self, t_grid: &[S], x_grid: &[S]) -> ValidationReport {
        let mut report = ValidationReport::default();
        let c = self.bound_c;
        let inv_c = c.recip();
        let mut mu_tilde_bound = S::zero();
        for &t in t_grid {
            let rho = self.rho(t);
            if !rho.is_finite() {
                report.push("rho_non_finite", t, S::zero(), rho);
            } else if rho < S::zero() || rho >= S::one() {
                report.push("rho_range", t, S::zero(), rho);
            }
            for &x in x_grid {
                let checks: [(&str, S); 6] = [
                    ("mu_bound", self.mu(t, x)),
                    ("mu_dx_bound", self.dmu_dx(t, x)),
                    ("mu_dxx_bound", self.dmu_dxx(t, x)),
                    ("sigma_bound", self.sigma(t, x)),
                    ("sigma_dx_bound", self.dsigma_dx(t, x)),
                    ("sigma_dxx_bound", self.dsigma_dxx(t, x)),
                ];
                for (id, v) in checks {
                    if !v.is_finite() {
                        report.push(&format!("{id}_non_finite"), t, x, v);
                    } else if v.abs() > c {
                        report.push(id, t, x, v);
                    }
                }
                let s = self.sigma(t, x);
                if s.is_finite() && s < inv_c {
                    report.push("sigma_below_inverse_bound", t, x, s);
                }
                if let Ok(mt) = self.transformed_drift(t, x) {
                    mu_tilde_bound = mu_tilde_bound.max(mt.abs());
                }
            }
        }
        // integrability of d_t sigma is only spot-checked on the sampled range
        if let (Some(&t0), Some(&xm)) = (t_grid.first(), x_grid.last()) {
            let integral = quad::integrate(
                |y| self.dsigma_dt(t0, y).abs(),
                S::zero(),
                xm,
                S::of(1e-6),
            )
            .unwrap_or(S::nan());
            report.notes.push(format!(
                "int_0^{} |d_t sigma({}, y)| dy = {:.6e} (checked on the sampled range only)",
                xm.to_f64_(),
                t0.to_f64_(),
                integral.to_f64_()
            ));
        }
        report.mu_tilde_bound = Some(mu_tilde_bound.to_f64_());
        report.violations.sort_by(|a, b| {
            (a.constraint.as_str(), a.t, a.x)
                .partial_cmp(&(b.constraint.as_str(), b.t, b.x))
                .expect("finite ordering keys")
        });
        report
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: String,
    pub t: f64,
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub mu_tilde_bound: Option<f64>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    fn push<S: Scalar>(&mut self, constraint: &str, t: S, x: S, value: S) {
        self.violations.push(Violation {
            constraint: constraint.to_string(),
            t: t.to_f64_(),
            x: x.to_f64_(),
            value: value.to_f64_(),
        });
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Initial distribution of the particle positions on `(0, infinity)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw<S> {
    /// Normal `(center, width^2)` conditioned on `x > 0`.
    GaussianBump { center: S, width: S },
    Uniform { lo: S, hi: S },
    /// Dirac mass; sampling only, no grid density.
    PointMass { at: S },
}

impl<S: Scalar> InitialLaw<S> {
    /// Draw the `i`-th particle's initial position (strictly positive).
    pub fn sample(&self, seed: u64, particle: u64) -> S {
        match self {
            InitialLaw::GaussianBump { center, width } => {
                for attempt in 0..512 {
                    let z = S::of(rng::standard_normal(seed, stream::INITIAL, particle, attempt));
                    let x = *center + *width * z;
                    if x > S::zero() {
                        return x;
                    }
                }
                // a bump this far below zero is a configuration mistake
                panic!("initial-law rejection sampling failed after 512 attempts");
            }
            InitialLaw::Uniform { lo, hi } => {
                let u = S::of(rng::uniform_co(seed, stream::INITIAL, particle, 0));
                *lo + (*hi - *lo) * u
            }
            InitialLaw::PointMass { at } => *at,
        }
    }

    /// Density at `x >= 0`, when one exists.
    pub fn density(&self, x: S) -> Option<S> {
        match self {
            InitialLaw::GaussianBump { center, width } => {
                let z = (x - *center) / *width;
                let norm = normal_cdf(*center / *width);
                let tau = S::of(std::f64::consts::TAU);
                Some((-z * z / S::of(2.0)).exp() / (*width * tau.sqrt() * norm))
            }
            InitialLaw::Uniform { lo, hi } => Some(if x >= *lo && x <= *hi {
                (*hi - *lo).recip()
            } else {
                S::zero()
            }),
            InitialLaw::PointMass { .. } => None,
        }
    }

    fn grid_density_raw(&self, dx: S, x_max: S) -> Result<GridFunction<S>, CoefficientError> {
        if matches!(self, InitialLaw::PointMass { .. }) {
            return Err(CoefficientError::NoDensity);
        }
        GridFunction::sample(dx, x_max, |x| self.density(x).expect("density exists"))
            .map_err(|e| CoefficientError::BadInitialLaw(e.to_string()))
    }

    /// Sampled density on a uniform grid, normalised to unit trapezoid mass
    /// (discontinuous laws pick up O(dx) at their jumps otherwise), or an
    /// error for point masses.
    pub fn grid_density(&self, dx: S, x_max: S) -> Result<GridFunction<S>, CoefficientError> {
        let mut g = self.grid_density_raw(dx, x_max)?;
        let mass = g.integral();
        if !(mass > S::zero()) {
            return Err(CoefficientError::BadInitialLaw(
                "density vanishes on the grid".into(),
            ));
        }
        for v in g.values_mut() {
            *v /= mass;
        }
        Ok(g)
    }

    /// Sanity checks: positive support, unit mass on the grid, and empirical
    /// super-exponential tails on the probe rates.
    pub fn validate(
        &self,
        dx: S,
        x_max: S,
        tail_alpha_probe: &[S],
        seed: u64,
    ) -> Result<(), CoefficientError> {
        match self {
            InitialLaw::GaussianBump { center, width } => {
                if !(*width > S::zero()) || !center.is_finite() {
                    return Err(CoefficientError::BadInitialLaw(
                        "bump needs finite center and positive width".into(),
                    ));
                }
            }
            InitialLaw::Uniform { lo, hi } => {
                if !(*lo >= S::zero() && hi > lo) {
                    return Err(CoefficientError::BadInitialLaw(
                        "uniform law needs 0 <= lo < hi".into(),
                    ));
                }
            }
            InitialLaw::PointMass { at } => {
                if !(*at > S::zero()) {
                    return Err(CoefficientError::BadInitialLaw(
                        "point mass must sit strictly inside (0, inf)".into(),
                    ));
                }
                return Ok(());
            }
        }
        let density = self.grid_density_raw(dx, x_max)?;
        let mass = density.integral();
        // a discontinuous density picks up O(dx) trapezoid error at jumps
        let tol = match self {
            InitialLaw::Uniform { lo, hi } => S::of(1.5) * dx / (*hi - *lo) + S::of(1e-9),
            _ => S::of(1e-6),
        };
        if (mass - S::one()).abs() > tol {
            return Err(CoefficientError::BadInitialLaw(format!(
                "grid density integrates to {} (x_max too small?)",
                mass.to_f64_()
            )));
        }
        let n = 20_000u64;
        let samples: Vec<S> = (0..n).map(|i| self.sample(seed, i)).collect();
        if samples.iter().any(|x| !(*x > S::zero())) {
            return Err(CoefficientError::BadInitialLaw(
                "sampler produced a non-positive value".into(),
            ));
        }
        // probe the asymptotic regime, the upper half of the grid
        for &alpha in tail_alpha_probe {
            for lam_i in 3..=6 {
                let lam = x_max * S::of(lam_i as f64 / 6.0);
                let frac = S::of(
                    samples.iter().filter(|&&x| x > lam).count() as f64 / n as f64,
                );
                let envelope = (-alpha * lam).exp();
                let slack = S::of(3.0) * (envelope / S::of(n as f64)).sqrt() + S::of(3e-4);
                if frac > envelope + slack {
                    return Err(CoefficientError::BadInitialLaw(format!(
                        "tail mass {} beyond lambda={} exceeds exp(-{} lambda)",
                        frac.to_f64_(),
                        lam.to_f64_(),
                        alpha.to_f64_()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant_set(mu: f64, sigma: f64, rho: f64, bound_c: f64) -> CoefficientSet<f64> {
        CoefficientSet {
            mu: CoefFn::Constant(mu),
            sigma: CoefFn::Constant(sigma),
            rho: CoefFn::Constant(rho),
            boundary: Boundary::Elastic(1.0),
            bound_c,
        }
    }

    fn grids() -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..6).map(|i| 0.2 * i as f64).collect();
        let x: Vec<f64> = (0..21).map(|i| 0.25 * i as f64).collect();
        (t, x)
    }

    #[test]
    fn constants_pass_validation() {
        let (t, x) = grids();
        let report = constant_set(0.0, 1.0, 0.5, 2.0).validate_assumptions(&t, &x);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.mu_tilde_bound.unwrap() < 1e-9);
    }

    #[test]
    fn small_sigma_is_flagged() {
        let (t, x) = grids();
        let report = constant_set(0.0, 0.01, 0.5, 2.0).validate_assumptions(&t, &x);
        assert!(report
            .violations
            .iter()
            .any(|v| v.constraint == "sigma_below_inverse_bound"));
    }

    #[test]
    fn steep_drift_is_flagged_where_it_breaks() {
        let (t, x) = grids();
        let set = CoefficientSet::<f64> {
            mu: CoefFn::parse("3*x").unwrap(),
            sigma: CoefFn::Constant(1.0),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Reflecting,
            bound_c: 2.0,
        };
        let report = set.validate_assumptions(&t, &x);
        assert!(report.violations.iter().any(|v| v.constraint == "mu_dx_bound"));
        // derivative bound is broken everywhere, value bound only for x > 2/3
        assert!(report
            .violations
            .iter()
            .any(|v| v.constraint == "mu_bound" && v.x > 0.6));
    }

    #[test]
    fn non_finite_coefficient_is_reported_not_swallowed() {
        let (t, x) = grids();
        let set = CoefficientSet::<f64> {
            mu: CoefFn::parse("1/(x - 1)").unwrap(),
            sigma: CoefFn::Constant(1.0),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Reflecting,
            bound_c: 2.0,
        };
        let report = set.validate_assumptions(&t, &x);
        assert!(report
            .violations
            .iter()
            .any(|v| v.constraint.contains("non_finite")));
    }

    #[test]
    fn validation_is_order_independent() {
        let (t, x) = grids();
        let set = constant_set(0.0, 0.01, 0.5, 2.0);
        let fwd = set.validate_assumptions(&t, &x);
        let mut t_rev = t.clone();
        let mut x_rev = x.clone();
        t_rev.reverse();
        x_rev.reverse();
        let rev = set.validate_assumptions(&t_rev, &x_rev);
        assert_eq!(fwd.violations, rev.violations);
    }

    #[test]
    fn scale_transform_closed_forms() {
        let set = constant_set(0.0, 1.0, 0.0, 2.0);
        assert_relative_eq!(set.scale_transform(0.3, 0.7).unwrap(), 0.7, max_relative = 1e-12);
        let set2 = constant_set(0.0, 2.0, 0.0, 2.0);
        assert_relative_eq!(set2.scale_transform(0.0, 1.0).unwrap(), 0.5, max_relative = 1e-12);

        // sigma(t, y) = 1 + y^2 gives arctan
        let set3 = CoefficientSet::<f64> {
            mu: CoefFn::Constant(0.0),
            sigma: CoefFn::parse("1 + x^2").unwrap(),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Reflecting,
            bound_c: 10.0,
        };
        assert_relative_eq!(
            set3.scale_transform(0.0, 1.0).unwrap(),
            std::f64::consts::FRAC_PI_4,
            max_relative = 1e-10
        );
    }

    #[test]
    fn transformed_drift_closed_forms_and_quadrature() {
        let set = constant_set(0.0, 1.0, 0.0, 2.0);
        assert_eq!(set.transformed_drift(0.5, 1.2).unwrap(), 0.0);

        let set2 = constant_set(1.0, 2.0, 0.0, 2.0);
        assert_relative_eq!(set2.transformed_drift(0.0, 3.0).unwrap(), 0.5, max_relative = 1e-12);

        // sigma = 1 + 0.1 t x, mu = 0, at t = 1, x = 1; independent oracle
        // (mpmath, 40 digits): -0.1440108889523395095
        let set3 = CoefficientSet::<f64> {
            mu: CoefFn::Constant(0.0),
            sigma: CoefFn::parse("1 + 0.1*t*x").unwrap(),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Reflecting,
            bound_c: 10.0,
        };
        assert_relative_eq!(
            set3.transformed_drift(1.0, 1.0).unwrap(),
            -0.1440108889523395095,
            max_relative = 1e-7
        );
    }

    #[test]
    fn zeta_is_monotone_lipschitz_and_invertible() {
        let set = CoefficientSet::<f64> {
            mu: CoefFn::Constant(0.0),
            sigma: CoefFn::parse("1 + 0.5*tanh(x)").unwrap(),
            rho: CoefFn::Constant(0.0),
            boundary: Boundary::Reflecting,
            bound_c: 2.0,
        };
        let t = 0.3;
        let mut prev = 0.0;
        for i in 1..30 {
            let x = 0.2 * i as f64;
            let z = set.scale_transform(t, x).unwrap();
            assert!(z > prev, "zeta not increasing at {x}");
            // Lipschitz with the bound constant
            assert!(z - prev <= 2.0 * 0.2 + 1e-9);
            let back = set.scale_transform_inverse(t, z, 10.0).unwrap();
            assert!((back - x).abs() < 1e-8, "inverse off by {}", (back - x).abs());
            prev = z;
        }
        assert_eq!(set.scale_transform(t, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn coefficient_parsing_named_and_expression() {
        assert!(matches!(
            CoefFn::<f64>::parse("constant(1.5)").unwrap(),
            CoefFn::Constant(c) if c == 1.5
        ));
        assert!(matches!(
            CoefFn::<f64>::parse("affine(0.0, 0.1, 0.2)").unwrap(),
            CoefFn::Affine { .. }
        ));
        assert!(matches!(
            CoefFn::<f64>::parse("tanh-ramp(1.0, 0.5, 2.0)").unwrap(),
            CoefFn::TanhRamp { .. }
        ));
        // plain numbers fold to the constant fast path
        assert!(matches!(
            CoefFn::<f64>::parse("0.5").unwrap(),
            CoefFn::Constant(c) if c == 0.5
        ));
        let e = CoefFn::<f64>::parse("0.1*tanh(x) + 0.2*t").unwrap();
        assert_relative_eq!(e.eval(1.0, 2.0), 0.1 * 2.0f64.tanh() + 0.2, max_relative = 1e-14);
        assert!(CoefFn::<f64>::parse("bogus(1)").is_err());
    }

    #[test]
    fn initial_laws_validate_and_sample_positively() {
        let bump = InitialLaw::GaussianBump {
            center: 1.0,
            width: 0.15,
        };
        bump.validate(0.005, 6.0, &[0.5, 1.0, 2.0], 42).unwrap();
        let uni = InitialLaw::Uniform { lo: 0.3, hi: 1.3 };
        uni.validate(0.005, 6.0, &[0.5, 1.0, 2.0], 42).unwrap();
        assert!(InitialLaw::Uniform { lo: 1.0, hi: 0.5 }
            .validate(0.005, 6.0, &[1.0], 42)
            .is_err());
        let pm = InitialLaw::PointMass { at: 1.0 };
        assert!(pm.grid_density(0.01, 4.0).is_err());
        assert_eq!(pm.sample(7, 3), 1.0);
    }

    #[test]
    fn bump_density_integrates_to_one() {
        let bump = InitialLaw::GaussianBump {
            center: 1.0,
            width: 0.2,
        };
        let g = bump.grid_density(0.002, 8.0).unwrap();
        assert_relative_eq!(g.integral(), 1.0, epsilon = 1e-9);
    }
}
