//! Typed experiment configuration (TOML, sections per module, unknown keys
//! rejected).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{Boundary, CoefFn, CoefficientSet, InitialLaw};
use crate::grid::GridFunction;
use crate::measures::{InteractionKernel, MeasureDrift};
use crate::Real;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error("coefficient declaration: {0}")]
    Coefficient(#[from] crate::coefficients::CoefficientError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn default_bound_c() -> Real {
    2.0
}
fn default_one() -> Real {
    1.0
}
fn default_mu() -> String {
    "constant(0)".into()
}
fn default_sigma() -> String {
    "constant(1)".into()
}
fn default_rho() -> String {
    "constant(0.5)".into()
}
fn default_boundary() -> String {
    "elastic(1.0)".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSection {
    #[serde(default = "default_mu")]
    pub mu: String,
    #[serde(default = "default_sigma")]
    pub sigma: String,
    #[serde(default = "default_rho")]
    pub rho: String,
    /// `elastic(k)`, `reflecting`, or `absorbing`.
    #[serde(default = "default_boundary")]
    pub boundary: String,
    #[serde(default = "default_bound_c")]
    pub bound_c: Real,
}

impl Default for CoefficientsSection {
    fn default() -> Self {
        Self {
            mu: default_mu(),
            sigma: default_sigma(),
            rho: default_rho(),
            boundary: default_boundary(),
            bound_c: default_bound_c(),
        }
    }
}

fn default_center() -> Real {
    1.0
}
fn default_width() -> Real {
    0.15
}
fn default_tail_probe() -> Vec<Real> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// `gaussian-bump` or `uniform`.
    #[serde(default = "default_initial_kind")]
    pub kind: String,
    #[serde(default = "default_center")]
    pub center: Real,
    #[serde(default = "default_width")]
    pub width: Real,
    #[serde(default)]
    pub lo: Real,
    #[serde(default = "default_one")]
    pub hi: Real,
    #[serde(default = "default_tail_probe")]
    pub tail_alpha_probe: Vec<Real>,
}

fn default_initial_kind() -> String {
    "gaussian-bump".into()
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: default_initial_kind(),
            center: default_center(),
            width: default_width(),
            lo: 0.0,
            hi: 1.0,
            tail_alpha_probe: default_tail_probe(),
        }
    }
}

fn default_n() -> usize {
    100_000
}
fn default_dt() -> Real {
    2e-4
}
fn default_t_end() -> Real {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: Real,
    #[serde(default = "default_t_end")]
    pub t_end: Real,
}

impl Default for ParticlesSection {
    fn default() -> Self {
        Self {
            n: default_n(),
            dt: default_dt(),
            t_end: default_t_end(),
        }
    }
}

fn default_dx() -> Real {
    0.0125
}
fn default_refine() -> u32 {
    2
}
fn default_guard() -> f64 {
    512.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_dx")]
    pub dx: Real,
    /// Zero means: derive from the initial support and `6 max(sigma) sqrt(T)`.
    #[serde(default)]
    pub x_max: Real,
    /// Solver step = particle step / 2^refine (Brownian-bridge refinement).
    #[serde(default = "default_refine")]
    pub refine: u32,
    #[serde(default = "default_guard")]
    pub stability_guard: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dx: default_dx(),
            x_max: 0.0,
            refine: default_refine(),
            stability_guard: default_guard(),
        }
    }
}

fn default_replications() -> usize {
    64
}
fn default_eps_ladder() -> Vec<Real> {
    vec![0.1, 0.05, 0.02, 0.01]
}
fn default_kappa_ladder() -> Vec<Real> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0]
}
fn default_n_ladder() -> Vec<usize> {
    vec![2500, 10_000, 40_000]
}
fn default_bin_width() -> Real {
    0.05
}
fn default_lambdas() -> Vec<Real> {
    vec![0.5, 1.0, 2.0]
}
fn default_martingale_runs() -> usize {
    200
}
fn default_boundary_eps() -> Vec<Real> {
    vec![0.02, 0.035, 0.06, 0.1, 0.17, 0.3]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_eps_ladder")]
    pub eps_ladder: Vec<Real>,
    #[serde(default = "default_kappa_ladder")]
    pub kappa_ladder: Vec<Real>,
    #[serde(default = "default_n_ladder")]
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_bin_width")]
    pub bin_width: Real,
    #[serde(default = "default_lambdas")]
    pub lambda_values: Vec<Real>,
    #[serde(default = "default_martingale_runs")]
    pub martingale_runs: usize,
    /// Interval-end ladder for the boundary-decay regression.
    #[serde(default = "default_boundary_eps")]
    pub boundary_eps: Vec<Real>,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            replications: default_replications(),
            eps_ladder: default_eps_ladder(),
            kappa_ladder: default_kappa_ladder(),
            n_ladder: default_n_ladder(),
            bin_width: default_bin_width(),
            lambda_values: default_lambdas(),
            martingale_runs: default_martingale_runs(),
            boundary_eps: default_boundary_eps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSection {
    #[serde(default)]
    pub base: Real,
    #[serde(default)]
    pub strength: Real,
    /// `tanh` or `clipped-linear`.
    #[serde(default = "default_interaction_kernel")]
    pub kernel: String,
    #[serde(default = "default_one")]
    pub scale: Real,
    /// Declared Lipschitz constant to probe against; zero means derive it.
    #[serde(default)]
    pub lipschitz: Real,
}

fn default_interaction_kernel() -> String {
    "tanh".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coefficients: CoefficientsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub particles: ParticlesSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub suite: SuiteSection,
    #[serde(default)]
    pub interaction: Option<InteractionSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Canonical serialized form (the manifest echo; round-trips losslessly).
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.particles;
        if p.n == 0 || !(p.dt > 0.0) || !(p.t_end > 0.0) {
            return Err(ConfigError::Invalid(
                "particles section needs n >= 1, dt > 0, t_end > 0".into(),
            ));
        }
        let ratio = p.t_end / p.dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "t_end/dt = {ratio} is not integral"
            )));
        }
        if !(self.solver.dx > 0.0) {
            return Err(ConfigError::Invalid("solver dx must be positive".into()));
        }
        match self.initial.kind.as_str() {
            "gaussian-bump" | "uniform" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown initial law '{other}'"
                )))
            }
        }
        self.boundary()?;
        self.coefficient_set()?;
        self.interaction_drift()?;
        Ok(())
    }

    pub fn boundary(&self) -> Result<Boundary<Real>, ConfigError> {
        parse_boundary(&self.coefficients.boundary)
    }

    pub fn coefficient_set(&self) -> Result<CoefficientSet<Real>, ConfigError> {
        Ok(CoefficientSet {
            mu: CoefFn::parse(&self.coefficients.mu)?,
            sigma: CoefFn::parse(&self.coefficients.sigma)?,
            rho: CoefFn::parse(&self.coefficients.rho)?,
            boundary: self.boundary()?,
            bound_c: self.coefficients.bound_c,
        })
    }

    pub fn initial_law(&self) -> InitialLaw<Real> {
        match self.initial.kind.as_str() {
            "uniform" => InitialLaw::Uniform {
                lo: self.initial.lo,
                hi: self.initial.hi,
            },
            _ => InitialLaw::GaussianBump {
                center: self.initial.center,
                width: self.initial.width,
            },
        }
    }

    pub fn interaction_drift(&self) -> Result<Option<MeasureDrift<Real>>, ConfigError> {
        let Some(sec) = &self.interaction else {
            return Ok(None);
        };
        let kernel = match sec.kernel.as_str() {
            "tanh" => InteractionKernel::Tanh { scale: sec.scale },
            "clipped-linear" => InteractionKernel::ClippedLinear { cap: sec.scale },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown interaction kernel '{other}'"
                )))
            }
        };
        Ok(Some(MeasureDrift {
            base: sec.base,
            strength: sec.strength,
            kernel,
        }))
    }

    pub fn steps(&self) -> usize {
        (self.particles.t_end / self.particles.dt).round() as usize
    }

    /// Truncation point: initial support plus `6 max(sigma) sqrt(T)`,
    /// rounded up to the grid.
    pub fn x_max(&self) -> Result<Real, ConfigError> {
        if self.solver.x_max > 0.0 {
            return Ok(self.solver.x_max);
        }
        let coeffs = self.coefficient_set()?;
        let support_hi = match self.initial_law() {
            InitialLaw::GaussianBump { center, width } => center + 8.0 * width,
            InitialLaw::Uniform { hi, .. } => hi,
            InitialLaw::PointMass { at } => at,
        };
        let mut sigma_max: Real = 0.0;
        for i in 0..=20 {
            for j in 0..=40 {
                let t = self.particles.t_end * i as Real / 20.0;
                let x = (support_hi + 10.0) * j as Real / 40.0;
                sigma_max = sigma_max.max(coeffs.sigma(t, x));
            }
        }
        let raw = support_hi + 6.0 * sigma_max * self.particles.t_end.sqrt();
        let dx = self.solver.dx;
        Ok((raw / dx).ceil() * dx)
    }

    pub fn initial_grid_density(&self) -> Result<GridFunction<Real>, ConfigError> {
        let x_max = self.x_max()?;
        self.initial_law()
            .grid_density(self.solver.dx, x_max)
            .map_err(ConfigError::Coefficient)
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary<Real>, ConfigError> {
    let t = s.trim();
    if t == "reflecting" {
        return Ok(Boundary::Reflecting);
    }
    if t == "absorbing" {
        return Ok(Boundary::Absorbing);
    }
    if let Some(rest) = t.strip_prefix("elastic(") {
        if let Some(num) = rest.strip_suffix(')') {
            let k: Real = num
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad elastic rate '{num}'")))?;
            if k < 0.0 {
                return Err(ConfigError::Invalid("elastic rate must be >= 0".into()));
            }
            return Ok(Boundary::Elastic(k));
        }
    }
    Err(ConfigError::Invalid(format!("unknown boundary '{t}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_roundtrip() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.particles.n, 100_000);
        let echo = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&echo).unwrap();
        assert_eq!(echo, back.to_toml());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = "[particles]\nn = 10\ntypo_key = 3\n";
        assert!(ExperimentConfig::from_toml(bad).is_err());
    }

    #[test]
    fn boundary_forms() {
        assert_eq!(parse_boundary("reflecting").unwrap(), Boundary::Reflecting);
        assert_eq!(parse_boundary("absorbing").unwrap(), Boundary::Absorbing);
        assert_eq!(
            parse_boundary("elastic(2.5)").unwrap(),
            Boundary::Elastic(2.5)
        );
        assert!(parse_boundary("elastic(-1)").is_err());
        assert!(parse_boundary("porous").is_err());
    }

    #[test]
    fn fractional_step_count_is_rejected() {
        let bad = "[particles]\nn = 10\ndt = 0.0003\nt_end = 1.0\n";
        assert!(ExperimentConfig::from_toml(bad).is_err());
    }

    #[test]
    fn x_max_autoderives_beyond_support() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        let xm = cfg.x_max().unwrap();
        assert!(xm >= 1.0 + 8.0 * 0.15 + 6.0);
        assert!((xm / cfg.solver.dx).fract().abs() < 1e-9);
    }

    #[test]
    fn interaction_parses() {
        let text = "[interaction]\nbase = 0.1\nstrength = -1.0\nkernel = \"clipped-linear\"\nscale = 5.0\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let drift = cfg.interaction_drift().unwrap().unwrap();
        assert_eq!(drift.base, 0.1);
        assert_eq!(drift.lipschitz_constant(), 5.0);
    }
}
