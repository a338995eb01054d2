//! The verification suites behind the CLI subcommands.

pub mod class_lambda;
pub mod compare;
pub mod convergence;
pub mod kappa_limits;
pub mod mass_loss;
pub mod nonlinear;
pub mod runs;
pub mod verify_kernels;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error(transparent)]
    Sim(#[from] crate::particles::SimError),
    #[error(transparent)]
    Solver(#[from] crate::fdsolver::SolverError),
    #[error(transparent)]
    Measure(#[from] crate::measures::MeasureError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl SuiteError {
    /// CLI exit code: 2 for configuration problems, 3 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            SuiteError::Config(_) | SuiteError::Io(_) => 2,
            SuiteError::Solver(crate::fdsolver::SolverError::Config(_)) => 2,
            _ => 3,
        }
    }
}
