//! Uniform grids on `[0, x_max]` carrying sampled functions (densities,
//! mollified measures, solver states).

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("grid needs at least 3 nodes, got {0}")]
    TooShort(usize),
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
}

/// Samples `f(x_j)` on `x_j = j * dx`, `j = 0..=m`. The left endpoint is
/// always the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<S> {
    dx: S,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn new(dx: S, values: Vec<S>) -> Result<Self, GridError> {
        if !(dx > S::zero()) || !dx.is_finite() {
            return Err(GridError::BadSpacing(dx.to_f64_()));
        }
        if values.len() < 3 {
            return Err(GridError::TooShort(values.len()));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(j));
        }
        Ok(Self { dx, values })
    }

    /// Zero function on `[0, x_max]` with `m + 1` nodes.
    pub fn zeros(dx: S, m: usize) -> Self {
        Self {
            dx,
            values: vec![S::zero(); m + 1],
        }
    }

    /// Sample a closure on the nodes of `[0, x_max]`; `m = round(x_max/dx)`.
    pub fn sample(dx: S, x_max: S, f: impl Fn(S) -> S) -> Result<Self, GridError> {
        let m = (x_max / dx).round().to_f64_() as usize;
        let values = (0..=m).map(|j| f(dx * S::of(j as f64))).collect();
        Self::new(dx, values)
    }

    pub fn dx(&self) -> S {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, j: usize) -> S {
        self.dx * S::of(j as f64)
    }

    pub fn x_max(&self) -> S {
        self.x(self.values.len() - 1)
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    /// Trapezoid integral over the whole grid.
    pub fn integral(&self) -> S {
        let n = self.values.len();
        let inner: S = self.values[1..n - 1].iter().copied().sum();
        self.dx * (inner + S::of(0.5) * (self.values[0] + self.values[n - 1]))
    }

    /// Trapezoid `L^2(0, x_max)` norm.
    pub fn l2_norm(&self) -> S {
        let n = self.values.len();
        let inner: S = self.values[1..n - 1].iter().map(|v| *v * *v).sum();
        let ends = S::of(0.5) * (self.values[0] * self.values[0]
            + self.values[n - 1] * self.values[n - 1]);
        (self.dx * (inner + ends)).sqrt()
    }

    /// Piecewise-linear evaluation; zero outside the grid.
    pub fn eval(&self, x: S) -> S {
        if x < S::zero() || x > self.x_max() {
            return S::zero();
        }
        let u = x / self.dx;
        let j = u.floor().to_f64_() as usize;
        if j + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let frac = u - S::of(j as f64);
        self.values[j] + frac * (self.values[j + 1] - self.values[j])
    }

    /// Pointwise linear combination `a*self + b*other`; grids must agree.
    pub fn axpy(&self, a: S, other: &Self, b: S) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "grid length mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Self { dx: self.dx, values }
    }

    /// L1 distance between two grid functions on the shared grid.
    pub fn l1_distance(&self, other: &Self) -> S {
        assert_eq!(self.values.len(), other.values.len(), "grid length mismatch");
        let n = self.values.len();
        let mut acc = S::zero();
        for j in 0..n {
            let w = if j == 0 || j == n - 1 {
                S::of(0.5)
            } else {
                S::one()
            };
            acc += w * (self.values[j] - other.values[j]).abs();
        }
        acc * self.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integral_of_linear_function_is_exact() {
        let g = GridFunction::sample(0.1f64, 1.0, |x| 2.0 * x).unwrap();
        assert_relative_eq!(g.integral(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GridFunction::new(0.0f64, vec![0.0; 5]).is_err());
        assert!(GridFunction::new(0.1f64, vec![0.0, 1.0]).is_err());
        assert!(GridFunction::new(0.1f64, vec![0.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn eval_interpolates_and_vanishes_outside() {
        let g = GridFunction::sample(0.5f64, 2.0, |x| x).unwrap();
        assert_relative_eq!(g.eval(0.75), 0.75, max_relative = 1e-14);
        assert_eq!(g.eval(-0.1), 0.0);
        assert_eq!(g.eval(2.5), 0.0);
    }
}
