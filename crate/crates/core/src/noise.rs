//! Discretised common-noise path with Brownian-bridge refinement.

use serde::Serialize;

use crate::rng::{self, stream};
use crate::scalar::Scalar;

/// Increments of the shared Brownian motion on a uniform grid.
///
/// Regenerating from the same `(seed, dt, steps)` is bit-identical; refining
/// produces the same path on a grid twice as fine (coarse increments are the
/// exact pairwise sums of fine ones).
#[derive(Debug, Clone, Serialize)]
pub struct NoisePath<S> {
    dt: S,
    increments: Vec<S>,
    seed: u64,
    level: u32,
}

impl<S: Scalar> NoisePath<S> {
    pub fn generate(seed: u64, dt: S, steps: usize) -> Self {
        let sqrt_dt = dt.sqrt();
        let increments = (0..steps)
            .map(|k| sqrt_dt * S::of(rng::standard_normal(seed, stream::COMMON_NOISE, 0, k as u64)))
            .collect();
        Self {
            dt,
            increments,
            seed,
            level: 0,
        }
    }

    /// Deterministic zero path (used where a run must not depend on noise).
    pub fn zero(dt: S, steps: usize) -> Self {
        Self {
            dt,
            increments: vec![S::zero(); steps],
            seed: 0,
            level: 0,
        }
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn horizon(&self) -> S {
        self.dt * S::of(self.increments.len() as f64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increments(&self) -> &[S] {
        &self.increments
    }

    pub fn time(&self, k: usize) -> S {
        self.dt * S::of(k as f64)
    }

    /// Brownian-bridge refinement halving the step.
    ///
    /// `W_mid - W_left = dW/2 + xi` with `xi ~ N(0, dt/4)` drawn from the
    /// bridge stream of the next level; the second half-increment is set to
    /// `dW - first`, so coarse sums are preserved up to one rounding.
    pub fn refine(&self) -> Self {
        let half_dt = self.dt * S::of(0.5);
        let half_sd = S::of(0.5) * self.dt.sqrt();
        let mut increments = Vec::with_capacity(self.increments.len() * 2);
        let bridge_stream = stream::BRIDGE + u64::from(self.level) + 1;
        for (k, &dw) in self.increments.iter().enumerate() {
            let xi = half_sd * S::of(rng::standard_normal(self.seed, bridge_stream, 0, k as u64));
            let first = S::of(0.5) * dw + xi;
            increments.push(first);
            increments.push(dw - first);
        }
        Self {
            dt: half_dt,
            increments,
            seed: self.seed,
            level: self.level + 1,
        }
    }

    /// Refine `levels` times (factor `2^levels` in the step).
    pub fn refine_by(&self, levels: u32) -> Self {
        let mut path = self.clone();
        for _ in 0..levels {
            path = path.refine();
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regeneration_is_bit_identical() {
        let a: NoisePath<f64> = NoisePath::generate(99, 0.01, 500);
        let b: NoisePath<f64> = NoisePath::generate(99, 0.01, 500);
        assert_eq!(a.increments(), b.increments());
    }

    #[test]
    fn refinement_preserves_coarse_sums() {
        let coarse: NoisePath<f64> = NoisePath::generate(5, 0.02, 128);
        let fine = coarse.refine();
        assert_eq!(fine.steps(), 256);
        assert_eq!(fine.dt(), 0.01);
        for k in 0..coarse.steps() {
            let a = fine.increments()[2 * k];
            let b = fine.increments()[2 * k + 1];
            let want = coarse.increments()[k];
            // the halves can be much larger than their sum, so rounding is
            // relative to the halves
            assert!(
                (a + b - want).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()),
                "mismatch at {k}: {} vs {want}",
                a + b
            );
        }
    }

    #[test]
    fn increment_variance_matches_dt() {
        let p: NoisePath<f64> = NoisePath::generate(7, 0.25, 40_000);
        let var: f64 = p.increments().iter().map(|w| w * w).sum::<f64>() / 40_000.0;
        assert!((var - 0.25).abs() < 0.01, "var {var}");
    }
}
