//! Heat kernels on the half-line: Gaussian, reflecting (Neumann) and elastic
//! (Robin) variants, the boundary test function, the mollification operator
//! and the anti-derivative, plus the finite-difference identity checks.

use std::io::Write;

use thiserror::Error;

use crate::grid::GridFunction;
use crate::quad::{self, QuadError};
use crate::scalar::Scalar;
use crate::special::erfcx;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel bandwidth must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("elastic rate must be nonnegative, got {0}")]
    BadKappa(f64),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Bandwidth/rate pair `(epsilon, kappa)` of the elastic kernel family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<S> {
    pub epsilon: S,
    pub kappa: S,
}

impl<S: Scalar> KernelParams<S> {
    pub fn new(epsilon: S, kappa: S) -> Result<Self, KernelError> {
        if !(epsilon > S::zero()) || !epsilon.is_finite() {
            return Err(KernelError::BadEpsilon(epsilon.to_f64_()));
        }
        if kappa < S::zero() || !kappa.is_finite() {
            return Err(KernelError::BadKappa(kappa.to_f64_()));
        }
        Ok(Self { epsilon, kappa })
    }
}

/// Gaussian heat kernel with variance `eps`.
pub fn gaussian_kernel<S: Scalar>(eps: S, x: S) -> S {
    let two_pi = S::of(std::f64::consts::TAU);
    (two_pi * eps).sqrt().recip() * (-x * x / (S::of(2.0) * eps)).exp()
}

/// Reflecting (Neumann) kernel `p_eps(x-y) + p_eps(x+y)`.
pub fn reflecting_kernel<S: Scalar>(eps: S, x: S, y: S) -> S {
    gaussian_kernel(eps, x - y) + gaussian_kernel(eps, x + y)
}

/// Correction term of the elastic kernel.
///
/// Algebraically `kappa * exp(kappa(x+y) + kappa^2 eps/2) * erfc((x+y+kappa*eps)/sqrt(2 eps))`;
/// computed as `kappa * exp(-(x+y)^2/(2 eps)) * erfcx((x+y+kappa*eps)/sqrt(2 eps))`
/// so the exponential prefactor never overflows. Since `erfcx <= 1` on
/// nonnegative arguments, the bound `g <= kappa * exp(-(x+y)^2/(2 eps))`
/// holds by construction.
pub fn elastic_correction<S: Scalar>(eps: S, kappa: S, x: S, y: S) -> S {
    if kappa == S::zero() {
        return S::zero();
    }
    let u = x + y;
    let s = (u + kappa * eps) / (S::of(2.0) * eps).sqrt();
    kappa * (-u * u / (S::of(2.0) * eps)).exp() * erfcx(s)
}

/// Elastic (Robin) kernel `G^R - g`.
pub fn elastic_kernel<S: Scalar>(eps: S, kappa: S, x: S, y: S) -> S {
    reflecting_kernel(eps, x, y) - elastic_correction(eps, kappa, x, y)
}

/// Truncation point beyond which the correction integrand is below 1e-30.
fn correction_y_max<S: Scalar>(eps: S, kappa: S, x: S) -> S {
    x + kappa * eps + S::of(12.0) * eps.sqrt()
}

/// Mass of the elastic kernel started from `x`, i.e. the smooth boundary test
/// function `phi(x) = int_0^inf G(x, y) dy`.
///
/// The reflecting part integrates to one exactly (its two erf halves sum to
/// a constant); the correction part is integrated adaptively to relative
/// tolerance 1e-9.
pub fn boundary_test_function<S: Scalar>(eps: S, kappa: S, x: S) -> Result<S, KernelError> {
    if kappa == S::zero() {
        return Ok(S::one());
    }
    let y_max = correction_y_max(eps, kappa, x);
    let corr = quad::integrate(
        |y| elastic_correction(eps, kappa, x, y),
        S::zero(),
        y_max,
        S::of(1e-9),
    )?;
    Ok(S::one() - corr)
}

/// Mollification of an atomic measure: `(T_eps m)(x_j) = sum_i w * G(x_j, y_i)`.
pub fn mollify_atoms<S: Scalar>(
    atoms: &[S],
    weight: S,
    params: KernelParams<S>,
    dx: S,
    x_max: S,
) -> GridFunction<S> {
    let m = (x_max / dx).round().to_f64_() as usize;
    let mut out = GridFunction::zeros(dx, m);
    for j in 0..=m {
        let x = dx * S::of(j as f64);
        let mut acc = S::zero();
        for &y in atoms {
            acc += elastic_kernel(params.epsilon, params.kappa, x, y);
        }
        out.values_mut()[j] = weight * acc;
    }
    out
}

/// Mollification of a grid density by trapezoid quadrature on its own grid.
pub fn mollify_density<S: Scalar>(
    f: &GridFunction<S>,
    params: KernelParams<S>,
    dx: S,
    x_max: S,
) -> GridFunction<S> {
    let m = (x_max / dx).round().to_f64_() as usize;
    let n = f.len();
    let fdx = f.dx();
    let mut out = GridFunction::zeros(dx, m);
    for j in 0..=m {
        let x = dx * S::of(j as f64);
        let mut acc = S::zero();
        for (i, &fy) in f.values().iter().enumerate() {
            let w = if i == 0 || i == n - 1 {
                S::of(0.5)
            } else {
                S::one()
            };
            acc += w * fy * elastic_kernel(params.epsilon, params.kappa, x, f.x(i));
        }
        out.values_mut()[j] = acc * fdx;
    }
    out
}

/// Anti-derivative `x -> -int_x^{x_max} f(y) dy` by right-to-left cumulative
/// trapezoid. Returns the grid function and, when the right edge value of
/// `f` exceeds `tail_tol` in magnitude, the offending magnitude.
pub fn antiderivative<S: Scalar>(
    f: &GridFunction<S>,
    tail_tol: S,
) -> (GridFunction<S>, Option<S>) {
    let n = f.len();
    let dx = f.dx();
    let v = f.values();
    let mut out = vec![S::zero(); n];
    for j in (0..n - 1).rev() {
        out[j] = out[j + 1] - S::of(0.5) * dx * (v[j] + v[j + 1]);
    }
    let tail = v[n - 1].abs();
    let warn = (tail > tail_tol).then_some(tail);
    (
        GridFunction::new(dx, out).expect("antiderivative of finite grid is finite"),
        warn,
    )
}

/// Max absolute residuals of the derivative-switch identities over the
/// sample points, via central differences.
///
/// First derivatives use step `1e-5 sqrt(eps)`. Second derivatives use
/// `1e-3 sqrt(eps)`: the identity makes the truncation terms of the two
/// sides cancel exactly, so the step is chosen against roundoff alone.
pub fn derivative_switch_residual<S: Scalar>(
    eps: S,
    kappa: S,
    sample_points: &[(S, S)],
) -> (S, S) {
    let h1 = S::of(1e-5) * eps.sqrt();
    let h2 = S::of(1e-3) * eps.sqrt();
    let g = |x: S, y: S| elastic_kernel(eps, kappa, x, y);
    let mut r1max = S::zero();
    let mut r2max = S::zero();
    for &(x, y) in sample_points {
        let dx_g = (g(x + h1, y) - g(x - h1, y)) / (S::of(2.0) * h1);
        let dy_g = (g(x, y + h1) - g(x, y - h1)) / (S::of(2.0) * h1);
        let dp = (gaussian_kernel(eps, x + y + h1) - gaussian_kernel(eps, x + y - h1))
            / (S::of(2.0) * h1);
        let dcorr = (elastic_correction(eps, kappa, x + h1, y)
            - elastic_correction(eps, kappa, x - h1, y))
            / (S::of(2.0) * h1);
        let r1 = (dy_g + dx_g - S::of(2.0) * dp + S::of(2.0) * dcorr).abs();
        r1max = r1max.max(r1);

        let dxx = (g(x + h2, y) - S::of(2.0) * g(x, y) + g(x - h2, y)) / (h2 * h2);
        let dyy = (g(x, y + h2) - S::of(2.0) * g(x, y) + g(x, y - h2)) / (h2 * h2);
        let r2 = (dyy - dxx).abs();
        r2max = r2max.max(r2);
    }
    (r1max, r2max)
}

/// Max relative residual of the Robin boundary identity
/// `d/dx G(0, y) = kappa G(0, y)` (and the symmetric one in `y`) over the
/// given sample offsets, with a caller-supplied kernel. Taking the kernel as
/// a closure lets checks run against deliberately corrupted kernels.
pub fn robin_residual_with<S: Scalar>(
    kernel: impl Fn(S, S) -> S,
    eps: S,
    kappa: S,
    offsets: &[S],
) -> S {
    let h = S::of(1e-5) * eps.sqrt();
    let mut worst = S::zero();
    for &y in offsets {
        let dx_at0 = (kernel(h, y) - kernel(-h, y)) / (S::of(2.0) * h);
        let dy_at0 = (kernel(y, h) - kernel(y, -h)) / (S::of(2.0) * h);
        let v = kernel(S::zero(), y);
        let scale = (kappa * v).abs().max(v.abs()).max(S::of(1e-12));
        worst = worst
            .max((dx_at0 - kappa * v).abs() / scale)
            .max((dy_at0 - kappa * v).abs() / scale);
    }
    worst
}

/// Relative Chapman–Kolmogorov residual
/// `|int G_s(x,z) G_t(z,y) dz - G_{s+t}(x,y)| / G_{s+t}(x,y)`.
pub fn chapman_kolmogorov_residual<S: Scalar>(
    s: S,
    t: S,
    kappa: S,
    x: S,
    y: S,
) -> Result<S, KernelError> {
    let z_max = x.max(y) + kappa * (s + t) + S::of(14.0) * (s + t).sqrt();
    let lhs = quad::integrate(
        |z| elastic_kernel(s, kappa, x, z) * elastic_kernel(t, kappa, z, y),
        S::zero(),
        z_max,
        S::of(1e-9),
    )?;
    let rhs = elastic_kernel(s + t, kappa, x, y);
    Ok((lhs - rhs).abs() / rhs)
}

/// Dump `(x, y, G(x,y))` rows as CSV for plotting.
pub fn dump_kernel_table<S: Scalar, W: Write>(
    params: KernelParams<S>,
    xs: &[S],
    ys: &[S],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "x,y,value")?;
    for &x in xs {
        for &y in ys {
            let v = elastic_kernel(params.epsilon, params.kappa, x, y);
            writeln!(out, "{},{},{}", x.to_f64_(), y.to_f64_(), v.to_f64_())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halton::halton2d;
    use approx::assert_relative_eq;

    // mpmath (40 digits), frozen:
    //   1/sqrt(pi)                          = 0.5641895835477562869
    //   1/sqrt(2 pi)                        = 0.3989422804014326779
    //   p_{0.1}(1)                          = 0.0085003666025203418
    //   p_1(1) + p_1(3)                     = 0.2464025729310813570
    //   g_1^{E,1}(0,0) = e^{1/2} erfc(1/sqrt 2) = 0.5231565837302467434
    //   G_1^{E,1}(0,0)                      = 0.2747279770726186125
    //   phi_1^{E,1}(0)                      = 0.5231565837302467434
    //   phi_1^{E,1}(0.7)                    = 0.8119977897023022209
    const G_CORR_110: f64 = 0.5231565837302467434;

    #[test]
    fn gaussian_reference_values() {
        assert_relative_eq!(gaussian_kernel(0.5, 0.0), 0.5641895835477562869, max_relative = 1e-14);
        assert_relative_eq!(gaussian_kernel(1.0, 0.0), 0.3989422804014326779, max_relative = 1e-14);
        assert_relative_eq!(gaussian_kernel(0.1, 1.0), 0.0085003666025203418, max_relative = 1e-14);
        assert_eq!(gaussian_kernel(1.0, 3.0), gaussian_kernel(1.0, -3.0));
    }

    #[test]
    fn reflecting_reference_values() {
        assert_relative_eq!(
            reflecting_kernel(0.5, 0.0, 0.0),
            2.0 * 0.5641895835477562869,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            reflecting_kernel(1.0, 1.0, 2.0),
            0.2464025729310813570,
            max_relative = 1e-14
        );
    }

    #[test]
    fn reflecting_kernel_mass_is_one() {
        for &x in &[0.0, 0.3, 1.7] {
            let m: f64 = quad::integrate(
                |y| reflecting_kernel(0.37, x, y),
                0.0,
                x + 12.0 * 0.37f64.sqrt(),
                1e-11,
            )
            .unwrap();
            assert_relative_eq!(m, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn elastic_correction_reference_and_degenerate_cases() {
        assert_eq!(elastic_correction(1.0, 0.0, 0.4, 0.6), 0.0);
        assert_relative_eq!(
            elastic_correction(1.0, 1.0, 0.0, 0.0),
            G_CORR_110,
            max_relative = 1e-14
        );
        // no overflow in the regime where the naive product blows up
        let tiny = elastic_correction(0.01, 5.0, 3.0, 4.0);
        assert!(tiny >= 0.0 && tiny <= 5.0 * (-49.0f64 / 0.02).exp());

        let extreme: f64 = elastic_correction(1e-4, 300.0, 4.0, 4.0);
        assert!(extreme.is_finite() && extreme >= 0.0);
    }

    #[test]
    fn correction_bound_holds_everywhere_sampled() {
        for (eps, kappa) in [(0.5, 1.0), (0.05, 3.0), (1.0, 0.2)] {
            for (x, y) in halton2d(300, 4.0) {
                let g = elastic_correction(eps, kappa, x, y);
                let bound = kappa * (-(x + y) * (x + y) / (2.0 * eps)).exp();
                assert!(g >= 0.0, "negative correction at ({x},{y})");
                assert!(g <= bound * (1.0 + 1e-13), "bound violated at ({x},{y})");
            }
        }
    }

    #[test]
    fn elastic_kernel_reference_and_kappa_zero() {
        assert_relative_eq!(
            elastic_kernel(1.0, 1.0, 0.0, 0.0),
            0.2747279770726186125,
            max_relative = 1e-13
        );
        for (x, y) in halton2d(50, 3.0) {
            assert_eq!(
                elastic_kernel(0.3, 0.0, x, y),
                reflecting_kernel(0.3, x, y)
            );
            // symmetry under swapping arguments
            assert_relative_eq!(
                elastic_kernel(0.3, 1.5, x, y),
                elastic_kernel(0.3, 1.5, y, x),
                max_relative = 1e-13
            );
            assert!(elastic_kernel(0.3, 1.5, x, y) >= 0.0);
        }
    }

    #[test]
    fn robin_identity_holds_in_both_variables() {
        let offsets: Vec<f64> = (1..40).map(|i| 0.1 * i as f64).collect();
        for (eps, kappa) in [(0.25, 2.0), (1.0, 1.0), (0.05, 0.7)] {
            let r = robin_residual_with(
                |x, y| elastic_kernel(eps, kappa, x, y),
                eps,
                kappa,
                &offsets,
            );
            assert!(r < 1e-6, "robin residual {r:e} at eps={eps} kappa={kappa}");
        }
    }

    #[test]
    fn corrupted_kernel_fails_robin_identity() {
        let eps = 0.25;
        let kappa = 2.0;
        let offsets: Vec<f64> = (1..20).map(|i| 0.1 * i as f64).collect();
        // corrupt the rate inside the correction term only
        let r = robin_residual_with(
            |x, y| reflecting_kernel(eps, x, y) - elastic_correction(eps, kappa * 1.05, x, y),
            eps,
            kappa,
            &offsets,
        );
        assert!(r > 1e-3, "corruption went unnoticed: residual {r:e}");
    }

    #[test]
    fn derivative_switch_residuals_small() {
        let points: Vec<(f64, f64)> = halton2d(100, 3.0);
        for (eps, kappa) in [(0.5, 1.0), (0.5, 0.0), (0.2, 2.5)] {
            let (r1, r2) = derivative_switch_residual(eps, kappa, &points);
            assert!(r1 < 1e-6, "first-order residual {r1:e}");
            assert!(r2 < 1e-6, "second-order residual {r2:e}");
        }
    }

    #[test]
    fn boundary_test_function_matches_brute_force() {
        // brute-force oracle: trapezoid on [0, 40] with Richardson refinement
        let brute = |eps: f64, kappa: f64, x: f64| {
            let trapz = |n: usize| {
                let h = 40.0 / n as f64;
                let mut s = 0.5 * (elastic_kernel(eps, kappa, x, 0.0)
                    + elastic_kernel(eps, kappa, x, 40.0));
                for i in 1..n {
                    s += elastic_kernel(eps, kappa, x, h * i as f64);
                }
                s * h
            };
            let c = trapz(40_000);
            let f = trapz(80_000);
            f + (f - c) / 3.0
        };
        for (eps, kappa, x) in [(1.0, 1.0, 0.0), (1.0, 1.0, 0.7), (0.25, 2.0, 0.3)] {
            let phi = boundary_test_function(eps, kappa, x).unwrap();
            assert_relative_eq!(phi, brute(eps, kappa, x), max_relative = 1e-8);
            assert!(phi > 0.0 && phi <= 1.0);
        }
        // frozen closed-form values (erf(x/sqrt(2 eps)) + g(x,0)/kappa)
        assert_relative_eq!(
            boundary_test_function(1.0, 1.0, 0.0).unwrap(),
            G_CORR_110,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            boundary_test_function(1.0, 1.0, 0.7).unwrap(),
            0.8119977897023022209,
            max_relative = 1e-9
        );
    }

    #[test]
    fn boundary_test_function_degenerate_limits() {
        assert_eq!(boundary_test_function(0.5, 0.0, 1.3).unwrap(), 1.0);
        // concentration limit: eps -> 0 away from the boundary
        let v = boundary_test_function(1e-4, 1.0, 0.5).unwrap();
        assert!(v >= 1.0 - 1e-8, "got {v}");
    }

    #[test]
    fn chapman_kolmogorov_spot_checks() {
        for (s, t, kappa, x, y) in [
            (0.3, 0.2, 1.0, 0.4, 0.9),
            (0.1, 0.1, 0.0, 0.0, 0.5),
            (0.5, 0.25, 2.0, 1.2, 0.1),
        ] {
            let r = chapman_kolmogorov_residual(s, t, kappa, x, y).unwrap();
            assert!(r < 1e-6, "CK residual {r:e}");
        }
    }

    #[test]
    fn mollify_single_atom_reduces_to_kernel_row() {
        let params = KernelParams::new(0.2, 0.0).unwrap();
        let out = mollify_atoms(&[1.0], 1.0, params, 0.05, 3.0);
        for j in 0..out.len() {
            assert_relative_eq!(
                out.values()[j],
                reflecting_kernel(0.2, out.x(j), 1.0),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn mollify_empty_measure_is_zero() {
        let params = KernelParams::new(0.2, 1.0).unwrap();
        let out = mollify_atoms(&[], 0.1, params, 0.05, 2.0);
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mollify_is_linear() {
        let params = KernelParams::new(0.1, 1.0).unwrap();
        let a: Vec<f64> = vec![0.3, 0.9, 1.4];
        let b: Vec<f64> = vec![0.1, 2.0];
        let both: Vec<f64> = a.iter().chain(&b).copied().collect();
        let ta = mollify_atoms(&a, 0.25, params, 0.05, 4.0);
        let tb = mollify_atoms(&b, 0.25, params, 0.05, 4.0);
        let tboth = mollify_atoms(&both, 0.25, params, 0.05, 4.0);
        let sum = ta.axpy(1.0, &tb, 1.0);
        for j in 0..sum.len() {
            assert_relative_eq!(sum.values()[j], tboth.values()[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn l2_contraction_on_random_piecewise_constant_inputs() {
        // deterministic pseudo-random inputs; the mollifier must not expand L2
        let params = KernelParams::new(0.05, 1.0).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let vals: Vec<f64> = (0..241).map(|_| next() * 2.0 - 0.5).collect();
            let f = GridFunction::new(0.025, vals).unwrap();
            let tf = mollify_density(&f, params, 0.025, 6.0);
            let expand = (tf.l2_norm() - f.l2_norm()) / f.l2_norm();
            assert!(expand < 1e-6, "contraction violated by {expand:e}");
        }
    }

    #[test]
    fn antiderivative_reference() {
        let f = GridFunction::sample(1e-3f64, 20.0, |x| (-x).exp()).unwrap();
        let (ad, warn) = antiderivative(&f, 1e-6);
        assert!(warn.is_none());
        // closed form: -int_x^20 e^{-y} dy = e^{-20} - e^{-x}
        let mut worst = 0.0f64;
        for j in 0..ad.len() {
            let exact = (-20.0f64).exp() - (-ad.x(j)).exp();
            worst = worst.max((ad.values()[j] - exact).abs());
        }
        assert!(worst < 1e-6, "max error {worst:e}");
        assert_relative_eq!(ad.values()[0], -(1.0 - (-20.0f64).exp()), epsilon = 1e-6);
    }

    #[test]
    fn antiderivative_zero_and_hat() {
        let z = GridFunction::zeros(0.1f64, 30);
        let (az, _) = antiderivative(&z, 1.0);
        assert!(az.values().iter().all(|&v| v == 0.0));

        // unit-area hat centred inside the grid: antiderivative at 0 is -1
        let hat = GridFunction::sample(0.01f64, 4.0, |x: f64| {
            let d = 1.0 - (x - 2.0).abs();
            d.max(0.0)
        })
        .unwrap();
        let (ah, warn) = antiderivative(&hat, 1e-12);
        assert!(warn.is_none());
        assert_relative_eq!(ah.values()[0], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn antiderivative_forward_difference_recovers_input() {
        let f = GridFunction::sample(0.01f64, 6.0, |x: f64| (-(x - 2.0).powi(2)).exp()).unwrap();
        let (ad, _) = antiderivative(&f, 1e-3);
        for j in 0..f.len() - 1 {
            let fd = (ad.values()[j + 1] - ad.values()[j]) / 0.01;
            let mid = 0.5 * (f.values()[j] + f.values()[j + 1]);
            assert_relative_eq!(fd, mid, epsilon = 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g32 = elastic_kernel(0.5f32, 1.0f32, 0.2f32, 0.4f32);
        let g64 = elastic_kernel(0.5f64, 1.0f64, 0.2f64, 0.4f64);
        assert_relative_eq!(g32 as f64, g64, max_relative = 1e-5);
    }
}
