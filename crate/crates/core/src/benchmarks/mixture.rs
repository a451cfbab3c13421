//! One-dimensional toy model whose ABC posterior is a two-scale Gaussian
//! mixture with closed-form CDF and moments.
//!
//! Prior `U(-10, 10)`; the simulator draws `x ~ ½ N(θ, 1) + ½ N(θ, 1/100)`;
//! the observation is `y = 0` and the distance is `|x - y|`. The exact
//! posterior is proportional to `φ(θ) + 10 φ(10 θ)` on `(-10, 10)`.

use rand::RngCore;

use super::{normal_cdf, normal_pdf};
use crate::diagnostics::PosteriorOracle;
use crate::error::Result;
use crate::model::{Metric, ModelSpec, Prior};
use crate::scalar::Real;

pub const BOUND: f64 = 10.0;
/// Standard deviation of the narrow component.
pub const NARROW_SD: f64 = 0.1;

pub fn mixture_toy_model<S: Real>() -> Result<ModelSpec<S>> {
    let b = S::lit(BOUND);
    ModelSpec::new(
        super::MIXTURE_TOY,
        Prior::uniform_box(vec![(-b, b)])?,
        vec![S::zero()],
        Metric::Euclidean,
        |theta: &[S], rng: &mut dyn RngCore| {
            let sd = if S::unit_uniform(rng) < S::lit(0.5) {
                S::one()
            } else {
                S::lit(NARROW_SD)
            };
            vec![theta[0] + sd * S::std_normal(rng)]
        },
    )
}

/// Total mass of the untruncated components on (-10, 10).
fn normalizer() -> f64 {
    (normal_cdf(BOUND) - normal_cdf(-BOUND))
        + (normal_cdf(BOUND / NARROW_SD) - normal_cdf(-BOUND / NARROW_SD))
}

/// Unnormalized posterior density `φ(θ) + 10 φ(10 θ)` on the support.
pub fn mixture_oracle_unnormalized_pdf(theta: f64) -> f64 {
    if theta.abs() > BOUND {
        0.0
    } else {
        normal_pdf(theta) + normal_pdf(theta / NARROW_SD) / NARROW_SD
    }
}

/// Posterior CDF, in closed form through Gaussian CDFs.
pub fn mixture_oracle_cdf(theta: f64) -> f64 {
    if theta <= -BOUND {
        return 0.0;
    }
    if theta >= BOUND {
        return 1.0;
    }
    let wide = normal_cdf(theta) - normal_cdf(-BOUND);
    let narrow = normal_cdf(theta / NARROW_SD) - normal_cdf(-BOUND / NARROW_SD);
    (wide + narrow) / normalizer()
}

/// Posterior `(mean, variance)`, including the truncation correction.
pub fn mixture_oracle_moments() -> (f64, f64) {
    // ∫_{-a}^{a} x² φ(x/s)/s dx = s² [(Φ(a/s) - Φ(-a/s)) - 2 (a/s) φ(a/s)]
    let second = |s: f64| {
        let a = BOUND / s;
        s * s * ((normal_cdf(a) - normal_cdf(-a)) - 2.0 * a * normal_pdf(a))
    };
    (0.0, (second(1.0) + second(NARROW_SD)) / normalizer())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MixtureOracle;

impl PosteriorOracle for MixtureOracle {
    fn cdf(&self, x: f64) -> f64 {
        mixture_oracle_cdf(x)
    }
    fn mean(&self) -> f64 {
        mixture_oracle_moments().0
    }
    fn variance(&self) -> f64 {
        mixture_oracle_moments().1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, kept independent of the closed forms.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn quad_mass(a: f64, b: f64) -> f64 {
        // split at 0 so the narrow spike sits on a panel edge
        let f = |x: f64| mixture_oracle_unnormalized_pdf(x);
        if a < 0.0 && b > 0.0 {
            simpson(&f, a, 0.0, 1e-13) + simpson(&f, 0.0, b, 1e-13)
        } else {
            simpson(&f, a, b, 1e-13)
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let z = quad_mass(-BOUND, BOUND);
        assert!((z / normalizer() - 1.0).abs() < 1e-9);
        assert!((z - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_examples() {
        assert!((mixture_oracle_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((mixture_oracle_cdf(10.0) - 1.0).abs() < 1e-15);
        assert!((mixture_oracle_cdf(9.999_999) - 1.0).abs() < 1e-9);
        assert!(mixture_oracle_cdf(-10.0).abs() < 1e-9);
        let by_quad = quad_mass(-BOUND, 1.0) / quad_mass(-BOUND, BOUND);
        assert!((mixture_oracle_cdf(1.0) - by_quad).abs() < 1e-8);
    }

    #[test]
    fn cdf_nondecreasing_on_grid() {
        let n = 10_000;
        let mut prev = mixture_oracle_cdf(-BOUND);
        for i in 1..=n {
            let x = -BOUND + 2.0 * BOUND * i as f64 / n as f64;
            let c = mixture_oracle_cdf(x);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn moments_match_quadrature() {
        let (mean, var) = mixture_oracle_moments();
        assert_eq!(mean, 0.0);
        assert!((var - 0.505).abs() < 1e-12);
        let f = |x: f64| x * x * mixture_oracle_unnormalized_pdf(x);
        let second = simpson(&f, -BOUND, 0.0, 1e-13) + simpson(&f, 0.0, BOUND, 1e-13);
        assert!((second / quad_mass(-BOUND, BOUND) - var).abs() < 1e-9);
    }

    #[test]
    fn oracle_quantiles_invert_cdf() {
        let o = MixtureOracle;
        for p in [0.001, 0.25, 0.5, 0.9, 0.999] {
            assert!((o.cdf(o.quantile(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn simulator_emits_one_summary() {
        let m = mixture_toy_model::<f64>().unwrap();
        let mut rng = crate::engine::attempt_rng(0, 0, 0);
        let s = m.simulate(&[2.0], &mut rng).unwrap();
        assert_eq!(s.len(), 1);
    }
}
