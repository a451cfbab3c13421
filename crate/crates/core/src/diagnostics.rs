//! Weighted-sample statistics and comparisons against analytic posteriors.

use serde::Serialize;

use crate::error::{AbcError, Result};
use crate::samplers::resample::check_normalized;
use crate::samplers::Population;
use crate::scalar::Real;

/// Probabilities reported in [`GenerationStats::quantiles`].
pub const REPORTED_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

/// Number of evaluation points for the oracle KS statistic.
pub const KS_GRID_POINTS: usize = 512;

/// Effective sample size `1 / Σ w²`.
pub fn ess<S: Real>(weights: &[S]) -> Result<S> {
    check_normalized(weights)?;
    let sq: S = weights.iter().map(|&w| w * w).sum();
    Ok(S::one() / sq)
}

/// Weighted mean and variance `Σ w (x - μ)²` of each coordinate. Unlike the
/// kernel's moment routine this accepts a single live particle.
pub fn weighted_mean_var<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
) -> Result<(Vec<S>, Vec<S>)> {
    check_normalized(weights)?;
    if points.len() != weights.len() {
        return Err(AbcError::DimensionMismatch {
            expected: points.len(),
            got: weights.len(),
        });
    }
    let d = points[0].as_ref().len();
    let column = |k: usize| points.iter().map(move |p| p.as_ref()[k]);
    let mean: Vec<S> = (0..d)
        .map(|k| column(k).zip(weights).map(|(x, &w)| w * x).sum())
        .collect();
    let var = (0..d)
        .map(|k| {
            column(k)
                .zip(weights)
                .map(|(x, &w)| w * (x - mean[k]) * (x - mean[k]))
                .sum()
        })
        .collect();
    Ok((mean, var))
}

/// Left-continuous inverse of the weighted empirical CDF: the smallest
/// sample value `x` with `F(x) ≥ q`.
pub fn weighted_quantile<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
    q: f64,
    dim: usize,
) -> Result<S> {
    if !(q > 0.0 && q < 1.0) {
        return Err(AbcError::InvalidConfig(format!(
            "quantile {q} outside (0, 1)"
        )));
    }
    check_normalized(weights)?;
    let sorted = sorted_column(points, weights, dim)?;
    Ok(quantile_sorted(&sorted, q))
}

fn sorted_column<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
    dim: usize,
) -> Result<Vec<(S, S)>> {
    let mut pairs = Vec::with_capacity(points.len());
    for (p, &w) in points.iter().zip(weights) {
        let p = p.as_ref();
        let x = *p.get(dim).ok_or(AbcError::DimensionMismatch {
            expected: dim + 1,
            got: p.len(),
        })?;
        pairs.push((x, w));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("sample values are not NaN"));
    Ok(pairs)
}

fn quantile_sorted<S: Real>(sorted: &[(S, S)], q: f64) -> S {
    let q = S::lit(q);
    let mut acc = S::zero();
    for &(x, w) in sorted {
        acc = acc + w;
        if acc >= q {
            return x;
        }
    }
    // rounding left the total just under q: return the largest atom with mass
    sorted
        .iter()
        .rev()
        .find(|(_, w)| *w > S::zero())
        .map_or(sorted[sorted.len() - 1].0, |&(x, _)| x)
}

/// Per-generation summary written to run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats<S> {
    pub t: usize,
    pub epsilon: S,
    pub ess: S,
    pub acceptance_rate: f64,
    pub sims_used: u64,
    pub weighted_mean: Vec<S>,
    pub weighted_var: Vec<S>,
    /// Per dimension, values at [`REPORTED_QUANTILES`].
    pub quantiles: Vec<[S; 5]>,
}

impl<S: Real> GenerationStats<S> {
    pub fn from_population(pop: &Population<S>) -> Result<Self> {
        Self::from_weighted(
            pop.t,
            pop.epsilon,
            &pop.particles,
            &pop.weights(),
            pop.acceptance_rate(),
            pop.sims_used,
        )
    }

    pub fn from_weighted<P: AsRef<[S]>>(
        t: usize,
        epsilon: S,
        points: &[P],
        weights: &[S],
        acceptance_rate: f64,
        sims_used: u64,
    ) -> Result<Self> {
        let (weighted_mean, weighted_var) = weighted_mean_var(points, weights)?;
        let quantiles = (0..weighted_mean.len())
            .map(|k| {
                let sorted = sorted_column(points, weights, k)?;
                Ok(REPORTED_QUANTILES.map(|q| quantile_sorted(&sorted, q)))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            t,
            epsilon,
            ess: ess(weights)?,
            acceptance_rate,
            sims_used,
            weighted_mean,
            weighted_var,
            quantiles,
        })
    }
}

/// A one-dimensional posterior known in closed form.
pub trait PosteriorOracle: Send + Sync {
    fn cdf(&self, x: f64) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;

    /// Inverse CDF by bisection; override when a closed form exists.
    fn quantile(&self, p: f64) -> f64 {
        let sd = self.variance().sqrt();
        let (mut lo, mut hi) = (self.mean() - sd, self.mean() + sd);
        while self.cdf(lo) > p {
            lo -= hi - lo;
        }
        while self.cdf(hi) < p {
            hi += hi - lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub mean_abs_err: f64,
    pub var_rel_err: f64,
    pub ks_statistic: f64,
}

/// Compares coordinate `dim` of a weighted sample against `oracle`. The KS
/// statistic is the largest CDF gap over a 512-point grid spanning the
/// oracle's 0.001 to 0.999 quantiles.
pub fn compare_to_oracle<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
    dim: usize,
    oracle: &dyn PosteriorOracle,
) -> Result<OracleComparison> {
    check_normalized(weights)?;
    let sorted: Vec<(f64, f64)> = sorted_column(points, weights, dim)?
        .into_iter()
        .map(|(x, w)| (x.to_f64_lossy(), w.to_f64_lossy()))
        .collect();
    let (mean, var) = {
        let m: f64 = sorted.iter().map(|&(x, w)| w * x).sum();
        let v: f64 = sorted.iter().map(|&(x, w)| w * (x - m) * (x - m)).sum();
        (m, v)
    };
    let lo = oracle.quantile(0.001);
    let hi = oracle.quantile(0.999);
    let step = (hi - lo) / (KS_GRID_POINTS - 1) as f64;
    let mut ks: f64 = 0.0;
    let mut idx = 0;
    let mut acc = 0.0;
    for g in 0..KS_GRID_POINTS {
        let x = if g == KS_GRID_POINTS - 1 {
            hi
        } else {
            lo + step * g as f64
        };
        while idx < sorted.len() && sorted[idx].0 <= x {
            acc += sorted[idx].1;
            idx += 1;
        }
        ks = ks.max((acc - oracle.cdf(x)).abs());
    }
    Ok(OracleComparison {
        mean_abs_err: (mean - oracle.mean()).abs(),
        var_rel_err: (var - oracle.variance()).abs() / oracle.variance(),
        ks_statistic: ks,
    })
}

/// Two-sample KS statistic between weighted empirical CDFs of coordinate `dim`.
pub fn ks_two_sample<S: Real, P: AsRef<[S]>, Q: AsRef<[S]>>(
    a: &[P],
    a_weights: &[S],
    b: &[Q],
    b_weights: &[S],
    dim: usize,
) -> Result<f64> {
    check_normalized(a_weights)?;
    check_normalized(b_weights)?;
    let a = sorted_column(a, a_weights, dim)?;
    let b = sorted_column(b, b_weights, dim)?;
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (S::zero(), S::zero());
    let mut ks = S::zero();
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i].0 <= x {
            fa = fa + a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 <= x {
            fb = fb + b[j].1;
            j += 1;
        }
        ks = ks.max((fa - fb).abs());
    }
    Ok(ks.to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::attempt_rng;
    use crate::kernel::weighted_moments;
    use proptest::prelude::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    struct StdNormal;

    impl PosteriorOracle for StdNormal {
        fn cdf(&self, x: f64) -> f64 {
            0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
        }
        fn mean(&self) -> f64 {
            0.0
        }
        fn variance(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn ess_examples() {
        assert!((ess(&[0.25f64; 4]).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(ess(&[1.0f64, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((ess(&[0.5f64, 0.3, 0.2]).unwrap() - 1.0 / 0.38).abs() < 1e-12);
        assert!(ess(&[0.5f64, 0.3]).is_err());
    }

    #[test]
    fn quantile_examples() {
        let third = 1.0 / 3.0;
        let w = [third; 3];
        assert_eq!(
            weighted_quantile(&pts(&[3.0, 1.0, 2.0]), &w, 0.5, 0).unwrap(),
            2.0
        );
        assert_eq!(
            weighted_quantile(&pts(&[0.0, 10.0]), &[0.9, 0.1], 0.5, 0).unwrap(),
            0.0
        );
        assert!(weighted_quantile(&pts(&[0.0]), &[1.0], 0.0, 0).is_err());
        assert!(weighted_quantile(&pts(&[0.0]), &[1.0], 1.0, 0).is_err());
    }

    #[test]
    fn normal_upper_quantile() {
        // sd of the 0.975 sample quantile at n = 1e4 is ~0.028
        let mut rng = attempt_rng(0, 0, 0);
        let n = 10_000;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![f64::std_normal(&mut rng)]).collect();
        let q = weighted_quantile(&xs, &vec![1.0 / n as f64; n], 0.975, 0).unwrap();
        assert!((q - 1.959_963_985).abs() < 0.08, "{q}");
    }

    #[test]
    fn oracle_draws_have_small_ks() {
        // DKW: P(sup|F_n - F| > 0.02) ≤ 2 exp(-2 n 0.02²) = 6.7e-4 at n = 1e4
        let mut rng = attempt_rng(1, 0, 0);
        let n = 10_000;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![f64::std_normal(&mut rng)]).collect();
        let c = compare_to_oracle(&xs, &vec![1.0 / n as f64; n], 0, &StdNormal).unwrap();
        assert!(c.ks_statistic < 0.02, "{c:?}");
    }

    #[test]
    fn single_particle_at_mean() {
        let c = compare_to_oracle(&pts(&[0.0]), &[1.0], 0, &StdNormal).unwrap();
        assert_eq!(c.var_rel_err, 1.0);
        assert_eq!(c.mean_abs_err, 0.0);
    }

    #[test]
    fn two_sample_ks_examples() {
        let a = pts(&[0.0, 1.0]);
        let w = [0.5, 0.5];
        assert_eq!(ks_two_sample(&a, &w, &a, &w, 0).unwrap(), 0.0);
        let b = pts(&[2.0, 3.0]);
        assert_eq!(ks_two_sample(&a, &w, &b, &w, 0).unwrap(), 1.0);
        let c = pts(&[0.5, 1.0]);
        assert_eq!(ks_two_sample(&a, &w, &c, &w, 0).unwrap(), 0.5);
    }

    #[test]
    fn stats_from_weighted_sample() {
        let s = GenerationStats::from_weighted(
            2,
            0.5,
            &pts(&[0.0, 1.0, 2.0]),
            &[0.2, 0.3, 0.5],
            0.25,
            40,
        )
        .unwrap();
        assert!((s.weighted_mean[0] - 1.3).abs() < 1e-15);
        assert!((s.weighted_var[0] - 0.61).abs() < 1e-15);
        assert_eq!(s.quantiles[0], [0.0, 1.0, 1.0, 2.0, 2.0]);
        assert!((s.ess - 1.0 / 0.38).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ess_permutation_invariant(raw in prop::collection::vec(0.01f64..1.0, 2..20), rot in 0usize..20) {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let mut r = w.clone();
            r.rotate_left(rot % w.len());
            r.reverse();
            let (a, b) = (ess(&w).unwrap(), ess(&r).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn ess_drops_when_mass_moves_to_heavier(
            raw in prop::collection::vec(0.01f64..1.0, 2..20),
            i in 0usize..20,
            j in 0usize..20,
            frac in 0.01f64..1.0,
        ) {
            let n = raw.len();
            let (i, j) = (i % n, j % n);
            prop_assume!(i != j);
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let (light, heavy) = if w[i] <= w[j] { (i, j) } else { (j, i) };
            let mut moved = w.clone();
            let delta = frac * w[light];
            moved[light] -= delta;
            moved[heavy] += delta;
            prop_assert!(ess(&moved).unwrap() < ess(&w).unwrap());
        }

        #[test]
        fn moments_agree_with_kernel(
            xs in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 2..40),
            raw in prop::collection::vec(0.01f64..1.0, 40),
        ) {
            let raw = &raw[..xs.len()];
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let (m1, v1) = weighted_mean_var(&xs, &w).unwrap();
            let (m2, v2) = weighted_moments(&xs, &w).unwrap();
            for k in 0..2 {
                prop_assert!((m1[k] - m2[k]).abs() <= 1e-12 * (1.0 + m2[k].abs()));
                prop_assert!((v1[k] - v2[k]).abs() <= 1e-12 * (1.0 + v2[k].abs()));
            }
        }
    }
}
