//! Importance weights for the sequential samplers.

use crate::engine::Engine;
use crate::error::{AbcError, Result};
use crate::kernel::{KernelScale, PreparedKernel};
use crate::model::Prior;
use crate::scalar::{log_sum_exp, normalize_log_weights, Real};

/// Unnormalized PMC log-weights
/// `ln π(θ_i) - ln Σ_j w_j K(θ_i | θ_j)`, where `(θ_j, w_j)` is the previous
/// population and `K` the Gaussian kernel with covariance `scale`.
pub fn pmc_log_weights<S: Real, P: AsRef<[S]> + Sync, Q: AsRef<[S]> + Sync>(
    prior: &Prior<S>,
    scale: &KernelScale<S>,
    prev_thetas: &[P],
    prev_weights: &[S],
    thetas: &[Q],
    engine: &Engine,
) -> Result<Vec<S>> {
    if prev_thetas.len() != prev_weights.len() {
        return Err(AbcError::DimensionMismatch {
            expected: prev_thetas.len(),
            got: prev_weights.len(),
        });
    }
    let d = scale.dim();
    for p in prev_thetas
        .iter()
        .map(AsRef::as_ref)
        .chain(thetas.iter().map(AsRef::as_ref))
    {
        if p.len() != d {
            return Err(AbcError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
    }
    let kernel = PreparedKernel::new(scale);
    // zero-weight ancestors contribute nothing; ln 0 = -inf drops out of the sum
    let log_prev: Vec<S> = prev_weights.iter().map(|w| w.ln()).collect();
    engine
        .map_indexed(thetas.len(), |i| {
            let theta = thetas[i].as_ref();
            let log_prior = prior.log_pdf(theta)?;
            let log_mix = log_sum_exp(
                prev_thetas
                    .iter()
                    .zip(&log_prev)
                    .map(|(c, &lw)| lw + kernel.log_density(theta, c.as_ref())),
            );
            Ok(log_prior - log_mix)
        })
        .into_iter()
        .collect()
}

/// Unnormalized PRC log-weights with a symmetric backward kernel:
/// `ln π(θ_i) - ln π(θ_{a(i)})` for ancestor `a(i)`.
pub fn prc_log_weights<S: Real, P: AsRef<[S]>, Q: AsRef<[S]>>(
    prior: &Prior<S>,
    prev_thetas: &[P],
    thetas: &[Q],
    ancestors: &[usize],
) -> Result<Vec<S>> {
    if thetas.len() != ancestors.len() {
        return Err(AbcError::DimensionMismatch {
            expected: thetas.len(),
            got: ancestors.len(),
        });
    }
    thetas
        .iter()
        .zip(ancestors)
        .map(|(theta, &a)| {
            let parent = prev_thetas.get(a).ok_or(AbcError::DimensionMismatch {
                expected: prev_thetas.len(),
                got: a + 1,
            })?;
            Ok(prior.log_pdf(theta.as_ref())? - prior.log_pdf(parent.as_ref())?)
        })
        .collect()
}

pub(crate) fn normalize<S: Real>(log_w: &[S]) -> Result<Vec<S>> {
    normalize_log_weights(log_w).ok_or_else(|| {
        AbcError::DegeneratePopulation("every importance weight is zero or non-finite".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ancestor_weight() {
        // π = 1/20 on (-10, 10), K = N(0, 1) at distance 0: 0.05 / 0.3989423
        let prior = Prior::uniform_box(vec![(-10.0f64, 10.0)]).unwrap();
        let scale = KernelScale::diagonal(vec![1.0]).unwrap();
        let engine = Engine::new(1).unwrap();
        let lw = pmc_log_weights(&prior, &scale, &[[0.0]], &[1.0], &[[0.0]], &engine).unwrap();
        assert!((lw[0].exp() - 0.125_331_413_731_550_03).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_ancestor_ignored() {
        let prior = Prior::uniform_box(vec![(-10.0f64, 10.0)]).unwrap();
        let scale = KernelScale::diagonal(vec![1.0]).unwrap();
        let engine = Engine::new(1).unwrap();
        let a = pmc_log_weights(
            &prior,
            &scale,
            &[[0.0], [3.0]],
            &[1.0, 0.0],
            &[[0.5]],
            &engine,
        )
        .unwrap();
        let b = pmc_log_weights(&prior, &scale, &[[0.0]], &[1.0], &[[0.5]], &engine).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prc_normal_prior_ratio() {
        let prior = Prior::independent_normal(vec![(0.0f64, 1.0)]).unwrap();
        let lw = prc_log_weights(&prior, &[[0.0]], &[[1.0]], &[0]).unwrap();
        assert!((lw[0].exp() - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn prc_flat_prior_is_exactly_uniform() {
        let prior = Prior::uniform_box(vec![(-10.0f64, 10.0)]).unwrap();
        let prev = [[1.0], [-3.0], [7.5]];
        let lw = prc_log_weights(&prior, &prev, &[[0.1], [2.0], [-9.0]], &[2, 0, 1]).unwrap();
        let w = normalize(&lw).unwrap();
        assert!(w.iter().all(|&x| x.to_bits() == w[0].to_bits()));
    }

    #[test]
    fn all_zero_weights_are_degenerate() {
        assert!(matches!(
            normalize(&[f64::NEG_INFINITY; 3]),
            Err(AbcError::DegeneratePopulation(_))
        ));
    }
}
