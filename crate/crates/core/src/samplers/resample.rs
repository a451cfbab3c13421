use rand::Rng;

use crate::error::{AbcError, Result};
use crate::scalar::Real;

/// Tolerance on `Σ w = 1` for resampling and population weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_normalized<S: Real>(weights: &[S]) -> Result<()> {
    let sum: S = weights.iter().copied().sum();
    let bad = weights.is_empty()
        || weights.iter().any(|&w| !(w >= S::zero() && w.is_finite()))
        || (sum - S::one()).abs() > S::normalization_tolerance(WEIGHT_TOLERANCE);
    if bad {
        Err(AbcError::UnnormalizedWeights {
            sum: sum.to_f64_lossy(),
        })
    } else {
        Ok(())
    }
}

/// Multinomial draws by inverse CDF over cumulative weights.
#[derive(Debug, Clone)]
pub struct Resampler<S> {
    cumulative: Vec<S>,
    last_live: usize,
}

impl<S: Real> Resampler<S> {
    pub fn new(weights: &[S]) -> Result<Self> {
        check_normalized(weights)?;
        let mut acc = S::zero();
        let cumulative = weights
            .iter()
            .map(|&w| {
                acc = acc + w;
                acc
            })
            .collect();
        let last_live = weights
            .iter()
            .rposition(|&w| w > S::zero())
            .ok_or(AbcError::UnnormalizedWeights { sum: 0.0 })?;
        Ok(Self {
            cumulative,
            last_live,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = S::unit_uniform(rng) * total;
        // first index whose cumulative weight exceeds u; zero-weight entries
        // never satisfy this strictly
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.last_live)
    }
}

/// Draws index `j` with probability `weights[j]`.
pub fn resample_index<S: Real, R: Rng + ?Sized>(weights: &[S], rng: &mut R) -> Result<usize> {
    Ok(Resampler::new(weights)?.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::attempt_rng;

    #[test]
    fn single_particle() {
        let mut rng = attempt_rng(0, 0, 0);
        for _ in 0..100 {
            assert_eq!(resample_index(&[1.0f64], &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn zero_weight_never_drawn() {
        let mut rng = attempt_rng(0, 0, 1);
        let r = Resampler::new(&[0.0f64, 1.0]).unwrap();
        assert!((0..10_000).all(|_| r.draw(&mut rng) == 1));
        let r = Resampler::new(&[1.0f64, 0.0]).unwrap();
        assert!((0..10_000).all(|_| r.draw(&mut rng) == 0));
    }

    #[test]
    fn halves_are_balanced() {
        // binomial sd at 1e5 draws is 0.0016
        let mut rng = attempt_rng(0, 0, 2);
        let r = Resampler::new(&[0.5f64, 0.5]).unwrap();
        let n = 100_000;
        let zeros = (0..n).filter(|_| r.draw(&mut rng) == 0).count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn unnormalized_rejected() {
        let mut rng = attempt_rng(0, 0, 3);
        assert!(resample_index(&[0.5f64, 0.6], &mut rng).is_err());
        assert!(resample_index::<f64, _>(&[], &mut rng).is_err());
        assert!(resample_index(&[1.5f64, -0.5], &mut rng).is_err());
    }
}
