//! Normal mean with a normal prior: prior `N(0, 10²)`, the simulator returns
//! the mean of ten `N(θ, 1)` draws and the distance is the absolute
//! difference of means. As ε → 0 the posterior is Gaussian with precision
//! `1/100 + 10`.

use rand::RngCore;

use super::{normal_cdf, observed_data};
use crate::diagnostics::PosteriorOracle;
use crate::error::Result;
use crate::model::{Metric, ModelSpec, Prior};
use crate::scalar::Real;

pub const PRIOR_SD: f64 = 10.0;
pub const DRAWS: usize = 10;

pub fn conjugate_normal_model<S: Real>() -> Result<ModelSpec<S>> {
    let observed = observed_data().conjugate_normal.observed_mean;
    ModelSpec::new(
        super::CONJUGATE_NORMAL,
        Prior::independent_normal(vec![(S::zero(), S::lit(PRIOR_SD))])?,
        vec![S::lit(observed)],
        Metric::Euclidean,
        |theta: &[S], rng: &mut dyn RngCore| {
            let sum: S = (0..DRAWS).map(|_| theta[0] + S::std_normal(rng)).sum();
            vec![sum / S::lit(DRAWS as f64)]
        },
    )
}

/// Exact posterior in the ε → 0 limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateNormalOracle {
    pub mean: f64,
    pub variance: f64,
}

impl ConjugateNormalOracle {
    pub fn new(observed_mean: f64) -> Self {
        let precision = 1.0 / (PRIOR_SD * PRIOR_SD) + DRAWS as f64;
        Self {
            mean: DRAWS as f64 * observed_mean / precision,
            variance: 1.0 / precision,
        }
    }

    pub fn bundled() -> Self {
        Self::new(observed_data().conjugate_normal.observed_mean)
    }
}

impl PosteriorOracle for ConjugateNormalOracle {
    fn cdf(&self, x: f64) -> f64 {
        normal_cdf((x - self.mean) / self.variance.sqrt())
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn variance(&self) -> f64 {
        self.variance
    }
}
