//! Likelihood-free Bayesian inference with sequential Monte Carlo.
//!
//! The centerpiece is [`abc_pmc`], an adaptive population Monte Carlo ABC
//! sampler: each generation resamples the previous weighted population,
//! perturbs with a Gaussian kernel whose covariance is twice the weighted
//! empirical covariance of that population, and reweights every accepted
//! particle by `π(θ) / Σ_j w_j K(θ | θ_j)`. [`abc_prc`] propagates the same
//! way but uses prior-ratio weights, which do not correct for the mixture
//! proposal and bias the posterior. [`abc_rejection`] and [`run_abc_mcmc`]
//! are the plain rejection and Metropolis-Hastings baselines.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common case.
//!
//! ```
//! use abc_core::{abc_pmc, benchmarks, SamplerSettings, ToleranceSchedule};
//!
//! let model = benchmarks::model_by_id::<f64>("mixture-toy").unwrap();
//! let schedule = ToleranceSchedule::new(vec![2.0, 0.5]).unwrap();
//! let pops = abc_pmc(&model, &schedule, &SamplerSettings::new(200, 7)).unwrap();
//! assert_eq!(pops.len(), 2);
//! ```

pub mod benchmarks;
pub mod diagnostics;
pub mod engine;
mod error;
pub mod kernel;
pub mod model;
pub mod samplers;
mod scalar;

pub use diagnostics::{
    compare_to_oracle, ess, ks_two_sample, weighted_mean_var, weighted_quantile, GenerationStats,
    OracleComparison, PosteriorOracle,
};
pub use engine::{attempt_rng, propagate_generation, AttemptRng, Budget, Engine};
pub use error::{AbcError, Result};
pub use kernel::{adapt_scale, weighted_covariance, weighted_moments, KernelMode, KernelScale};
pub use model::{distance, Metric, ModelSpec, Prior, Simulator};
pub use samplers::{
    abc_mcmc, abc_pmc, abc_prc, abc_rejection, pmc_log_weights, prc_log_weights, resample_index,
    run_abc_mcmc, run_sequential, AutoSchedule, McmcChain, McmcOptions, McmcRun, Particle,
    Population, Reweighting, SamplerSettings, ToleranceSchedule,
};
pub use scalar::{log_sum_exp, Real};

pub type Particle64 = Particle<f64>;
pub type Population64 = Population<f64>;
pub type ModelSpec64 = ModelSpec<f64>;
pub type Prior64 = Prior<f64>;
pub type KernelScale64 = KernelScale<f64>;
pub type ToleranceSchedule64 = ToleranceSchedule<f64>;
pub type GenerationStats64 = GenerationStats<f64>;
pub type McmcRun64 = McmcRun<f64>;

pub type Particle32 = Particle<f32>;
pub type Population32 = Population<f32>;
pub type ModelSpec32 = ModelSpec<f32>;
pub type KernelScale32 = KernelScale<f32>;
