//! The contract every generative model satisfies: a prior, a simulator that
//! maps parameters to summary statistics, observed summaries and a distance.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{AbcError, Result};
use crate::scalar::Real;

/// Prior over the parameter vector. All families factor over dimensions.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior<S> {
    /// Independent uniforms, one `(low, high)` pair per dimension.
    UniformBox(Vec<(S, S)>),
    /// Independent normals, one `(mean, sd)` pair per dimension.
    IndependentNormal(Vec<(S, S)>),
}

impl<S: Real> Prior<S> {
    pub fn uniform_box(bounds: Vec<(S, S)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(AbcError::InvalidConfig("prior has no dimensions".into()));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(AbcError::InvalidConfig(format!(
                    "uniform prior bound {k}: need finite low < high, got ({lo}, {hi})"
                )));
            }
        }
        Ok(Prior::UniformBox(bounds))
    }

    pub fn independent_normal(params: Vec<(S, S)>) -> Result<Self> {
        if params.is_empty() {
            return Err(AbcError::InvalidConfig("prior has no dimensions".into()));
        }
        for (k, &(mean, sd)) in params.iter().enumerate() {
            if !(mean.is_finite() && sd.is_finite() && sd > S::zero()) {
                return Err(AbcError::InvalidConfig(format!(
                    "normal prior dimension {k}: need finite mean and sd > 0, got ({mean}, {sd})"
                )));
            }
        }
        Ok(Prior::IndependentNormal(params))
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::UniformBox(b) => b.len(),
            Prior::IndependentNormal(p) => p.len(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        match self {
            Prior::UniformBox(bounds) => bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * S::unit_uniform(rng))
                .collect(),
            Prior::IndependentNormal(params) => params
                .iter()
                .map(|&(mean, sd)| mean + sd * S::std_normal(rng))
                .collect(),
        }
    }

    /// Exact log-density; `-inf` outside the support.
    pub fn log_pdf(&self, theta: &[S]) -> Result<S> {
        check_dim(self.dim(), theta.len())?;
        Ok(match self {
            Prior::UniformBox(bounds) => {
                let mut lp = S::zero();
                for (&x, &(lo, hi)) in theta.iter().zip(bounds) {
                    // closed support: sample() can return `lo` exactly
                    if !(x >= lo && x <= hi) {
                        return Ok(S::neg_infinity());
                    }
                    lp = lp - (hi - lo).ln();
                }
                lp
            }
            Prior::IndependentNormal(params) => {
                let half_ln_2pi = (S::TAU()).ln() * S::lit(0.5);
                theta
                    .iter()
                    .zip(params)
                    .map(|(&x, &(mean, sd))| {
                        let z = (x - mean) / sd;
                        -half_ln_2pi - sd.ln() - S::lit(0.5) * z * z
                    })
                    .sum()
            }
        })
    }

    pub fn in_support(&self, theta: &[S]) -> bool {
        self.log_pdf(theta)
            .map(|lp| lp > S::neg_infinity())
            .unwrap_or(false)
    }
}

/// Distance between summary vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric<S> {
    Euclidean,
    /// Euclidean after dividing coordinate `k` by `scales[k]`.
    ScaledEuclidean(Vec<S>),
}

impl<S: Real> Default for Metric<S> {
    fn default() -> Self {
        Metric::Euclidean
    }
}

pub fn distance<S: Real>(a: &[S], b: &[S], metric: &Metric<S>) -> Result<S> {
    check_dim(a.len(), b.len())?;
    let sq: S = match metric {
        Metric::Euclidean => a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum(),
        Metric::ScaledEuclidean(scales) => {
            check_dim(a.len(), scales.len())?;
            a.iter()
                .zip(b)
                .zip(scales)
                .map(|((&x, &y), &s)| {
                    let z = (x - y) / s;
                    z * z
                })
                .sum()
        }
    };
    Ok(sq.sqrt())
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(AbcError::DimensionMismatch { expected, got })
    }
}

/// Forward simulator: parameters and a random stream in, summary statistics out.
pub trait Simulator<S>: Send + Sync {
    fn simulate(&self, theta: &[S], rng: &mut dyn RngCore) -> Vec<S>;
}

impl<S, F> Simulator<S> for F
where
    F: Fn(&[S], &mut dyn RngCore) -> Vec<S> + Send + Sync,
{
    fn simulate(&self, theta: &[S], rng: &mut dyn RngCore) -> Vec<S> {
        self(theta, rng)
    }
}

/// A prior, simulator, observed summaries and metric bundled together.
///
/// Clones share the simulator call counter.
#[derive(Clone)]
pub struct ModelSpec<S> {
    name: String,
    prior: Prior<S>,
    observed: Vec<S>,
    metric: Metric<S>,
    simulator: Arc<dyn Simulator<S>>,
    calls: Arc<AtomicU64>,
}

impl<S: Real> ModelSpec<S> {
    pub fn new(
        name: impl Into<String>,
        prior: Prior<S>,
        observed: Vec<S>,
        metric: Metric<S>,
        simulator: impl Simulator<S> + 'static,
    ) -> Result<Self> {
        if observed.is_empty() {
            return Err(AbcError::InvalidConfig(
                "observed summaries are empty".into(),
            ));
        }
        if observed.iter().any(|x| !x.is_finite()) {
            return Err(AbcError::InvalidConfig(
                "observed summaries must be finite".into(),
            ));
        }
        if let Metric::ScaledEuclidean(scales) = &metric {
            check_dim(observed.len(), scales.len())?;
            if scales.iter().any(|&s| !(s.is_finite() && s > S::zero())) {
                return Err(AbcError::InvalidConfig(
                    "metric scales must be positive".into(),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            prior,
            observed,
            metric,
            simulator: Arc::new(simulator),
            calls: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn prior(&self) -> &Prior<S> {
        &self.prior
    }

    pub fn observed(&self) -> &[S] {
        &self.observed
    }

    pub fn metric(&self) -> &Metric<S> {
        &self.metric
    }

    pub fn param_dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn summary_dim(&self) -> usize {
        self.observed.len()
    }

    /// Runs the simulator once and returns the summaries.
    pub fn simulate(&self, theta: &[S], rng: &mut dyn RngCore) -> Result<Vec<S>> {
        check_dim(self.param_dim(), theta.len())?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let summaries = self.simulator.simulate(theta, rng);
        if summaries.len() != self.summary_dim() {
            return Err(AbcError::InvalidSummary(format!(
                "expected {} summaries, got {}",
                self.summary_dim(),
                summaries.len()
            )));
        }
        if summaries.iter().any(|x| !x.is_finite()) {
            return Err(AbcError::InvalidSummary("non-finite summary".into()));
        }
        Ok(summaries)
    }

    /// Simulates at `theta` and returns the distance to the observed summaries.
    pub fn simulate_distance(&self, theta: &[S], rng: &mut dyn RngCore) -> Result<S> {
        let s = self.simulate(theta, rng)?;
        distance(&s, &self.observed, &self.metric)
    }

    /// Total simulator invocations across this spec and all of its clones.
    pub fn simulator_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<S: Real> fmt::Debug for ModelSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("prior", &self.prior)
            .field("observed", &self.observed)
            .field("metric", &self.metric)
            .finish_non_exhaustive()
    }
}
