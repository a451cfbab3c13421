//! Rejection, PMC, PRC and MCMC ABC samplers.
//!
//! PMC and PRC share the same propagation step (resample, Gaussian perturb
//! with the adapted scale, accept within tolerance) and differ only in how
//! the new particles are weighted.

pub mod mcmc;
pub mod resample;
pub mod weights;

use crate::engine::{prior_generation, propagate_generation, Budget, Engine};
use crate::error::{AbcError, Result};
use crate::kernel::{adapt_scale, KernelMode, KernelScale};
use crate::model::ModelSpec;
use crate::scalar::Real;

pub use mcmc::{abc_mcmc, run_abc_mcmc, McmcChain, McmcOptions, McmcRun};
pub use resample::{resample_index, Resampler, WEIGHT_TOLERANCE};
pub use weights::{pmc_log_weights, prc_log_weights};

#[derive(Debug, Clone, PartialEq)]
pub struct Particle<S> {
    pub theta: Vec<S>,
    pub weight: S,
    /// Realized distance to the observed summaries.
    pub distance: S,
    /// Index into the previous generation this particle was perturbed from.
    pub ancestor: Option<usize>,
}

impl<S> AsRef<[S]> for Particle<S> {
    fn as_ref(&self) -> &[S] {
        &self.theta
    }
}

/// One generation of weighted particles.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<S> {
    /// Generation index, starting at 1.
    pub t: usize,
    pub epsilon: S,
    pub particles: Vec<Particle<S>>,
    /// Kernel that proposed this generation; `None` for draws from the prior.
    pub scale: Option<KernelScale<S>>,
    pub sims_used: u64,
    /// Attempt counters of the accepted particles within this generation.
    pub attempt_ids: Vec<u64>,
}

impl<S: Real> Population<S> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weights(&self) -> Vec<S> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn thetas(&self) -> Vec<Vec<S>> {
        self.particles.iter().map(|p| p.theta.clone()).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.sims_used == 0 {
            0.0
        } else {
            self.particles.len() as f64 / self.sims_used as f64
        }
    }

    /// Checks normalized weights and that every distance is within epsilon.
    pub fn validate(&self) -> Result<()> {
        resample::check_normalized(&self.weights())?;
        if let Some(p) = self
            .particles
            .iter()
            .find(|p| !(p.distance <= self.epsilon))
        {
            return Err(AbcError::DegeneratePopulation(format!(
                "particle distance {} exceeds epsilon {}",
                p.distance, self.epsilon
            )));
        }
        Ok(())
    }

    fn set_log_weights(&mut self, log_w: &[S]) -> Result<()> {
        let w = weights::normalize(log_w)?;
        for (p, w) in self.particles.iter_mut().zip(w) {
            p.weight = w;
        }
        Ok(())
    }
}

/// Strictly decreasing tolerances `ε_1 > … > ε_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSchedule<S>(Vec<S>);

impl<S: Real> ToleranceSchedule<S> {
    /// Entries must be nonnegative and strictly decreasing. A zero final
    /// tolerance is allowed; on continuous models it can only end in budget
    /// exhaustion.
    pub fn new(epsilons: Vec<S>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(AbcError::InvalidConfig("schedule is empty".into()));
        }
        if let Some((k, e)) = epsilons
            .iter()
            .enumerate()
            .find(|(_, e)| e.is_nan() || **e < S::zero())
        {
            return Err(AbcError::InvalidConfig(format!(
                "schedule entry {k} ({e}) must be a nonnegative number"
            )));
        }
        if let Some(k) = epsilons.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(AbcError::InvalidConfig(format!(
                "schedule must be strictly decreasing: entry {} ({}) is not below entry {} ({})",
                k + 1,
                epsilons[k + 1],
                k,
                epsilons[k]
            )));
        }
        Ok(Self(epsilons))
    }

    pub fn single(epsilon: S) -> Result<Self> {
        Self::new(vec![epsilon])
    }

    pub fn epsilons(&self) -> &[S] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> S {
        self.0[0]
    }

    pub fn last(&self) -> S {
        self.0[self.0.len() - 1]
    }
}

/// Quantile-driven tolerances: `ε_{t+1}` is the `quantile` of the accepted
/// distances of generation `t`. Only `ε_1` and the final entry (as a floor)
/// of the fixed schedule are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoSchedule {
    pub quantile: f64,
    pub max_generations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub n_particles: usize,
    pub seed: u64,
    /// Cap on simulator calls for the whole run.
    pub budget: Option<u64>,
    /// `0` picks one worker per core.
    pub workers: usize,
    pub kernel_mode: KernelMode,
    pub auto_schedule: Option<AutoSchedule>,
}

impl SamplerSettings {
    pub fn new(n_particles: usize, seed: u64) -> Self {
        Self {
            n_particles,
            seed,
            budget: None,
            workers: 1,
            kernel_mode: KernelMode::Diagonal,
            auto_schedule: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_kernel_mode(mut self, mode: KernelMode) -> Self {
        self.kernel_mode = mode;
        self
    }

    pub fn with_auto_schedule(mut self, auto: Option<AutoSchedule>) -> Self {
        self.auto_schedule = auto;
        self
    }

    fn validate(&self, min_particles: usize) -> Result<()> {
        if self.n_particles < min_particles {
            return Err(AbcError::InvalidConfig(format!(
                "need at least {min_particles} particle(s), got {}",
                self.n_particles
            )));
        }
        if let Some(a) = self.auto_schedule {
            if !(a.quantile > 0.0 && a.quantile < 1.0) || a.max_generations == 0 {
                return Err(AbcError::InvalidConfig(
                    "auto schedule needs quantile in (0, 1) and at least one generation".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Plain rejection ABC: `N` prior draws whose simulated distance is within
/// `epsilon`, equally weighted.
pub fn abc_rejection<S: Real>(
    model: &ModelSpec<S>,
    epsilon: S,
    settings: &SamplerSettings,
) -> Result<Population<S>> {
    settings.validate(1)?;
    ToleranceSchedule::single(epsilon)?;
    let engine = Engine::new(settings.workers)?;
    let mut budget = Budget::new(settings.budget);
    prior_generation(
        model,
        1,
        epsilon,
        settings.n_particles,
        &mut budget,
        &engine,
        settings.seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reweighting {
    /// Importance weight against the full kernel mixture.
    Pmc,
    /// Prior ratio to the ancestor (symmetric backward kernel).
    Prc,
}

/// Adaptive population Monte Carlo ABC.
pub fn abc_pmc<S: Real>(
    model: &ModelSpec<S>,
    schedule: &ToleranceSchedule<S>,
    settings: &SamplerSettings,
) -> Result<Vec<Population<S>>> {
    run_sequential(model, schedule, settings, Reweighting::Pmc, |_| Ok(()))
}

/// Partial rejection control ABC with prior-ratio weights.
pub fn abc_prc<S: Real>(
    model: &ModelSpec<S>,
    schedule: &ToleranceSchedule<S>,
    settings: &SamplerSettings,
) -> Result<Vec<Population<S>>> {
    run_sequential(model, schedule, settings, Reweighting::Prc, |_| Ok(()))
}

/// Runs PMC or PRC, handing each finished generation to `on_generation`
/// before the next one starts.
pub fn run_sequential<S: Real>(
    model: &ModelSpec<S>,
    schedule: &ToleranceSchedule<S>,
    settings: &SamplerSettings,
    reweighting: Reweighting,
    mut on_generation: impl FnMut(&Population<S>) -> Result<()>,
) -> Result<Vec<Population<S>>> {
    settings.validate(2)?;
    let engine = Engine::new(settings.workers)?;
    let mut budget = Budget::new(settings.budget);
    let n = settings.n_particles;
    let seed = settings.seed;

    let (max_generations, floor) = match settings.auto_schedule {
        Some(auto) => (
            auto.max_generations,
            if schedule.len() > 1 {
                schedule.last()
            } else {
                S::zero()
            },
        ),
        None => (schedule.len(), schedule.last()),
    };

    let first = prior_generation(model, 1, schedule.first(), n, &mut budget, &engine, seed)?;
    on_generation(&first)?;
    let mut populations = vec![first];

    for t in 2..=max_generations {
        let prev = &populations[populations.len() - 1];
        let epsilon = match settings.auto_schedule {
            None => schedule.epsilons()[t - 1],
            Some(auto) => {
                let next = distance_quantile(prev, auto.quantile).max(floor);
                if !(next < prev.epsilon) {
                    break;
                }
                next
            }
        };
        let scale = adapt_scale(&prev.particles, &prev.weights(), settings.kernel_mode)?;
        let mut pop =
            propagate_generation(prev, t, epsilon, &scale, model, &mut budget, &engine, seed)?;
        let log_w = match reweighting {
            Reweighting::Pmc => pmc_log_weights(
                model.prior(),
                &scale,
                &prev.particles,
                &prev.weights(),
                &pop.particles,
                &engine,
            )?,
            Reweighting::Prc => {
                let ancestors: Vec<usize> = pop
                    .particles
                    .iter()
                    .map(|p| p.ancestor.expect("propagated particle has an ancestor"))
                    .collect();
                prc_log_weights(model.prior(), &prev.particles, &pop.particles, &ancestors)?
            }
        };
        pop.set_log_weights(&log_w)?;
        on_generation(&pop)?;
        populations.push(pop);
    }
    Ok(populations)
}

/// Left-continuous empirical quantile of the accepted distances.
fn distance_quantile<S: Real>(pop: &Population<S>, q: f64) -> S {
    let mut d: Vec<S> = pop.particles.iter().map(|p| p.distance).collect();
    d.sort_by(|a, b| a.partial_cmp(b).expect("distances are not NaN"));
    let k = ((q * d.len() as f64).ceil() as usize).clamp(1, d.len());
    d[k - 1]
}
