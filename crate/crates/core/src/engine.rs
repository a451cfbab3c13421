//! Deterministic parallel driver for simulation attempts.
//!
//! Every attempt owns an RNG stream derived purely from
//! `(seed, generation, attempt counter)`, and accepted particles are taken in
//! attempt-counter order. Output therefore does not depend on the number of
//! workers or on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{AbcError, Result};
use crate::kernel::KernelScale;
use crate::model::ModelSpec;
use crate::samplers::resample::Resampler;
use crate::samplers::{Particle, Population};
use crate::scalar::Real;

/// RNG driving a single attempt.
pub type AttemptRng = ChaCha8Rng;

/// Largest number of attempts dispatched in one batch.
pub const MAX_BATCH: u64 = 1 << 18;

/// Redraws of `(ancestor, perturbation)` allowed before giving up on finding
/// a proposal inside the prior support.
pub const MAX_SUPPORT_REDRAWS: u64 = 1_000_000;

/// Stream for attempt `counter` of generation `generation`.
///
/// The `(seed, generation)` pair forms the ChaCha key and the counter selects
/// one of its 2^64 streams, so the mapping is pure and distinct pairs never
/// share a keystream.
pub fn attempt_rng(seed: u64, generation: u64, counter: u64) -> AttemptRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&generation.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(counter);
    rng
}

/// Global cap on simulator calls for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    limit: Option<u64>,
    used: u64,
}

impl Budget {
    pub fn new(limit: Option<u64>) -> Self {
        Self { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Self::new(None)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit.map_or(u64::MAX, |l| l.saturating_sub(self.used))
    }

    pub(crate) fn charge(&mut self, sims: u64) {
        self.used += sims;
    }
}

/// One simulated proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt<S> {
    pub theta: Vec<S>,
    pub distance: S,
    pub ancestor: Option<usize>,
}

/// Result of filling one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Accepted<S> {
    pub particles: Vec<Attempt<S>>,
    /// Attempt counter of each accepted particle, in order.
    pub attempt_ids: Vec<u64>,
    /// Simulator calls spent, including surplus attempts in the last batch.
    pub sims_used: u64,
}

/// Pool of workers executing attempts.
pub struct Engine {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("workers", &self.workers)
            .finish()
    }
}

impl Engine {
    /// `workers == 0` means one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| AbcError::InvalidConfig(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { workers, pool })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Maps `f` over `0..n` on the pool, preserving index order.
    pub fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).map(f).collect(),
        }
    }

    /// Runs attempts until `needed` of them land within `epsilon`.
    ///
    /// `attempt` must call the simulator exactly once.
    pub fn collect_accepted<S, F>(
        &self,
        seed: u64,
        generation: u64,
        needed: usize,
        epsilon: S,
        budget: &mut Budget,
        attempt: F,
    ) -> Result<Accepted<S>>
    where
        S: Real,
        F: Fn(&mut AttemptRng) -> Result<Attempt<S>> + Sync + Send,
    {
        let mut particles = Vec::with_capacity(needed);
        let mut attempt_ids = Vec::with_capacity(needed);
        let mut counter = 0u64;
        while particles.len() < needed {
            let remaining = (needed - particles.len()) as u64;
            let allowed = budget.remaining();
            if allowed == 0 {
                return Err(AbcError::BudgetExhausted {
                    accepted: particles.len(),
                    needed,
                    sims_used: budget.used(),
                });
            }
            let batch = next_batch(counter, particles.len() as u64, remaining).min(allowed);
            let outcomes = self.map_indexed(batch as usize, |k| {
                let id = counter + k as u64;
                attempt(&mut attempt_rng(seed, generation, id))
            });
            budget.charge(batch);
            for (k, outcome) in outcomes.into_iter().enumerate() {
                let a = outcome?;
                if particles.len() < needed && a.distance <= epsilon {
                    attempt_ids.push(counter + k as u64);
                    particles.push(a);
                }
            }
            counter += batch;
        }
        Ok(Accepted {
            particles,
            attempt_ids,
            sims_used: counter,
        })
    }
}

/// Batch size from the acceptance rate observed so far. Depends only on
/// counts, never on timing.
fn next_batch(attempted: u64, accepted: u64, remaining: u64) -> u64 {
    let guess = if attempted == 0 {
        remaining
    } else if accepted == 0 {
        attempted.saturating_mul(2)
    } else {
        // remaining / acceptance rate, plus 10%
        let want = (remaining as u128 * attempted as u128 * 11).div_ceil(accepted as u128 * 10);
        want.min(u64::MAX as u128) as u64
    };
    guess.max(remaining).clamp(1, MAX_BATCH)
}

/// Fills generation `t` by resampling `prev`, perturbing with `scale` and
/// simulating. Proposals outside the prior support are redrawn, ancestor
/// included, before any simulation. Weights are left uniform; the samplers
/// assign the real ones.
pub fn propagate_generation<S: Real>(
    prev: &Population<S>,
    t: usize,
    epsilon: S,
    scale: &KernelScale<S>,
    model: &ModelSpec<S>,
    budget: &mut Budget,
    engine: &Engine,
    seed: u64,
) -> Result<Population<S>> {
    let n = prev.particles.len();
    let resampler = Resampler::new(&prev.weights())?;
    let prior = model.prior();
    let accepted = engine.collect_accepted(seed, t as u64, n, epsilon, budget, |rng| {
        for _ in 0..MAX_SUPPORT_REDRAWS {
            let j = resampler.draw(rng);
            let theta = scale.perturb(&prev.particles[j].theta, rng);
            if prior.in_support(&theta) {
                let distance = model.simulate_distance(&theta, rng)?;
                return Ok(Attempt {
                    theta,
                    distance,
                    ancestor: Some(j),
                });
            }
        }
        Err(AbcError::SupportUnreachable(MAX_SUPPORT_REDRAWS))
    })?;
    Ok(Population::from_accepted(
        t,
        epsilon,
        accepted,
        Some(scale.clone()),
    ))
}

/// Plain rejection from the prior at tolerance `epsilon`, as generation `t`.
pub(crate) fn prior_generation<S: Real>(
    model: &ModelSpec<S>,
    t: usize,
    epsilon: S,
    n: usize,
    budget: &mut Budget,
    engine: &Engine,
    seed: u64,
) -> Result<Population<S>> {
    let prior = model.prior();
    let accepted = engine.collect_accepted(seed, t as u64, n, epsilon, budget, |rng| {
        let theta = prior.sample(rng);
        let distance = model.simulate_distance(&theta, rng)?;
        Ok(Attempt {
            theta,
            distance,
            ancestor: None,
        })
    })?;
    Ok(Population::from_accepted(t, epsilon, accepted, None))
}

impl<S: Real> Population<S> {
    fn from_accepted(
        t: usize,
        epsilon: S,
        accepted: Accepted<S>,
        scale: Option<KernelScale<S>>,
    ) -> Self {
        let n = accepted.particles.len();
        let w = S::one() / S::from_usize(n).unwrap();
        Population {
            t,
            epsilon,
            particles: accepted
                .particles
                .into_iter()
                .map(|a| Particle {
                    theta: a.theta,
                    weight: w,
                    distance: a.distance,
                    ancestor: a.ancestor,
                })
                .collect(),
            scale,
            sims_used: accepted.sims_used,
            attempt_ids: accepted.attempt_ids,
        }
    }
}
