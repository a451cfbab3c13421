//! Likelihood-free Metropolis-Hastings.

use rand::Rng;

use crate::engine::{attempt_rng, prior_generation, Budget, Engine};
use crate::error::{AbcError, Result};
use crate::model::ModelSpec;
use crate::scalar::Real;

use super::{Particle, SamplerSettings};

/// Generation index reserved for the chain's own RNG stream.
const CHAIN_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct McmcChain<S> {
    /// Chain state after each iteration.
    pub samples: Vec<Vec<S>>,
    /// Distance attached to each state.
    pub distances: Vec<S>,
    pub accepted: u64,
    pub sims_used: u64,
}

impl<S> McmcChain<S> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.accepted as f64 / self.samples.len() as f64
        }
    }
}

/// ABC-MCMC from `init`, which must already be within `epsilon`.
///
/// Each step proposes `θ' = θ + N(0, diag(sd²))`, then accepts with
/// probability `min(1, π(θ')/π(θ))` and only if a fresh simulation at `θ'`
/// lands within `epsilon`. The prior test runs first, so proposals it
/// rejects cost no simulation.
pub fn abc_mcmc<S: Real, R: Rng + ?Sized>(
    model: &ModelSpec<S>,
    epsilon: S,
    n_iter: usize,
    proposal_sd: &[S],
    init: &Particle<S>,
    rng: &mut R,
) -> Result<McmcChain<S>> {
    chain(model, epsilon, n_iter, proposal_sd, init, None, 0, rng)
}

fn chain<S: Real, R: Rng + ?Sized>(
    model: &ModelSpec<S>,
    epsilon: S,
    n_iter: usize,
    proposal_sd: &[S],
    init: &Particle<S>,
    max_sims: Option<u64>,
    count_accepts_from: usize,
    rng: &mut R,
) -> Result<McmcChain<S>> {
    let d = model.param_dim();
    if proposal_sd.len() != d {
        return Err(AbcError::DimensionMismatch {
            expected: d,
            got: proposal_sd.len(),
        });
    }
    if proposal_sd
        .iter()
        .any(|&s| !(s.is_finite() && s > S::zero()))
    {
        return Err(AbcError::InvalidConfig(
            "proposal sd must be positive".into(),
        ));
    }
    if !(init.distance <= epsilon) {
        return Err(AbcError::InvalidConfig(format!(
            "initial state distance {} exceeds epsilon {epsilon}",
            init.distance
        )));
    }
    let prior = model.prior();
    let mut log_prior = prior.log_pdf(&init.theta)?;
    if log_prior == S::neg_infinity() {
        return Err(AbcError::InvalidConfig(
            "initial state outside prior support".into(),
        ));
    }

    let mut theta = init.theta.clone();
    let mut dist = init.distance;
    let mut out = McmcChain {
        samples: Vec::with_capacity(n_iter),
        distances: Vec::with_capacity(n_iter),
        accepted: 0,
        sims_used: 0,
    };
    for i in 0..n_iter {
        let proposal: Vec<S> = theta
            .iter()
            .zip(proposal_sd)
            .map(|(&x, &sd)| x + sd * S::std_normal(rng))
            .collect();
        let log_prior_new = prior.log_pdf(&proposal)?;
        let u = S::unit_uniform(rng);
        if u.ln() < log_prior_new - log_prior {
            if max_sims.is_some_and(|m| out.sims_used >= m) {
                return Err(AbcError::BudgetExhausted {
                    accepted: i,
                    needed: n_iter,
                    sims_used: out.sims_used,
                });
            }
            out.sims_used += 1;
            let mut sim_rng = &mut *rng;
            let new_dist = model.simulate_distance(&proposal, &mut sim_rng)?;
            if new_dist <= epsilon {
                theta = proposal;
                dist = new_dist;
                log_prior = log_prior_new;
                if i >= count_accepts_from {
                    out.accepted += 1;
                }
            }
        }
        out.samples.push(theta.clone());
        out.distances.push(dist);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcOptions<S> {
    pub epsilon: S,
    /// Iterations kept after burn-in.
    pub n_iter: usize,
    pub burn_in: usize,
    pub proposal_sd: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcRun<S> {
    /// Post-burn-in chain. `accepted` counts kept iterations only;
    /// `sims_used` covers burn-in too.
    pub chain: McmcChain<S>,
    pub init: Particle<S>,
    /// Simulator calls spent finding the starting point.
    pub init_sims: u64,
}

impl<S> McmcRun<S> {
    pub fn total_sims(&self) -> u64 {
        self.init_sims + self.chain.sims_used
    }
}

/// Full ABC-MCMC run: a starting point found by prior rejection, burn-in,
/// then `n_iter` kept iterations, all charged to the budget.
pub fn run_abc_mcmc<S: Real>(
    model: &ModelSpec<S>,
    options: &McmcOptions<S>,
    settings: &SamplerSettings,
) -> Result<McmcRun<S>> {
    if options.n_iter == 0 {
        return Err(AbcError::InvalidConfig("n_iter must be positive".into()));
    }
    let engine = Engine::new(settings.workers)?;
    let mut budget = Budget::new(settings.budget);
    let start = prior_generation(
        model,
        1,
        options.epsilon,
        1,
        &mut budget,
        &engine,
        settings.seed,
    )?;
    let init = start.particles.into_iter().next().expect("one particle");
    let mut rng = attempt_rng(settings.seed, CHAIN_STREAM, 0);
    let total = options.burn_in + options.n_iter;
    let remaining = settings.budget.map(|_| budget.remaining());
    let mut chain = chain(
        model,
        options.epsilon,
        total,
        &options.proposal_sd,
        &init,
        remaining,
        options.burn_in,
        &mut rng,
    )
    .map_err(|e| match e {
        AbcError::BudgetExhausted {
            accepted,
            needed,
            sims_used,
        } => AbcError::BudgetExhausted {
            accepted,
            needed,
            sims_used: sims_used + start.sims_used,
        },
        other => other,
    })?;
    chain.samples.drain(..options.burn_in);
    chain.distances.drain(..options.burn_in);
    Ok(McmcRun {
        chain,
        init,
        init_sims: start.sims_used,
    })
}
