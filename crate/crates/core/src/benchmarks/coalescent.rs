//! Single-population Kingman coalescent with stepwise-mutation
//! microsatellites.
//!
//! Time is in coalescent units: with `k` lineages the next merger arrives
//! after an `Exp(k(k-1)/2)` wait. Each branch of length `L` carries
//! `Poisson(θ L / 2)` mutations, each moving the allele size by ±1.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::observed_data;
use crate::engine::attempt_rng;
use crate::error::Result;
use crate::model::{Metric, ModelSpec, Prior};
use crate::scalar::Real;

pub const SAMPLE_SIZE: usize = 30;
pub const PRIOR_LOW: f64 = 0.1;
pub const PRIOR_HIGH: f64 = 20.0;
pub const THETA_TRUE: f64 = 5.0;
pub const OBSERVED_SEED: u64 = 5;
pub const SCALE_SEED: u64 = 10_000;
pub const SCALE_SIMS: usize = 10_000;

/// Number of summaries: allele-size variance, distinct alleles, heterozygosity.
pub const N_SUMMARIES: usize = 3;

/// One realized genealogy with its allele sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Genealogy {
    /// Allele size of each sampled gene, relative to the root.
    pub allele_sizes: Vec<i64>,
    /// Total number of mutation events over the tree.
    pub mutations: u64,
    pub coalescences: usize,
    /// Length of every branch, in node creation order (root excluded).
    pub branch_lengths: Vec<f64>,
    pub tmrca: f64,
}

impl Genealogy {
    pub fn total_length(&self) -> f64 {
        self.branch_lengths.iter().sum()
    }
}

/// Simulates a genealogy of `n ≥ 2` genes and drops mutations on it.
pub fn simulate_genealogy<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Genealogy {
    assert!(n >= 2, "need at least two genes");
    let nodes = 2 * n - 1;
    let mut time = vec![0.0; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut active: Vec<usize> = (0..n).collect();
    let mut now = 0.0;
    let mut next = n;
    for k in (2..=n).rev() {
        let rate = (k * (k - 1)) as f64 / 2.0;
        now += Exp::new(rate).expect("positive rate").sample(rng);
        let i = rng.random_range(0..k);
        let mut j = rng.random_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        parent[active[i]] = next;
        parent[active[j]] = next;
        time[next] = now;
        let (hi, lo) = (i.max(j), i.min(j));
        active.swap_remove(hi);
        active[lo] = next;
        next += 1;
    }
    let root = nodes - 1;

    let mut allele = vec![0i64; nodes];
    let mut branch_lengths = vec![0.0; nodes - 1];
    let mut mutations = 0u64;
    // parents are created after their children, so walking ids downward
    // visits every parent first
    for node in (0..root).rev() {
        let p = parent[node];
        let len = time[p] - time[node];
        branch_lengths[node] = len;
        let mean = theta * len / 2.0;
        let count = if mean > 0.0 {
            Poisson::new(mean).expect("finite mean").sample(rng) as u64
        } else {
            0
        };
        let mut step = 0i64;
        for _ in 0..count {
            step += if rng.random::<bool>() { 1 } else { -1 };
        }
        mutations += count;
        allele[node] = allele[p] + step;
    }
    allele.truncate(n);
    Genealogy {
        allele_sizes: allele,
        mutations,
        coalescences: n - 1,
        branch_lengths,
        tmrca: time[root],
    }
}

/// `(allele-size sample variance, distinct alleles, expected heterozygosity)`.
///
/// Heterozygosity is the unbiased `n/(n-1) (1 - Σ p²)`, which lies in `[0, 1]`.
pub fn msat_summaries(allele_sizes: &[i64]) -> [f64; N_SUMMARIES] {
    let n = allele_sizes.len() as f64;
    let mean = allele_sizes.iter().sum::<i64>() as f64 / n;
    let var = allele_sizes
        .iter()
        .map(|&a| (a as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let mut sorted = allele_sizes.to_vec();
    sorted.sort_unstable();
    let mut sum_p2 = 0.0;
    let mut distinct = 0usize;
    for run in sorted.chunk_by(|a, b| a == b) {
        distinct += 1;
        let p = run.len() as f64 / n;
        sum_p2 += p * p;
    }
    let het = (n / (n - 1.0) * (1.0 - sum_p2)).clamp(0.0, 1.0);
    [var, distinct as f64, het]
}

/// Summaries of one coalescent realization at `theta`.
pub fn coalescent_simulate<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Vec<f64> {
    msat_summaries(&simulate_genealogy(theta, n, rng).allele_sizes).to_vec()
}

/// Pinned observed dataset and distance scales, as committed in
/// `data/observed.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoalescentData {
    pub theta_true: f64,
    pub seed: u64,
    pub allele_sizes: Vec<i64>,
    /// Prior-predictive standard deviation of each summary.
    pub summary_scales: Vec<f64>,
    pub scale_seed: u64,
    pub scale_sims: usize,
}

/// Regenerates the committed dataset from its pinned seeds.
pub fn generate_coalescent_data() -> CoalescentData {
    let allele_sizes = simulate_genealogy(
        THETA_TRUE,
        SAMPLE_SIZE,
        &mut attempt_rng(OBSERVED_SEED, 0, 0),
    )
    .allele_sizes;
    let mut rng = attempt_rng(SCALE_SEED, 0, 0);
    let sims: Vec<Vec<f64>> = (0..SCALE_SIMS)
        .map(|_| {
            let theta = PRIOR_LOW + (PRIOR_HIGH - PRIOR_LOW) * rng.random::<f64>();
            coalescent_simulate(theta, SAMPLE_SIZE, &mut rng)
        })
        .collect();
    let summary_scales = (0..N_SUMMARIES)
        .map(|k| {
            let mean = sims.iter().map(|s| s[k]).sum::<f64>() / SCALE_SIMS as f64;
            let var =
                sims.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (SCALE_SIMS - 1) as f64;
            var.sqrt()
        })
        .collect();
    CoalescentData {
        theta_true: THETA_TRUE,
        seed: OBSERVED_SEED,
        allele_sizes,
        summary_scales,
        scale_seed: SCALE_SEED,
        scale_sims: SCALE_SIMS,
    }
}

/// Prior `U(0.1, 20)` on θ, distance is Euclidean on summaries divided by
/// their prior-predictive standard deviations.
pub fn coalescent_model<S: Real>() -> Result<ModelSpec<S>> {
    let data = &observed_data().coalescent_msat;
    let observed = msat_summaries(&data.allele_sizes)
        .iter()
        .map(|&x| S::lit(x))
        .collect();
    let scales = data.summary_scales.iter().map(|&x| S::lit(x)).collect();
    ModelSpec::new(
        super::COALESCENT_MSAT,
        Prior::uniform_box(vec![(S::lit(PRIOR_LOW), S::lit(PRIOR_HIGH))])?,
        observed,
        Metric::ScaledEuclidean(scales),
        |theta: &[S], rng: &mut dyn RngCore| {
            coalescent_simulate(theta[0].to_f64_lossy(), SAMPLE_SIZE, rng)
                .into_iter()
                .map(S::lit)
                .collect()
        },
    )
}
