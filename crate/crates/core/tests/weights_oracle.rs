//! PMC weights against a brute-force mixture-density evaluation that shares
//! no code with the library's kernel.

use abc_core::{
    abc_pmc, attempt_rng, benchmarks, pmc_log_weights, Engine, KernelScale, ModelSpec, Prior, Real,
    SamplerSettings, ToleranceSchedule,
};
use rand::Rng;
use rand::RngCore;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

fn gauss_pdf(x: &[f64], c: &[f64], tau2: &[f64]) -> f64 {
    let mut p = 1.0;
    for k in 0..x.len() {
        let z = x[k] - c[k];
        p *= (-z * z / (2.0 * tau2[k])).exp() / (2.0 * std::f64::consts::PI * tau2[k]).sqrt();
    }
    p
}

fn prior_pdf(prior: &Prior<f64>, x: &[f64]) -> f64 {
    match prior {
        Prior::UniformBox(b) => {
            if x.iter().zip(b).all(|(&v, &(lo, hi))| v >= lo && v <= hi) {
                b.iter().map(|&(lo, hi)| 1.0 / (hi - lo)).product()
            } else {
                0.0
            }
        }
        Prior::IndependentNormal(p) => x
            .iter()
            .zip(p)
            .map(|(&v, &(m, s))| {
                let z = (v - m) / s;
                (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            })
            .product(),
    }
}

#[test]
fn random_instances_match_brute_force() {
    let engine = Engine::new(1).unwrap();
    let mut rng = attempt_rng(2024, 0, 0);
    for _ in 0..200 {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(3..=50);
        let prior = if rng.random::<bool>() {
            Prior::uniform_box(vec![(-4.0, 4.0); d]).unwrap()
        } else {
            Prior::independent_normal(vec![(0.5, 2.0); d]).unwrap()
        };
        let tau2: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..3.0)).collect();
        let scale = KernelScale::diagonal(tau2.clone()).unwrap();
        let prev: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let new: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let got = pmc_log_weights(&prior, &scale, &prev, &w, &new, &engine).unwrap();
        for (theta, lw) in new.iter().zip(got) {
            let mix: f64 = prev
                .iter()
                .zip(&w)
                .map(|(c, &wj)| wj * gauss_pdf(theta, c, &tau2))
                .sum();
            let expect = prior_pdf(&prior, theta) / mix;
            assert!(((lw.exp() - expect) / expect).abs() < 1e-10);
        }
    }
}

#[test]
fn no_out_of_support_point_reaches_simulator() {
    let violations = Arc::new(AtomicU64::new(0));
    let v = violations.clone();
    let prior = Prior::uniform_box(vec![(0.0, 1.0)]).unwrap();
    let check = prior.clone();
    let model = ModelSpec::new(
        "edge",
        prior,
        vec![0.0],
        abc_core::Metric::Euclidean,
        move |t: &[f64], rng: &mut dyn RngCore| {
            if !check.in_support(t) {
                v.fetch_add(1, Ordering::Relaxed);
            }
            vec![t[0] + 0.2 * f64::std_normal(rng)]
        },
    )
    .unwrap();
    // posterior piles up at the boundary, so many perturbations fall outside
    let s = ToleranceSchedule::new(vec![1.0, 0.3, 0.1, 0.05]).unwrap();
    let pops = abc_pmc(&model, &s, &SamplerSettings::new(500, 3).with_workers(2)).unwrap();
    assert_eq!(violations.load(Ordering::Relaxed), 0);
    let total: u64 = pops.iter().map(|p| p.sims_used).sum();
    assert_eq!(total, model.simulator_calls());
}

#[test]
fn all_models_worker_invariant() {
    for id in benchmarks::MODEL_IDS {
        let schedule = match id {
            benchmarks::COALESCENT_MSAT => vec![3.0, 2.0],
            _ => vec![2.0, 1.0, 0.5],
        };
        let s = ToleranceSchedule::new(schedule).unwrap();
        let run = |workers| {
            let m = benchmarks::model_by_id::<f64>(id).unwrap();
            abc_pmc(&m, &s, &SamplerSettings::new(200, 77).with_workers(workers)).unwrap()
        };
        let one = run(1);
        assert_eq!(one, run(2), "{id}");
        assert_eq!(one, run(8), "{id}");
    }
}

#[test]
fn f32_sampler_runs() {
    let m = benchmarks::model_by_id::<f32>("mixture-toy").unwrap();
    let s = ToleranceSchedule::new(vec![2.0f32, 0.5]).unwrap();
    let pops = abc_pmc(&m, &s, &SamplerSettings::new(300, 1)).unwrap();
    for p in &pops {
        p.validate().unwrap();
    }
}
