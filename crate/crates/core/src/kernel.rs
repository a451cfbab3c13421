//! Gaussian perturbation kernel and its automatic scale adaptation: the
//! kernel covariance for generation `t + 1` is twice the weighted empirical
//! covariance of generation `t`.

use rand::Rng;

use crate::error::{AbcError, Result};
use crate::scalar::Real;

/// Variances below this are treated as particle collapse.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Tolerance on `Σ w = 1` accepted by [`weighted_moments`].
pub const MOMENT_WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    #[default]
    Diagonal,
    FullCovariance,
}

/// Covariance of the Gaussian forward kernel, with the factorization needed
/// to sample from it and evaluate its density.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelScale<S> {
    Diagonal {
        tau2: Vec<S>,
    },
    Full {
        cov: Vec<Vec<S>>,
        /// Lower Cholesky factor of `cov`.
        chol: Vec<Vec<S>>,
    },
}

impl<S: Real> KernelScale<S> {
    pub fn diagonal(tau2: Vec<S>) -> Result<Self> {
        if tau2.is_empty() {
            return Err(AbcError::InvalidConfig("kernel has no dimensions".into()));
        }
        if let Some(k) = tau2.iter().position(|&v| !(v.is_finite() && v > S::zero())) {
            return Err(AbcError::InvalidConfig(format!(
                "kernel variance {k} must be positive, got {}",
                tau2[k]
            )));
        }
        Ok(KernelScale::Diagonal { tau2 })
    }

    pub fn full(cov: Vec<Vec<S>>) -> Result<Self> {
        let d = cov.len();
        if d == 0 || cov.iter().any(|row| row.len() != d) {
            return Err(AbcError::InvalidConfig(
                "kernel covariance must be square".into(),
            ));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (cov[i][j], cov[j][i]);
                if (a - b).abs() > S::epsilon() * S::lit(16.0) * (a.abs() + b.abs()) {
                    return Err(AbcError::InvalidConfig(
                        "kernel covariance must be symmetric".into(),
                    ));
                }
            }
        }
        let chol = cholesky(&cov).ok_or_else(|| {
            AbcError::InvalidConfig("kernel covariance is not positive definite".into())
        })?;
        Ok(KernelScale::Full { cov, chol })
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelScale::Diagonal { tau2 } => tau2.len(),
            KernelScale::Full { cov, .. } => cov.len(),
        }
    }

    pub fn mode(&self) -> KernelMode {
        match self {
            KernelScale::Diagonal { .. } => KernelMode::Diagonal,
            KernelScale::Full { .. } => KernelMode::FullCovariance,
        }
    }

    /// Per-dimension variances (the covariance diagonal in full mode).
    pub fn variances(&self) -> Vec<S> {
        match self {
            KernelScale::Diagonal { tau2 } => tau2.clone(),
            KernelScale::Full { cov, .. } => (0..cov.len()).map(|k| cov[k][k]).collect(),
        }
    }

    /// Covariance as a dense matrix.
    pub fn covariance(&self) -> Vec<Vec<S>> {
        match self {
            KernelScale::Diagonal { tau2 } => {
                let d = tau2.len();
                (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| if i == j { tau2[i] } else { S::zero() })
                            .collect()
                    })
                    .collect()
            }
            KernelScale::Full { cov, .. } => cov.clone(),
        }
    }

    /// Draws from `N(center, scale)`.
    pub fn perturb<R: Rng + ?Sized>(&self, center: &[S], rng: &mut R) -> Vec<S> {
        match self {
            KernelScale::Diagonal { tau2 } => center
                .iter()
                .zip(tau2)
                .map(|(&c, &v)| c + v.sqrt() * S::std_normal(rng))
                .collect(),
            KernelScale::Full { chol, .. } => {
                let z: Vec<S> = (0..chol.len()).map(|_| S::std_normal(rng)).collect();
                center
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| c + (0..=i).map(|j| chol[i][j] * z[j]).sum::<S>())
                    .collect()
            }
        }
    }

    /// Exact Gaussian log-density of `theta` under `N(center, scale)`.
    pub fn log_density(&self, theta: &[S], center: &[S]) -> Result<S> {
        let d = self.dim();
        for len in [theta.len(), center.len()] {
            if len != d {
                return Err(AbcError::DimensionMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        let prepared = PreparedKernel::new(self);
        Ok(prepared.log_density(theta, center))
    }
}

/// Kernel with its normalizing constant and inverse factors precomputed, for
/// the O(N²) weight pass.
#[derive(Debug, Clone)]
pub(crate) struct PreparedKernel<'a, S> {
    scale: &'a KernelScale<S>,
    inv_var: Vec<S>,
    log_norm: S,
}

impl<'a, S: Real> PreparedKernel<'a, S> {
    pub(crate) fn new(scale: &'a KernelScale<S>) -> Self {
        let d = scale.dim();
        let ln_2pi = S::TAU().ln();
        let (inv_var, log_det) = match scale {
            KernelScale::Diagonal { tau2 } => (
                tau2.iter().map(|&v| S::one() / v).collect(),
                tau2.iter().map(|v| v.ln()).sum::<S>(),
            ),
            KernelScale::Full { chol, .. } => (
                Vec::new(),
                S::lit(2.0) * (0..d).map(|k| chol[k][k].ln()).sum::<S>(),
            ),
        };
        let log_norm = -S::lit(0.5) * (S::from_usize(d).unwrap() * ln_2pi + log_det);
        Self {
            scale,
            inv_var,
            log_norm,
        }
    }

    #[inline]
    pub(crate) fn log_density(&self, theta: &[S], center: &[S]) -> S {
        let quad = match self.scale {
            KernelScale::Diagonal { .. } => theta
                .iter()
                .zip(center)
                .zip(&self.inv_var)
                .map(|((&x, &c), &iv)| (x - c) * (x - c) * iv)
                .sum::<S>(),
            KernelScale::Full { chol, .. } => {
                // forward substitution: L y = x - c
                let d = chol.len();
                let mut y = [S::zero(); 8];
                let mut heap;
                let y: &mut [S] = if d <= 8 {
                    &mut y[..d]
                } else {
                    heap = vec![S::zero(); d];
                    &mut heap
                };
                let mut quad = S::zero();
                for i in 0..d {
                    let mut r = theta[i] - center[i];
                    for j in 0..i {
                        r = r - chol[i][j] * y[j];
                    }
                    y[i] = r / chol[i][i];
                    quad = quad + y[i] * y[i];
                }
                quad
            }
        };
        self.log_norm - S::lit(0.5) * quad
    }
}

fn cholesky<S: Real>(a: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let d = a.len();
    let mut l = vec![vec![S::zero(); d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: S = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > S::zero()) {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn check_weights<S: Real, P: AsRef<[S]>>(points: &[P], weights: &[S]) -> Result<usize> {
    if points.len() != weights.len() {
        return Err(AbcError::DimensionMismatch {
            expected: points.len(),
            got: weights.len(),
        });
    }
    let d = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
    if let Some(bad) = points.iter().find(|p| p.as_ref().len() != d) {
        return Err(AbcError::DimensionMismatch {
            expected: d,
            got: bad.as_ref().len(),
        });
    }
    let sum: S = weights.iter().copied().sum();
    if weights.iter().any(|&w| !(w >= S::zero()) || !w.is_finite())
        || (sum - S::one()).abs() > S::normalization_tolerance(MOMENT_WEIGHT_TOLERANCE)
    {
        return Err(AbcError::UnnormalizedWeights {
            sum: sum.to_f64_lossy(),
        });
    }
    let live = weights.iter().filter(|&&w| w > S::zero()).count();
    if live < 2 {
        return Err(AbcError::DegeneratePopulation(format!(
            "{live} particle(s) with nonzero weight"
        )));
    }
    Ok(d)
}

fn weighted_mean<S: Real, P: AsRef<[S]>>(points: &[P], weights: &[S], d: usize) -> Vec<S> {
    let mut mean = vec![S::zero(); d];
    for (p, &w) in points.iter().zip(weights) {
        for (m, &x) in mean.iter_mut().zip(p.as_ref()) {
            *m = *m + w * x;
        }
    }
    mean
}

/// Weighted mean and per-dimension weighted variance `Σ w (θ - μ)²`, with no
/// small-sample correction. Weights must already be normalized.
pub fn weighted_moments<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
) -> Result<(Vec<S>, Vec<S>)> {
    let d = check_weights(points, weights)?;
    let mean = weighted_mean(points, weights, d);
    let mut var = vec![S::zero(); d];
    for (p, &w) in points.iter().zip(weights) {
        for ((v, &x), &m) in var.iter_mut().zip(p.as_ref()).zip(&mean) {
            *v = *v + w * (x - m) * (x - m);
        }
    }
    Ok((mean, var))
}

/// Weighted covariance matrix `Σ w (θ - μ)(θ - μ)ᵀ`.
pub fn weighted_covariance<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
) -> Result<Vec<Vec<S>>> {
    let d = check_weights(points, weights)?;
    let mean = weighted_mean(points, weights, d);
    let mut cov = vec![vec![S::zero(); d]; d];
    for (p, &w) in points.iter().zip(weights) {
        let x = p.as_ref();
        for i in 0..d {
            let di = x[i] - mean[i];
            for j in 0..=i {
                cov[i][j] = cov[i][j] + w * di * (x[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[j][i] = cov[i][j];
        }
    }
    Ok(cov)
}

/// Kernel for the next generation: twice the weighted (co)variance of the
/// current population.
pub fn adapt_scale<S: Real, P: AsRef<[S]>>(
    points: &[P],
    weights: &[S],
    mode: KernelMode,
) -> Result<KernelScale<S>> {
    let two = S::lit(2.0);
    let floor = S::lit(VARIANCE_FLOOR);
    let collapsed = |k: usize, v: S| {
        AbcError::DegeneratePopulation(format!(
            "weighted variance {v} in dimension {k} is below {VARIANCE_FLOOR}"
        ))
    };
    match mode {
        KernelMode::Diagonal => {
            let (_, var) = weighted_moments(points, weights)?;
            if let Some(k) = var.iter().position(|&v| !(v >= floor)) {
                return Err(collapsed(k, var[k]));
            }
            KernelScale::diagonal(var.into_iter().map(|v| two * v).collect())
        }
        KernelMode::FullCovariance => {
            let cov = weighted_covariance(points, weights)?;
            if let Some(k) = (0..cov.len()).position(|k| !(cov[k][k] >= floor)) {
                return Err(collapsed(k, cov[k][k]));
            }
            let scaled = cov
                .into_iter()
                .map(|row| row.into_iter().map(|c| two * c).collect())
                .collect();
            KernelScale::full(scaled).map_err(|_| {
                AbcError::DegeneratePopulation(
                    "weighted covariance is not positive definite".into(),
                )
            })
        }
    }
}
