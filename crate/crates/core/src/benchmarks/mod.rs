//! Bundled models with known or oracle-computable posteriors.

pub mod coalescent;
pub mod conjugate;
pub mod mixture;

use crate::diagnostics::PosteriorOracle;
use crate::error::{AbcError, Result};
use crate::model::ModelSpec;
use crate::scalar::Real;

pub use coalescent::{coalescent_model, coalescent_simulate, simulate_genealogy, Genealogy};
pub use conjugate::{conjugate_normal_model, ConjugateNormalOracle};
pub use mixture::{mixture_oracle_cdf, mixture_oracle_moments, mixture_toy_model, MixtureOracle};

pub const MIXTURE_TOY: &str = "mixture-toy";
pub const COALESCENT_MSAT: &str = "coalescent-msat";
pub const CONJUGATE_NORMAL: &str = "conjugate-normal";

pub const MODEL_IDS: [&str; 3] = [MIXTURE_TOY, COALESCENT_MSAT, CONJUGATE_NORMAL];

/// Builds a bundled model by identifier.
pub fn model_by_id<S: Real>(id: &str) -> Result<ModelSpec<S>> {
    match id {
        MIXTURE_TOY => mixture_toy_model(),
        COALESCENT_MSAT => coalescent_model(),
        CONJUGATE_NORMAL => conjugate_normal_model(),
        other => Err(AbcError::UnknownModel(other.to_string())),
    }
}

/// Analytic posterior for models that have one.
pub fn oracle_by_id(id: &str) -> Option<Box<dyn PosteriorOracle>> {
    match id {
        MIXTURE_TOY => Some(Box::new(MixtureOracle)),
        CONJUGATE_NORMAL => Some(Box::new(ConjugateNormalOracle::bundled())),
        _ => None,
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, serde::Deserialize, serde::Serialize, PartialEq)]
pub(crate) struct ObservedData {
    pub conjugate_normal: ConjugateData,
    pub coalescent_msat: coalescent::CoalescentData,
}

#[derive(Debug, Clone, serde::Deserialize, serde::Serialize, PartialEq)]
pub(crate) struct ConjugateData {
    pub observed_mean: f64,
}

pub(crate) fn observed_data() -> &'static ObservedData {
    static DATA: std::sync::OnceLock<ObservedData> = std::sync::OnceLock::new();
    DATA.get_or_init(|| {
        serde_json::from_str(include_str!("../../data/observed.json"))
            .expect("bundled observed data parses")
    })
}
