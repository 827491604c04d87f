//! ML estimate with exact fallback above a confidence threshold.

use serde::{Deserialize, Serialize};

use crate::data::extract_features;
use crate::dlt::{self, SltnConfig};
use crate::error::Result;
use crate::model::MlpModel;

/// Estimates above this many seconds are re-solved exactly.
pub const DEFAULT_THRESHOLD_S: f64 = 5000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Ml,
    DltVerified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridDecision {
    pub t_star: f64,
    pub source: Source,
    pub ml_estimate: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridPolicy {
    pub threshold: f64,
    /// Also verify when child speed heterogeneity exceeds this ratio.
    pub heterogeneity_trigger: Option<f64>,
}

impl Default for HybridPolicy {
    fn default() -> Self {
        HybridPolicy {
            threshold: DEFAULT_THRESHOLD_S,
            heterogeneity_trigger: None,
        }
    }
}

impl HybridPolicy {
    pub fn with_threshold(threshold: f64) -> Self {
        HybridPolicy {
            threshold,
            ..HybridPolicy::default()
        }
    }

    /// A non-positive or non-finite estimate is never a valid time and is
    /// always verified.
    fn needs_exact(&self, config: &SltnConfig, estimate: f64) -> bool {
        if !(estimate.is_finite() && estimate > 0.0) || estimate > self.threshold {
            return true;
        }
        match self.heterogeneity_trigger {
            Some(limit) => extract_features(config).heterog_w > limit,
            None => false,
        }
    }
}

pub fn hybrid_predict(model: &MlpModel, config: &SltnConfig, policy: &HybridPolicy) -> Result<HybridDecision> {
    let ml_estimate = model.predict(config);
    decide(model.metadata.compute_intensity, config, ml_estimate, policy)
}

/// Applies the policy to an existing ML estimate.
pub fn decide(
    compute_intensity: f64,
    config: &SltnConfig,
    ml_estimate: f64,
    policy: &HybridPolicy,
) -> Result<HybridDecision> {
    let (t_star, source) = if policy.needs_exact(config, ml_estimate) {
        let rates = dlt::to_time_rates(config, compute_intensity)?;
        (dlt::solve_optimal(&rates, config.load_gb)?.t_star, Source::DltVerified)
    } else {
        (ml_estimate, Source::Ml)
    };
    Ok(HybridDecision {
        t_star,
        source,
        ml_estimate,
        threshold: policy.threshold,
    })
}
