//! Shared fixtures for the criterion benches.

use vmadmit::reference::baseline_params;
use vmadmit::{Model, ThresholdPolicy};

pub fn baseline_model(reward: f64) -> Model {
    Model::new(baseline_params(reward)).expect("baseline parameters are valid")
}

/// Optimal limits of the `R = 5` baseline.
pub fn baseline_policy() -> ThresholdPolicy {
    ThresholdPolicy::from_levels(&[18, 17, 16]).expect("valid levels")
}
