//! Discounted value of a fixed control-limit policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::solver::{convergence_tol, AdmissionRule, SweepPlan, ThresholdPolicy, ValueGrid};

/// When to stop iterating the fixed-policy recursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRule {
    /// Iterate until the accumulated per-epoch discount `(c / (α + c))^k` drops below `floor`.
    DiscountFloor { floor: f64 },
    /// Iterate until the sup-norm change falls below `tol`.
    Tolerance { tol: f64, max_iter: usize },
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::DiscountFloor { floor: 1e-6 }
    }
}

impl StopRule {
    /// Sweep count of the discount-floor rule for `model`.
    pub fn discount_sweeps(model: &Model, floor: f64) -> usize {
        let c = model.uniformization_constant();
        let per_epoch = c / (model.params().alpha + c);
        (floor.ln() / per_epoch.ln()).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValueGrid {
    pub grid: ValueGrid,
    pub iterations: usize,
    pub residual: f64,
}

pub fn evaluate_policy(
    model: &Model,
    policy: &ThresholdPolicy,
    cap: usize,
    stop: StopRule,
) -> Result<PolicyValueGrid> {
    if cap < 2 {
        return Err(Error::Config(format!("cap must be at least 2, got {cap}")));
    }
    policy.check_fits(model, cap)?;
    let plan = SweepPlan::new(model, cap);
    let mut current = ValueGrid::zeros(model.n1_max() + 1, cap + 1);
    let mut next = current.clone();
    let rule = AdmissionRule::Fixed(policy);

    let (budget, tol) = match stop {
        StopRule::DiscountFloor { floor } => {
            if !(floor > 0.0 && floor < 1.0) {
                return Err(Error::Config(format!("discount floor must be in (0, 1), got {floor}")));
            }
            (StopRule::discount_sweeps(model, floor), None)
        }
        StopRule::Tolerance { tol, max_iter } => (max_iter, Some(tol)),
    };

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < budget {
        residual = plan.sweep(&current, rule, &mut next);
        std::mem::swap(&mut current, &mut next);
        iterations += 1;
        if !residual.is_finite() {
            break;
        }
        if tol.is_some_and(|t| residual < convergence_tol(t, &current)) {
            break;
        }
    }
    let converged = match tol {
        Some(t) => residual < convergence_tol(t, &current),
        None => residual.is_finite(),
    };
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    Ok(PolicyValueGrid {
        grid: current,
        iterations,
        residual,
    })
}

/// Sup-norm distance between two grids of equal shape.
pub fn compare_grids(a: &ValueGrid, b: &ValueGrid) -> Result<f64> {
    a.sup_distance(b)
}
