//! Closed-form bracket on the optimal control limit.
//!
//! Lower bound: the largest `n2` with `Δ_{n2} f(N1, n2) < α·R`.
//! Upper bound: the smallest `n2` with
//! `Δ_{n2} f(0, n2) > (α + min(n2 + 1, C)·μ2)·R`. An upper bound of zero
//! means no type-2 arrival is ever worth admitting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::solver::ThresholdPolicy;

pub const DEFAULT_SCAN_LIMIT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsResult {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub scan_limit: usize,
    pub reject_all: bool,
    /// The lower-bound condition held over the whole scan, so `lower` is only
    /// a floor imposed by the scan limit.
    pub lower_saturated: bool,
}

fn lower_condition(model: &Model, n2: usize) -> bool {
    let p = model.params();
    p.holding.delta_n2(model.n1_max(), n2) < p.alpha * p.reward
}

fn upper_condition(model: &Model, n2: usize) -> bool {
    let p = model.params();
    let busy = (n2 + 1).min(p.capacity) as f64;
    p.holding.delta_n2(0, n2) > (p.alpha + busy * p.mu2) * p.reward
}

/// Largest `n2 <= scan_limit` satisfying the lower-bound inequality, if any.
///
/// The satisfying set is a prefix under the convexity hypothesis, so the scan
/// stops at the first failure.
pub fn lower_bound(model: &Model, scan_limit: usize) -> Option<usize> {
    (0..=scan_limit)
        .take_while(|&n2| lower_condition(model, n2))
        .last()
}

/// Smallest `n2 <= scan_limit` satisfying the upper-bound inequality, if any.
pub fn upper_bound(model: &Model, scan_limit: usize) -> Option<usize> {
    (0..=scan_limit).find(|&n2| upper_condition(model, n2))
}

pub fn bounds(model: &Model, scan_limit: usize) -> BoundsResult {
    let lower = lower_bound(model, scan_limit);
    let upper = upper_bound(model, scan_limit);
    BoundsResult {
        lower,
        upper,
        scan_limit,
        reject_all: upper == Some(0),
        lower_saturated: lower == Some(scan_limit),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowBracket {
    pub n1: usize,
    pub threshold: i64,
    /// `D(n1) - lower`; negative values are violations.
    pub lower_margin: Option<i64>,
    /// `upper - D(n1)`; negative values are violations.
    pub upper_margin: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub bounds: BoundsResult,
    pub rows: Vec<RowBracket>,
    /// Lower-bound misses on rows `n1 < N1`, where the bound is not enforced.
    pub warnings: Vec<String>,
}

/// Check a policy against the bracket.
///
/// The upper bound is enforced on every row. The lower bound is derived on
/// row `N1` and enforced there; misses on other rows are only reported.
pub fn bracket_check(model: &Model, policy: &ThresholdPolicy, scan_limit: usize) -> Result<BracketReport> {
    let n1_max = model.n1_max();
    if policy.thresholds.len() != n1_max + 1 {
        return Err(Error::Config(format!(
            "policy has {} rows, model needs {}",
            policy.thresholds.len(),
            n1_max + 1
        )));
    }
    let bounds = bounds(model, scan_limit);
    let mut rows = Vec::with_capacity(n1_max + 1);
    let mut warnings = Vec::new();
    for (n1, t) in policy.thresholds.iter().enumerate() {
        let d = t.as_i64();
        let lower_margin = bounds.lower.filter(|_| !bounds.lower_saturated).map(|l| d - l as i64);
        let upper_margin = bounds.upper.map(|u| u as i64 - d);

        if bounds.reject_all && d != -1 {
            return Err(Error::BoundViolated {
                n1,
                detail: format!("upper bound 0 forbids any admission, policy admits up to {d}"),
            });
        }
        if let Some(m) = upper_margin {
            if m < 0 {
                return Err(Error::BoundViolated {
                    n1,
                    detail: format!("D={d} exceeds upper bound {}", bounds.upper.unwrap_or(0)),
                });
            }
        }
        if let Some(m) = lower_margin {
            if m < 0 {
                let detail = format!("D={d} below lower bound {}", d - m);
                if n1 == n1_max {
                    return Err(Error::BoundViolated { n1, detail });
                }
                warnings.push(format!("n1={n1}: {detail}"));
            }
        }
        rows.push(RowBracket {
            n1,
            threshold: d,
            lower_margin,
            upper_margin,
        });
    }
    Ok(BracketReport {
        bounds,
        rows,
        warnings,
    })
}
