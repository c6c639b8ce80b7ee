//! Published reference tables for the two baseline settings and helpers to
//! compare a run against them.
//!
//! Tables are stored as printed: two decimals, one row per `n1`.

use serde::Serialize;

use crate::model::{HoldingCost, ModelParams};
use crate::solver::{ThresholdPolicy, ValueGrid};

/// Baseline setting: `λ1=1, μ1=6, λ2=2, μ2=8, C=10, b=5, α=0.1, r=0.5`,
/// square-sum holding cost, reward `R`.
pub fn baseline_params(reward: f64) -> ModelParams {
    ModelParams {
        lambda1: 1.0,
        lambda2: 2.0,
        mu1: 6.0,
        mu2: 8.0,
        capacity: 10,
        vms_per_pu: 5,
        alpha: 0.1,
        reward,
        preempt_cost: 0.5,
        holding: HoldingCost::SquareSum,
    }
}

/// Optimal values, `R = 5`, `n2 = 0..=23`.
pub const HIGH_REWARD_OPTIMAL: [[f64; 24]; 3] = [
    [
        96.53, 96.38, 96.10, 95.69, 95.16, 94.51,
        93.72, 92.80, 91.74, 90.55, 89.22, 87.63,
        85.73, 83.51, 80.95, 78.00, 74.66, 70.89,
        66.68, 61.99, 56.81, 51.11, 44.88, 38.09,
    ],
    [
        96.50, 96.33, 96.03, 95.61, 95.07, 94.40,
        93.51, 92.41, 91.11, 89.61, 87.90, 85.93,
        83.65, 81.03, 78.03, 74.62, 70.79, 66.50,
        61.73, 56.46, 50.68, 44.34, 37.44, 29.94,
    ],
    [
        96.43, 96.24, 95.89, 95.38, 94.72, 93.89,
        92.81, 91.49, 89.94, 88.14, 86.11, 83.78,
        81.11, 78.06, 74.61, 70.71, 66.35, 61.51,
        56.17, 50.29, 43.87, 36.87, 29.26, 21.02,
    ],
];

/// Values of the optimal policy by fixed-policy iteration, `R = 5`.
pub const HIGH_REWARD_EVALUATED: [[f64; 24]; 3] = [
    [
        96.53, 96.38, 96.10, 95.69, 95.16, 94.51,
        93.72, 92.79, 91.74, 90.55, 89.22, 87.63,
        85.73, 83.51, 80.95, 78.00, 74.66, 70.89,
        66.67, 61.98, 56.81, 51.11, 44.88, 38.09,
    ],
    [
        96.50, 96.33, 96.03, 95.61, 95.07, 94.40,
        93.51, 92.41, 91.11, 89.61, 87.90, 85.93,
        83.65, 81.03, 78.03, 74.62, 70.79, 66.49,
        61.73, 56.46, 50.67, 44.34, 37.44, 29.94,
    ],
    [
        96.43, 96.24, 95.89, 95.38, 94.72, 93.89,
        92.81, 91.49, 89.94, 88.14, 86.11, 83.78,
        81.11, 78.06, 74.61, 70.71, 66.35, 61.51,
        56.17, 50.29, 43.87, 36.86, 29.26, 21.02,
    ],
];

/// Admission table, `R = 5`, `n2 = 0..=23` (1 = admit).
pub const HIGH_REWARD_ACTIONS: [[u8; 24]; 3] = [
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
];

/// Optimal values, `R = 1`, `n2 = 0..=17`.
pub const LOW_REWARD_OPTIMAL: [[f64; 18]; 3] = [
    [
        16.53, 16.38, 16.10, 15.69, 15.16, 14.51,
        13.72, 12.80, 11.75, 10.57, 9.26, 7.68,
        5.82, 3.64, 1.12, -1.76, -5.03, -8.72,
    ],
    [
        16.50, 16.33, 16.03, 15.61, 15.07, 14.40,
        13.51, 12.43, 11.14, 9.65, 7.97, 6.03,
        3.79, 1.22, -1.72, -5.05, -8.80, -12.99,
    ],
    [
        16.43, 16.24, 15.89, 15.38, 14.72, 13.89,
        12.83, 11.52, 9.99, 8.22, 6.22, 3.94,
        1.32, -1.66, -5.04, -8.85, -13.11, -17.85,
    ],
];

/// Values of the optimal policy by fixed-policy iteration, `R = 1`.
pub const LOW_REWARD_EVALUATED: [[f64; 18]; 3] = [
    [
        16.53, 16.38, 16.10, 15.69, 15.16, 14.51,
        13.72, 12.80, 11.75, 10.57, 9.26, 7.68,
        5.82, 3.64, 1.12, -1.76, -5.03, -8.72,
    ],
    [
        16.50, 16.33, 16.03, 15.61, 15.07, 14.40,
        13.51, 12.43, 11.14, 9.65, 7.97, 6.03,
        3.79, 1.22, -1.72, -5.05, -8.80, -12.99,
    ],
    [
        16.43, 16.24, 15.89, 15.38, 14.72, 13.89,
        12.83, 11.52, 9.99, 8.22, 6.22, 3.94,
        1.32, -1.66, -5.04, -8.85, -13.11, -17.85,
    ],
];

/// Admission table as printed, `R = 1`, `n2 = 0..=15` (1 = admit).
pub const LOW_REWARD_ACTIONS: [[u8; 16]; 3] = [
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
];

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenCase {
    pub name: &'static str,
    pub params: ModelParams,
    pub optimal: Vec<Vec<f64>>,
    pub evaluated: Vec<Vec<f64>>,
    pub actions: Vec<Vec<u8>>,
}

fn owned<T: Copy, const N: usize>(rows: &[[T; N]; 3]) -> Vec<Vec<T>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

pub fn golden_cases() -> Vec<GoldenCase> {
    vec![
        GoldenCase {
            name: "reward-5",
            params: baseline_params(5.0),
            optimal: owned(&HIGH_REWARD_OPTIMAL),
            evaluated: owned(&HIGH_REWARD_EVALUATED),
            actions: owned(&HIGH_REWARD_ACTIONS),
        },
        GoldenCase {
            name: "reward-1",
            params: baseline_params(1.0),
            optimal: owned(&LOW_REWARD_OPTIMAL),
            evaluated: owned(&LOW_REWARD_EVALUATED),
            actions: owned(&LOW_REWARD_ACTIONS),
        },
    ]
}

/// The reference case whose parameters equal `params` exactly, if any.
pub fn golden_for(params: &ModelParams) -> Option<GoldenCase> {
    golden_cases().into_iter().find(|g| g.params == *params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellMismatch {
    pub table: String,
    pub n1: usize,
    pub n2: usize,
    pub expected: f64,
    pub actual: f64,
}

/// Cells of `expected` that `grid` misses by more than `tol`.
pub fn compare_values(table: &str, expected: &[Vec<f64>], grid: &ValueGrid, tol: f64) -> Vec<CellMismatch> {
    let mut out = Vec::new();
    for (n1, row) in expected.iter().enumerate() {
        for (n2, &e) in row.iter().enumerate() {
            let actual = if n1 < grid.n1_size() && n2 < grid.n2_size() {
                grid.get(n1, n2)
            } else {
                f64::NAN
            };
            // NaN fails the comparison and is reported.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !((actual - e).abs() <= tol) {
                out.push(CellMismatch { table: table.to_string(), n1, n2, expected: e, actual });
            }
        }
    }
    out
}

pub fn compare_actions(table: &str, expected: &[Vec<u8>], policy: &ThresholdPolicy) -> Vec<CellMismatch> {
    let mut out = Vec::new();
    for (n1, row) in expected.iter().enumerate() {
        for (n2, &e) in row.iter().enumerate() {
            let actual = match policy.thresholds.get(n1) {
                Some(t) => u8::from(t.admits(n2)),
                None => u8::MAX,
            };
            if actual != e {
                out.push(CellMismatch {
                    table: table.to_string(),
                    n1,
                    n2,
                    expected: f64::from(e),
                    actual: f64::from(actual),
                });
            }
        }
    }
    out
}

/// `D(n1)` read off a 0/1 action table: the last admitted column, or -1.
pub fn thresholds_of(actions: &[Vec<u8>]) -> Vec<i64> {
    actions
        .iter()
        .map(|row| row.iter().rposition(|&a| a == 1).map_or(-1, |i| i as i64))
        .collect()
}
