//! Structural checks on converged value grids and policies.

use serde::Serialize;

use crate::solver::{ThresholdPolicy, ValueGrid};

/// Default slack for floating-point noise in the difference checks.
pub const STRUCTURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub n1: usize,
    pub n2: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    /// `Δ_{n2} X <= tol` everywhere.
    pub row_nonincreasing: Option<Violation>,
    /// `Δ²_{n2} X <= tol` everywhere.
    pub row_concave: Option<Violation>,
    /// `Δ_{n2} X(n1+1, ·) <= Δ_{n2} X(n1, ·) + tol`.
    pub cross_row_monotone: Option<Violation>,
    /// `D(0) >= D(1) >= ... >= D(N1)`; holds the first `n1` with `D(n1) < D(n1+1)`.
    pub threshold_monotone: Option<usize>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.row_nonincreasing.is_none()
            && self.row_concave.is_none()
            && self.cross_row_monotone.is_none()
            && self.threshold_monotone.is_none()
    }
}

fn first_exceeding(
    tol: f64,
    n2_end: usize,
    n1_range: std::ops::Range<usize>,
    quantity: impl Fn(usize, usize) -> f64,
) -> Option<Violation> {
    for n1 in n1_range {
        for n2 in 0..n2_end {
            let amount = quantity(n1, n2);
            if amount > tol {
                return Some(Violation { n1, n2, amount });
            }
        }
    }
    None
}

pub fn check_structure(grid: &ValueGrid, policy: &ThresholdPolicy, tol: f64) -> StructureReport {
    let d = |n1: usize, n2: usize| grid.get(n1, n2 + 1) - grid.get(n1, n2);
    let cap = grid.cap();
    let rows = grid.n1_size();

    let row_nonincreasing = first_exceeding(tol, cap, 0..rows, d);
    let row_concave = first_exceeding(tol, cap.saturating_sub(1), 0..rows, |n1, n2| {
        d(n1, n2 + 1) - d(n1, n2)
    });
    let cross_row_monotone = first_exceeding(tol, cap, 0..rows.saturating_sub(1), |n1, n2| {
        d(n1 + 1, n2) - d(n1, n2)
    });
    let levels = policy.levels();
    let threshold_monotone = levels.windows(2).position(|w| w[0] < w[1]);

    StructureReport {
        row_nonincreasing,
        row_concave,
        cross_row_monotone,
        threshold_monotone,
    }
}

/// `true` when `h` has nonincreasing forward differences (up to `tol`).
pub fn is_concave(h: &[f64], tol: f64) -> bool {
    h.windows(3).all(|w| (w[2] - w[1]) - (w[1] - w[0]) <= tol)
}
