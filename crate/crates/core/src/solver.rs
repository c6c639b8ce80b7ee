//! Uniformized value iteration on the collapsed `X(n1, n2)` grid.
//!
//! `X(n1, n2)` is the optimal discounted value right after the system lands
//! in `(n1, n2)`; it does not depend on which departure produced the state,
//! so a single grid over `0..=N1 × 0..=cap` carries the whole solution.
//! One sweep applies
//!
//! ```text
//! X'(n1,n2) = [ -f(n1,n2) + λ1·vA1 + λ2·vA2 + C1μ1·X(n1-1,n2)
//!               + C2μ2·X(n1,n2-1) + (c - β0)·X(n1,n2) ] / (α + c)
//! ```
//!
//! with `vA2 = max(X(n1,n2), R + X(n1,n2+1))` and `vA1` the type-1 arrival
//! value (admission plus preemption cost while `n1 < N1`).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds;
use crate::error::{Error, Result};
use crate::model::{validate_hypotheses, Model, State, ValidationReport};

/// Dense row-major grid of values indexed by `(n1, n2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueGrid {
    n1_size: usize,
    n2_size: usize,
    values: Vec<f64>,
}

impl ValueGrid {
    pub fn zeros(n1_size: usize, n2_size: usize) -> Self {
        ValueGrid {
            n1_size,
            n2_size,
            values: vec![0.0; n1_size * n2_size],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n1_size = rows.len();
        let n2_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n2_size) {
            return Err(Error::Config("grid rows have unequal lengths".into()));
        }
        Ok(ValueGrid {
            n1_size,
            n2_size,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n1_size(&self) -> usize {
        self.n1_size
    }

    pub fn n2_size(&self) -> usize {
        self.n2_size
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1_size, self.n2_size)
    }

    /// Largest `n2` index held by the grid.
    pub fn cap(&self) -> usize {
        self.n2_size - 1
    }

    #[inline]
    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        self.values[n1 * self.n2_size + n2]
    }

    #[inline]
    pub fn set(&mut self, n1: usize, n2: usize, v: f64) {
        self.values[n1 * self.n2_size + n2] = v;
    }

    pub fn row(&self, n1: usize) -> &[f64] {
        &self.values[n1 * self.n2_size..(n1 + 1) * self.n2_size]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_distance(&self, other: &ValueGrid) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Restrict to the first `n2_size` columns.
    pub fn truncated(&self, n2_size: usize) -> ValueGrid {
        let n2_size = n2_size.min(self.n2_size);
        let values = (0..self.n1_size)
            .flat_map(|n1| self.row(n1)[..n2_size].iter().copied())
            .collect();
        ValueGrid {
            n1_size: self.n1_size,
            n2_size,
            values,
        }
    }
}

/// Control limit of one row: admit a type-2 arrival iff `n2 <= D(n1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Threshold {
    AdmitUpTo(usize),
    RejectAll,
}

impl Threshold {
    pub fn admits(self, n2: usize) -> bool {
        match self {
            Threshold::AdmitUpTo(d) => n2 <= d,
            Threshold::RejectAll => false,
        }
    }

    /// Integer encoding with `RejectAll` as `-1`.
    pub fn as_i64(self) -> i64 {
        match self {
            Threshold::AdmitUpTo(d) => d as i64,
            Threshold::RejectAll => -1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Threshold::RejectAll),
            d if d >= 0 => Ok(Threshold::AdmitUpTo(d as usize)),
            d => Err(Error::Config(format!("threshold {d} is below the RejectAll sentinel -1"))),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::AdmitUpTo(d) => write!(f, "{d}"),
            Threshold::RejectAll => f.write_str("reject-all"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.as_i64())
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Threshold::from_i64(v).map_err(serde::de::Error::custom)
    }
}

/// One threshold per `n1` in `0..=N1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdPolicy {
    pub thresholds: Vec<Threshold>,
}

impl ThresholdPolicy {
    pub fn new(thresholds: Vec<Threshold>) -> Self {
        ThresholdPolicy { thresholds }
    }

    pub fn from_levels(levels: &[i64]) -> Result<Self> {
        let thresholds = levels
            .iter()
            .map(|&v| Threshold::from_i64(v))
            .collect::<Result<_>>()?;
        Ok(ThresholdPolicy { thresholds })
    }

    pub fn reject_all(n1_max: usize) -> Self {
        ThresholdPolicy {
            thresholds: vec![Threshold::RejectAll; n1_max + 1],
        }
    }

    pub fn admits(&self, s: State) -> bool {
        self.thresholds[s.n1].admits(s.n2)
    }

    pub fn levels(&self) -> Vec<i64> {
        self.thresholds.iter().map(|t| t.as_i64()).collect()
    }

    /// Check the policy has one row per `n1` and every threshold is below `cap`.
    pub fn check_fits(&self, model: &Model, cap: usize) -> Result<()> {
        if self.thresholds.len() != model.n1_max() + 1 {
            return Err(Error::Config(format!(
                "policy has {} rows, model needs {}",
                self.thresholds.len(),
                model.n1_max() + 1
            )));
        }
        for (n1, t) in self.thresholds.iter().enumerate() {
            if let Threshold::AdmitUpTo(d) = t {
                if *d >= cap {
                    return Err(Error::Config(format!(
                        "threshold D({n1})={d} must be below the grid cap {cap}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Value of a type-2 arrival at `(n1, n2)`: `max(X(n1,n2), R + X(n1,n2+1))`.
///
/// Ties go to admission.
#[inline]
pub fn admit_transform(x_now: f64, x_next: f64, reward: f64) -> (f64, bool) {
    let admit_value = reward + x_next;
    if admit_value >= x_now {
        (admit_value, true)
    } else {
        (x_now, false)
    }
}

/// `g(i) = max(h(i), R + h(i+1))` over a finite sequence; one entry shorter than `h`.
pub fn admit_envelope(h: &[f64], reward: f64) -> Vec<f64> {
    h.windows(2)
        .map(|w| admit_transform(w[0], w[1], reward).0)
        .collect()
}

/// Type-1 arrival value at `s`: admission with preemption cost while there is room.
pub fn pu_arrival_value(grid: &ValueGrid, model: &Model, s: State) -> Result<f64> {
    model.check_state(s)?;
    if s.n1 >= grid.n1_size() || s.n2 >= grid.n2_size() {
        return Err(Error::Domain(format!(
            "state ({}, {}) outside grid {:?}",
            s.n1,
            s.n2,
            grid.shape()
        )));
    }
    if s.n1 < model.n1_max() {
        let cost = model.cv(s) as f64 * model.params().preempt_cost;
        Ok(-cost + grid.get(s.n1 + 1, s.n2))
    } else {
        Ok(grid.get(s.n1, s.n2))
    }
}

/// How a sweep resolves type-2 arrivals below the truncation cap.
///
/// At `n2 = cap` the arrival is always rejected.
#[derive(Clone, Copy, Debug)]
pub enum AdmissionRule<'a> {
    /// Maximise over admit and reject.
    Optimal,
    /// Follow a fixed control-limit policy.
    Fixed(&'a ThresholdPolicy),
}

/// Per-cell constants of the recursion, computed once per solve.
#[derive(Clone, Debug)]
pub(crate) struct SweepPlan {
    n1_size: usize,
    n2_size: usize,
    n1_max: usize,
    reward: f64,
    lambda1: f64,
    lambda2: f64,
    inv_denominator: f64,
    holding: Vec<f64>,
    preempt_cost: Vec<f64>,
    pu_departure: Vec<f64>,
    su_departure: Vec<f64>,
    self_loop: Vec<f64>,
}

impl SweepPlan {
    pub(crate) fn new(model: &Model, cap: usize) -> Self {
        let p = model.params();
        let n1_size = model.n1_max() + 1;
        let n2_size = cap + 1;
        let c = model.uniformization_constant();
        let cells = n1_size * n2_size;
        let mut plan = SweepPlan {
            n1_size,
            n2_size,
            n1_max: model.n1_max(),
            reward: p.reward,
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            inv_denominator: 1.0 / (p.alpha + c),
            holding: Vec::with_capacity(cells),
            preempt_cost: Vec::with_capacity(cells),
            pu_departure: Vec::with_capacity(cells),
            su_departure: Vec::with_capacity(cells),
            self_loop: Vec::with_capacity(cells),
        };
        for n1 in 0..n1_size {
            for n2 in 0..n2_size {
                let s = State::new(n1, n2);
                plan.holding.push(model.holding_rate(s));
                plan.preempt_cost.push(model.cv(s) as f64 * p.preempt_cost);
                plan.pu_departure.push(model.c1(n1) as f64 * p.mu1);
                plan.su_departure.push(model.c2(s) as f64 * p.mu2);
                plan.self_loop.push(c - model.beta0(s));
            }
        }
        plan
    }

    /// One synchronous sweep; returns the sup-norm change.
    pub(crate) fn sweep(&self, input: &ValueGrid, rule: AdmissionRule<'_>, out: &mut ValueGrid) -> f64 {
        debug_assert_eq!(input.shape(), (self.n1_size, self.n2_size));
        debug_assert_eq!(out.shape(), input.shape());
        let cap = self.n2_size - 1;
        let mut residual = 0.0f64;
        for n1 in 0..self.n1_size {
            let row = input.row(n1);
            let base = n1 * self.n2_size;
            for n2 in 0..self.n2_size {
                let k = base + n2;
                let x = row[n2];
                let pu_arrival = if n1 < self.n1_max {
                    input.get(n1 + 1, n2) - self.preempt_cost[k]
                } else {
                    x
                };
                let su_arrival = if n2 == cap {
                    x
                } else {
                    match rule {
                        AdmissionRule::Optimal => admit_transform(x, row[n2 + 1], self.reward).0,
                        AdmissionRule::Fixed(policy) => {
                            if policy.thresholds[n1].admits(n2) {
                                self.reward + row[n2 + 1]
                            } else {
                                x
                            }
                        }
                    }
                };
                let mut acc = -self.holding[k]
                    + self.lambda1 * pu_arrival
                    + self.lambda2 * su_arrival
                    + self.self_loop[k] * x;
                if n1 > 0 {
                    acc += self.pu_departure[k] * input.get(n1 - 1, n2);
                }
                if n2 > 0 {
                    acc += self.su_departure[k] * row[n2 - 1];
                }
                let v = acc * self.inv_denominator;
                residual = residual.max((v - x).abs());
                out.values[k] = v;
            }
        }
        residual
    }
}

/// One synchronous (Jacobi) application of the recursion to `input`.
pub fn bellman_sweep(model: &Model, input: &ValueGrid, rule: AdmissionRule<'_>) -> Result<ValueGrid> {
    if input.n1_size() != model.n1_max() + 1 || input.n2_size() < 2 {
        return Err(Error::ShapeMismatch {
            left: input.shape(),
            right: (model.n1_max() + 1, input.n2_size().max(2)),
        });
    }
    if let AdmissionRule::Fixed(policy) = rule {
        policy.check_fits(model, input.cap())?;
    }
    let plan = SweepPlan::new(model, input.cap());
    let mut out = ValueGrid::zeros(input.n1_size(), input.n2_size());
    plan.sweep(input, rule, &mut out);
    Ok(out)
}

/// Truncation cap for the `n2` axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cap {
    /// Theorem-style upper bound on the threshold plus a margin.
    Auto,
    Fixed(usize),
}

impl Serialize for Cap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cap::Auto => s.serialize_str("auto"),
            Cap::Fixed(c) => s.serialize_u64(*c as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Cap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Word(String),
            Value(usize),
        }
        match Repr::deserialize(d)? {
            Repr::Word(w) if w == "auto" => Ok(Cap::Auto),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "cap must be \"auto\" or an integer, got {w:?}"
            ))),
            Repr::Value(v) => Ok(Cap::Fixed(v)),
        }
    }
}

pub const AUTO_CAP_MARGIN: usize = 5;

impl Cap {
    pub fn resolve(self, model: &Model) -> usize {
        match self {
            Cap::Fixed(c) => c,
            Cap::Auto => {
                let floor = model.params().capacity + AUTO_CAP_MARGIN;
                bounds::upper_bound(model, bounds::DEFAULT_SCAN_LIMIT)
                    .map_or(floor, |u| (u + AUTO_CAP_MARGIN).max(floor))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub cap: Cap,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cap: Cap::Auto,
            tol: 1e-9,
            max_iter: 500_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub grid: ValueGrid,
    pub policy: ThresholdPolicy,
    pub iterations: usize,
    pub residual: f64,
    pub cap: usize,
    pub hypothesis_report: ValidationReport,
    pub warnings: Vec<String>,
}

/// Largest admitted `n2` per row, verifying the admit set is a prefix.
///
/// Rows that reject even at `n2 = 0` become [`Threshold::RejectAll`].
pub fn extract_policy(model: &Model, grid: &ValueGrid) -> Result<ThresholdPolicy> {
    let reward = model.params().reward;
    let cap = grid.cap();
    let mut thresholds = Vec::with_capacity(grid.n1_size());
    for n1 in 0..grid.n1_size() {
        let row = grid.row(n1);
        let admits = |n2: usize| admit_transform(row[n2], row[n2 + 1], reward).1;
        let prefix = (0..cap).take_while(|&n2| admits(n2)).count();
        if let Some(admit_at) = (prefix..cap).find(|&n2| admits(n2)) {
            return Err(Error::NonThresholdStructure {
                n1,
                reject_at: prefix,
                admit_at,
            });
        }
        thresholds.push(match prefix {
            0 => Threshold::RejectAll,
            k => Threshold::AdmitUpTo(k - 1),
        });
    }
    Ok(ThresholdPolicy { thresholds })
}

pub fn solve(model: &Model, opts: &SolveOptions) -> Result<SolveReport> {
    solve_observed(model, opts, |_, _| {})
}

/// [`solve`] with a callback receiving `(sweep index, residual)` after every sweep.
pub fn solve_observed(
    model: &Model,
    opts: &SolveOptions,
    mut observe: impl FnMut(usize, f64),
) -> Result<SolveReport> {
    let cap = opts.cap.resolve(model);
    if cap < 2 {
        return Err(Error::Config(format!("cap must be at least 2, got {cap}")));
    }
    let hypothesis_report = validate_hypotheses(model.holding(), model.n1_max(), cap);
    let mut warnings = Vec::new();
    if !hypothesis_report.all_passed() {
        warnings.push(format!(
            "holding cost fails the structural hypotheses ({:?}); threshold structure is checked explicitly",
            hypothesis_report
        ));
    }

    let plan = SweepPlan::new(model, cap);
    let mut current = ValueGrid::zeros(model.n1_max() + 1, cap + 1);
    let mut next = current.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        residual = plan.sweep(&current, AdmissionRule::Optimal, &mut next);
        std::mem::swap(&mut current, &mut next);
        iterations += 1;
        observe(iterations, residual);
        if !residual.is_finite() {
            break;
        }
        if residual < convergence_tol(opts.tol, &current) {
            break;
        }
    }
    let effective_tol = convergence_tol(opts.tol, &current);
    // Written negated so a NaN residual counts as not converged.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(residual < effective_tol) {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }

    if effective_tol > opts.tol {
        warnings.push(format!(
            "tolerance {:e} is below the float resolution of the grid; stopped at {effective_tol:e}",
            opts.tol
        ));
    }

    let policy = extract_policy(model, &current)?;
    let reward = model.params().reward;
    for (n1, t) in policy.thresholds.iter().enumerate() {
        if *t == Threshold::AdmitUpTo(cap - 1) {
            let row = current.row(n1);
            if reward + row[cap] > row[cap - 1] {
                return Err(Error::CapTooSmall { n1, cap });
            }
        }
    }

    Ok(SolveReport {
        grid: current,
        policy,
        iterations,
        residual,
        cap,
        hypothesis_report,
        warnings,
    })
}

/// Rounding noise of one sweep, in units of the largest magnitude in the grid.
pub const ROUNDING_FLOOR_ULPS: f64 = 8.0;

/// `tol`, raised to the level where sweep rounding noise dominates.
///
/// Values of order `1e7` carry ulps near `2e-9`, so a fixed `1e-9` sup-norm
/// target can be unreachable in floating point.
pub fn convergence_tol(tol: f64, grid: &ValueGrid) -> f64 {
    let scale = grid.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    tol.max(ROUNDING_FLOOR_ULPS * f64::EPSILON * scale)
}

/// Cell-wise residual of the optimality recursion at `grid`.
pub fn bellman_residual(model: &Model, grid: &ValueGrid) -> Result<f64> {
    let swept = bellman_sweep(model, grid, AdmissionRule::Optimal)?;
    swept.sup_distance(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HoldingCost, ModelParams, PolyCoefficients};

    fn table2(reward: f64) -> ModelParams {
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

    fn degenerate() -> Model {
        Model::new(ModelParams {
            reward: 0.0,
            preempt_cost: 0.0,
            holding: HoldingCost::zero(),
            ..table2(0.0)
        })
        .unwrap()
    }

    #[test]
    fn admit_transform_examples() {
        assert_eq!(admit_transform(10.0, 10.0, 0.0), (10.0, true));
        let (v, admit) = admit_transform(96.53, 96.38, 5.0);
        assert!((v - 101.38).abs() < 1e-12);
        assert!(admit);
        assert_eq!(admit_transform(5.82, 3.64, 1.0), (5.82, false));
    }

    #[test]
    fn pu_arrival_branches() {
        let model = Model::new(table2(5.0)).unwrap();
        let mut grid = ValueGrid::zeros(3, 10);
        for n1 in 0..3 {
            for n2 in 0..10 {
                grid.set(n1, n2, (10 * n1 + n2) as f64);
            }
        }
        let at_max = pu_arrival_value(&grid, &model, State::new(2, 4)).unwrap();
        assert_eq!(at_max, grid.get(2, 4));
        let preempting = pu_arrival_value(&grid, &model, State::new(1, 7)).unwrap();
        assert_eq!(preempting, -2.5 + grid.get(2, 7));
        let free = pu_arrival_value(&grid, &model, State::new(0, 0)).unwrap();
        assert_eq!(free, grid.get(1, 0));
        assert!(pu_arrival_value(&grid, &model, State::new(0, 10)).is_err());
        assert!(pu_arrival_value(&grid, &model, State::new(3, 0)).is_err());
    }

    #[test]
    fn first_sweep_from_zero() {
        let model = Model::new(table2(5.0)).unwrap();
        let zero = ValueGrid::zeros(3, 31);
        let one = bellman_sweep(&model, &zero, AdmissionRule::Optimal).unwrap();
        assert!((one.get(0, 0) - 10.0 / 83.1).abs() < 1e-15);
        let lambda2_r = 2.0 * 5.0;
        for n2 in 0..30 {
            let expected = (-HoldingCost::SquareSum.rate(2, n2) + lambda2_r) / 83.1;
            assert!((one.get(2, n2) - expected).abs() < 1e-12, "n2={n2}");
        }
        // At the cap the type-2 arrival is rejected, so no reward accrues.
        let expected_cap = -HoldingCost::SquareSum.rate(2, 30) / 83.1;
        assert!((one.get(2, 30) - expected_cap).abs() < 1e-12);
    }

    #[test]
    fn zero_economy_is_a_fixed_point() {
        let model = degenerate();
        let zero = ValueGrid::zeros(3, 20);
        let out = bellman_sweep(&model, &zero, AdmissionRule::Optimal).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));

        let report = solve(&model, &SolveOptions::default()).unwrap();
        assert!(report.grid.values().iter().all(|&v| v == 0.0));
        let cap = report.cap;
        assert!(report
            .policy
            .thresholds
            .iter()
            .all(|&t| t == Threshold::AdmitUpTo(cap - 1)));
    }

    #[test]
    fn reward_free_increasing_cost_rejects_everywhere() {
        let model = Model::new(ModelParams {
            reward: 0.0,
            ..table2(0.0)
        })
        .unwrap();
        let report = solve(&model, &SolveOptions::default()).unwrap();
        // Brute-force oracle: R + X(n1, n2+1) < X(n1, n2) on every cell below the cap.
        let g = &report.grid;
        for n1 in 0..3 {
            for n2 in 0..g.cap() {
                assert!(g.get(n1, n2 + 1) < g.get(n1, n2));
            }
        }
        assert_eq!(report.policy, ThresholdPolicy::reject_all(2));
    }

    #[test]
    fn paper_setting_thresholds() {
        let r5 = solve(&Model::new(table2(5.0)).unwrap(), &SolveOptions::default()).unwrap();
        assert_eq!(r5.policy.levels(), vec![18, 17, 16]);
        assert!((r5.grid.get(0, 0) - 96.53).abs() < 0.01);
        assert_eq!(r5.cap, 205);

        // Applying the admit rule to the published R=1 value table itself gives
        // [6, 5, 4] (row 0: 1 + 12.80 >= 13.72, 1 + 11.75 < 12.80).
        let r1 = solve(&Model::new(table2(1.0)).unwrap(), &SolveOptions::default()).unwrap();
        assert_eq!(r1.policy.levels(), vec![6, 5, 4]);
        assert!((r1.grid.get(0, 0) - 16.53).abs() < 0.01);
    }

    #[test]
    fn non_threshold_row_is_reported() {
        let model = Model::new(table2(1.0)).unwrap();
        let grid = ValueGrid::from_rows(vec![
            vec![0.0, 0.5, -5.0, -4.5, -20.0],
            vec![0.0, -0.5, -1.0, -9.0, -20.0],
            vec![0.0, -0.5, -1.0, -9.0, -20.0],
        ])
        .unwrap();
        match extract_policy(&model, &grid) {
            Err(Error::NonThresholdStructure {
                n1,
                reject_at,
                admit_at,
            }) => assert_eq!((n1, reject_at, admit_at), (0, 1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_cap_is_rejected() {
        let model = Model::new(table2(5.0)).unwrap();
        let opts = SolveOptions {
            cap: Cap::Fixed(12),
            ..Default::default()
        };
        assert!(matches!(solve(&model, &opts), Err(Error::CapTooSmall { cap: 12, .. })));
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let model = Model::new(table2(5.0)).unwrap();
        let opts = SolveOptions {
            max_iter: 50,
            ..Default::default()
        };
        match solve(&model, &opts) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 50);
                assert!(residual > 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn converged_grid_satisfies_recursion() {
        let model = Model::new(table2(5.0)).unwrap();
        let report = solve(&model, &SolveOptions::default()).unwrap();
        assert!(bellman_residual(&model, &report.grid).unwrap() < 1e-9);
    }

    #[test]
    fn hypothesis_failure_is_recorded() {
        // Δ_{n2} f = 2·n2 + 4 - n1: convex and increasing in n2, but shrinking in n1.
        let holding = HoldingCost::polynomial(PolyCoefficients {
            c02: 1.0,
            c01: 3.0,
            c11: -1.0,
            ..Default::default()
        });
        let model = Model::new(ModelParams {
            holding,
            ..table2(5.0)
        })
        .unwrap();
        let report = solve(&model, &SolveOptions::default()).unwrap();
        assert!(report.hypothesis_report.convex_nondecreasing_n2.passed);
        assert!(!report.hypothesis_report.difference_nondecreasing_n1.passed);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn cap_serde() {
        assert_eq!(serde_json::to_string(&Cap::Auto).unwrap(), "\"auto\"");
        assert_eq!(serde_json::from_str::<Cap>("\"auto\"").unwrap(), Cap::Auto);
        assert_eq!(serde_json::from_str::<Cap>("40").unwrap(), Cap::Fixed(40));
        assert!(serde_json::from_str::<Cap>("\"big\"").is_err());
    }

    #[test]
    fn policy_json() {
        let p = ThresholdPolicy::from_levels(&[18, -1, 3]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"thresholds":[18,-1,3]}"#);
        assert_eq!(serde_json::from_str::<ThresholdPolicy>(&text).unwrap(), p);
        assert!(serde_json::from_str::<ThresholdPolicy>(r#"{"thresholds":[-2]}"#).is_err());
    }
}
