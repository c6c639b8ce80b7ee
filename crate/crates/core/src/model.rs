//! Model parameters and the closed-form state functions of the VM pool.
//!
//! The pool has `C` VMs shared by two task classes. A type-1 (online) task
//! occupies `b` VMs and preempts type-2 work when it needs room; a type-2
//! (batch) task occupies one VM and otherwise waits in an unbounded buffer.
//! A state `(n1, n2)` counts type-1 tasks in service and type-2 tasks in
//! service plus buffer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `f(x, y) = c20 x² + c02 y² + c11 xy + c10 x + c01 y + c00`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyCoefficients {
    pub c20: f64,
    pub c02: f64,
    pub c11: f64,
    pub c10: f64,
    pub c01: f64,
    pub c00: f64,
}

/// Holding cost rate `f(n1, n2)` paid while the system sits in a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HoldingCost {
    /// `f(x, y) = x² + y²`.
    SquareSum,
    Polynomial { coefficients: PolyCoefficients },
}

impl HoldingCost {
    pub fn polynomial(coefficients: PolyCoefficients) -> Self {
        HoldingCost::Polynomial { coefficients }
    }

    /// The zero cost, handy for degenerate test economies.
    pub fn zero() -> Self {
        HoldingCost::polynomial(PolyCoefficients::default())
    }

    pub fn rate(&self, n1: usize, n2: usize) -> f64 {
        let x = n1 as f64;
        let y = n2 as f64;
        match self {
            HoldingCost::SquareSum => x * x + y * y,
            HoldingCost::Polynomial { coefficients: c } => {
                c.c20 * x * x + c.c02 * y * y + c.c11 * x * y + c.c10 * x + c.c01 * y + c.c00
            }
        }
    }

    /// Forward difference in `n2`: `f(n1, n2 + 1) - f(n1, n2)`.
    pub fn delta_n2(&self, n1: usize, n2: usize) -> f64 {
        self.rate(n1, n2 + 1) - self.rate(n1, n2)
    }

    fn check_finite(&self) -> Result<()> {
        if let HoldingCost::Polynomial { coefficients: c } = self {
            let all = [c.c20, c.c02, c.c11, c.c10, c.c01, c.c00];
            if all.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("holding cost coefficients must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Raw model parameters as they appear in the JSON config document.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    #[serde(rename = "capacity_C")]
    pub capacity: usize,
    #[serde(rename = "vms_per_pu_b")]
    pub vms_per_pu: usize,
    pub alpha: f64,
    #[serde(rename = "reward_R")]
    pub reward: f64,
    #[serde(rename = "preempt_cost_r")]
    pub preempt_cost: f64,
    pub holding: HoldingCost,
}

impl ModelParams {
    /// Number of type-1 tasks the pool can hold, `C / b`.
    pub fn n1_max(&self) -> Result<usize> {
        if self.vms_per_pu == 0 {
            return Err(Error::Config("vms_per_pu_b must be positive".into()));
        }
        if self.capacity == 0 {
            return Err(Error::Config("capacity_C must be positive".into()));
        }
        if !self.capacity.is_multiple_of(self.vms_per_pu) {
            return Err(Error::Config(format!(
                "capacity_C={} is not a multiple of vms_per_pu_b={}",
                self.capacity, self.vms_per_pu
            )));
        }
        Ok(self.capacity / self.vms_per_pu)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("alpha", self.alpha),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.preempt_cost.is_finite() && self.preempt_cost >= 0.0) {
            return Err(Error::Config(format!(
                "preempt_cost_r must be finite and >= 0, got {}",
                self.preempt_cost
            )));
        }
        if !self.reward.is_finite() {
            return Err(Error::Config("reward_R must be finite".into()));
        }
        self.holding.check_finite()?;
        self.n1_max().map(|_| ())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: ModelParams = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }
}

/// System state: `n1` type-1 tasks in service, `n2` type-2 tasks in service or buffered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub n1: usize,
    pub n2: usize,
}

impl State {
    pub const fn new(n1: usize, n2: usize) -> Self {
        State { n1, n2 }
    }
}

/// Events that trigger a decision epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Event {
    /// Type-1 departure.
    D1,
    /// Type-2 departure.
    D2,
    /// Type-1 arrival.
    A1,
    /// Type-2 arrival.
    A2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Continue,
    Admit,
    Reject,
}

/// A validated model: parameters plus the derived constants every routine needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    params: ModelParams,
    n1_max: usize,
    uniformization: f64,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let n1_max = params.n1_max()?;
        let uniformization =
            params.lambda1 + params.lambda2 + params.capacity as f64 * params.mu1.max(params.mu2);
        Ok(Model {
            params,
            n1_max,
            uniformization,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n1_max(&self) -> usize {
        self.n1_max
    }

    pub fn holding(&self) -> &HoldingCost {
        &self.params.holding
    }

    /// `c = λ1 + λ2 + C·max(μ1, μ2)`, an upper bound on every state's exit rate.
    pub fn uniformization_constant(&self) -> f64 {
        self.uniformization
    }

    pub fn check_state(&self, s: State) -> Result<()> {
        if s.n1 > self.n1_max {
            return Err(Error::Domain(format!(
                "n1={} exceeds N1={}",
                s.n1, self.n1_max
            )));
        }
        Ok(())
    }

    /// VMs held by type-1 tasks, `C1(n1) = b·n1`.
    pub fn busy_pu_vms(&self, n1: usize) -> Result<usize> {
        self.check_state(State::new(n1, 0))?;
        Ok(self.c1(n1))
    }

    /// Type-2 tasks in service, `C2 = min(C - C1, n2)`.
    pub fn busy_su_vms(&self, s: State) -> Result<usize> {
        self.check_state(s)?;
        Ok(self.c2(s))
    }

    /// In-service type-2 tasks a newly admitted type-1 task would displace.
    pub fn preempt_count(&self, s: State) -> Result<usize> {
        self.check_state(s)?;
        Ok(self.cv(s))
    }

    /// `β0(s) = λ1 + λ2 + C1·μ1 + C2·μ2`.
    pub fn total_rate(&self, s: State) -> Result<f64> {
        self.check_state(s)?;
        Ok(self.beta0(s))
    }

    pub fn holding_rate(&self, s: State) -> f64 {
        self.params.holding.rate(s.n1, s.n2)
    }

    // Unchecked hot-path versions; callers guarantee s.n1 <= N1.

    #[inline]
    pub(crate) fn c1(&self, n1: usize) -> usize {
        self.params.vms_per_pu * n1
    }

    #[inline]
    pub(crate) fn c2(&self, s: State) -> usize {
        (self.params.capacity - self.c1(s.n1)).min(s.n2)
    }

    #[inline]
    pub(crate) fn cv(&self, s: State) -> usize {
        if s.n1 >= self.n1_max {
            return 0;
        }
        (self.c1(s.n1) + self.c2(s) + self.params.vms_per_pu).saturating_sub(self.params.capacity)
    }

    #[inline]
    pub(crate) fn beta0(&self, s: State) -> f64 {
        let p = &self.params;
        p.lambda1 + p.lambda2 + self.c1(s.n1) as f64 * p.mu1 + self.c2(s) as f64 * p.mu2
    }
}

/// Outcome of one finite-difference condition over the scanned grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub passed: bool,
    /// First `(n1, n2)` cell where the condition fails, in row-major scan order.
    pub first_violation: Option<(usize, usize)>,
}

impl ConditionCheck {
    fn pass() -> Self {
        ConditionCheck {
            passed: true,
            first_violation: None,
        }
    }

    fn fail_at(n1: usize, n2: usize) -> Self {
        ConditionCheck {
            passed: false,
            first_violation: Some((n1, n2)),
        }
    }
}

/// Finite-grid check of the structural hypotheses on the holding cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `f` nondecreasing and convex in `n2` for every `n1`.
    pub convex_nondecreasing_n2: ConditionCheck,
    /// `Δ_{n2} f` nondecreasing in `n1`.
    pub difference_nondecreasing_n1: ConditionCheck,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.convex_nondecreasing_n2.passed && self.difference_nondecreasing_n1.passed
    }
}

// Polynomial differences are exact for integer coefficients; real ones can
// round by a few ulps, which must not count as a violation.
fn below_zero(v: f64, scale: f64) -> bool {
    v < -1e-12 * (1.0 + scale.abs())
}

/// Scan `0..=n1_max × 0..=n2_cap` for the threshold-structure hypotheses.
///
/// `n2_cap` should be at least 2 so that a second difference exists.
pub fn validate_hypotheses(holding: &HoldingCost, n1_max: usize, n2_cap: usize) -> ValidationReport {
    let mut convex = ConditionCheck::pass();
    'rows: for n1 in 0..=n1_max {
        for n2 in 0..n2_cap {
            let d = holding.delta_n2(n1, n2);
            if below_zero(d, holding.rate(n1, n2 + 1)) {
                convex = ConditionCheck::fail_at(n1, n2);
                break 'rows;
            }
            if n2 + 2 <= n2_cap {
                let d2 = holding.delta_n2(n1, n2 + 1) - d;
                if below_zero(d2, holding.rate(n1, n2 + 2)) {
                    convex = ConditionCheck::fail_at(n1, n2);
                    break 'rows;
                }
            }
        }
    }

    let mut cross = ConditionCheck::pass();
    'cross: for n1 in 0..n1_max {
        for n2 in 0..n2_cap {
            let lower = holding.delta_n2(n1, n2);
            let upper = holding.delta_n2(n1 + 1, n2);
            if below_zero(upper - lower, holding.rate(n1 + 1, n2 + 1)) {
                cross = ConditionCheck::fail_at(n1, n2);
                break 'cross;
            }
        }
    }

    ValidationReport {
        convex_nondecreasing_n2: convex,
        difference_nondecreasing_n1: cross,
    }
}
