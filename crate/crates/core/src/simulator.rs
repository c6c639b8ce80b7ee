//! Monte Carlo simulation of the VM pool under a control-limit policy.
//!
//! Each replication runs the continuous-time chain directly: holding times
//! are `Exp(β0(s))` and the next event is drawn in proportion to
//! `(λ1, λ2, C1·μ1, C2·μ2)`. Holding cost is integrated in closed form over
//! every interval, lump rewards are discounted at their event time, and the
//! run stops once `e^{-αt}` drops below the discount floor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Event, Model, State};
use crate::solver::ThresholdPolicy;

/// `Φ⁻¹(0.975)`.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub discount_floor: f64,
    pub replications: usize,
    pub seed: u64,
    pub initial: State,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            discount_floor: 1e-6,
            replications: 100_000,
            seed: 0x5eed,
            initial: State::new(0, 0),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount_floor > 0.0 && self.discount_floor < 1.0) {
            return Err(Error::Config(format!(
                "discount_floor must be in (0, 1), got {}",
                self.discount_floor
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        Ok(())
    }

    pub fn horizon(&self, alpha: f64) -> f64 {
        (1.0 / self.discount_floor).ln() / alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub replications: usize,
    pub events_total: u64,
    pub seed: u64,
}

impl SimResult {
    pub fn contains(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: State,
    /// Undiscounted lump reward of the transition.
    pub lump: f64,
    pub admitted: bool,
}

/// Apply one event to `s` under `policy`.
pub fn step(model: &Model, s: State, event: Event, policy: &ThresholdPolicy) -> Result<Transition> {
    model.check_state(s)?;
    transition(model, s, event, policy).ok_or(Error::InfeasibleEvent {
        event,
        n1: s.n1,
        n2: s.n2,
    })
}

/// Unchecked core of [`step`]; `None` for a departure with no task to leave.
#[inline]
fn transition(model: &Model, s: State, event: Event, policy: &ThresholdPolicy) -> Option<Transition> {
    let p = model.params();
    let stay = Transition {
        state: s,
        lump: 0.0,
        admitted: false,
    };
    Some(match event {
        Event::A1 if s.n1 < model.n1_max() => Transition {
            // Displaced type-2 tasks go back to the buffer; n2 is unchanged.
            state: State::new(s.n1 + 1, s.n2),
            lump: -(model.cv(s) as f64) * p.preempt_cost,
            admitted: true,
        },
        Event::A1 => stay,
        Event::A2 if policy.admits(s) => Transition {
            state: State::new(s.n1, s.n2 + 1),
            lump: p.reward,
            admitted: true,
        },
        Event::A2 => stay,
        Event::D1 if s.n1 > 0 => Transition {
            state: State::new(s.n1 - 1, s.n2),
            ..stay
        },
        Event::D2 if model.c2(s) > 0 => Transition {
            state: State::new(s.n1, s.n2 - 1),
            ..stay
        },
        Event::D1 | Event::D2 => return None,
    })
}

/// Discounted reward of one replication and the number of events it took.
fn replicate(model: &Model, policy: &ThresholdPolicy, config: &SimConfig, stream: u64) -> (f64, u64) {
    let p = model.params();
    let alpha = p.alpha;
    let horizon = config.horizon(alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let mut s = config.initial;
    let mut t = 0.0f64;
    let mut discount = 1.0f64;
    let mut total = 0.0f64;
    let mut events = 0u64;
    loop {
        let pu_departures = model.c1(s.n1) as f64 * p.mu1;
        let su_departures = model.c2(s) as f64 * p.mu2;
        let rate = p.lambda1 + p.lambda2 + pu_departures + su_departures;
        let dt = rng.sample::<f64, _>(Exp1) / rate;
        let t_next = t + dt;
        let end = t_next.min(horizon);
        let discount_end = (-alpha * end).exp();
        let holding = model.holding_rate(s);
        if holding != 0.0 {
            total -= holding * (discount - discount_end) / alpha;
        }
        if t_next >= horizon {
            break;
        }
        t = t_next;
        discount = discount_end;

        let u = rng.random::<f64>() * rate;
        let event = if u < p.lambda1 {
            Event::A1
        } else if u < p.lambda1 + p.lambda2 {
            Event::A2
        } else if u < p.lambda1 + p.lambda2 + pu_departures {
            Event::D1
        } else {
            Event::D2
        };
        // None only on the float edge of the race picking a zero-rate departure; redraw.
        let Some(tr) = transition(model, s, event, policy) else {
            continue;
        };
        if tr.lump != 0.0 {
            total += tr.lump * discount;
        }
        s = tr.state;
        debug_assert!(s.n1 <= model.n1_max());
        events += 1;
    }
    (total, events)
}

/// Neumaier-compensated sum; order matters only through the slice order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn simulate(model: &Model, policy: &ThresholdPolicy, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    model.check_state(config.initial)?;
    if policy.thresholds.len() != model.n1_max() + 1 {
        return Err(Error::Config(format!(
            "policy has {} rows, model needs {}",
            policy.thresholds.len(),
            model.n1_max() + 1
        )));
    }

    let samples: Vec<(f64, u64)> = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| replicate(model, policy, config, i))
        .collect();

    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().map(|s| s.0)) / n;
    let std_error = if samples.len() > 1 {
        let ss = compensated_sum(samples.iter().map(|s| (s.0 - mean) * (s.0 - mean)));
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    let half = Z_95 * std_error;
    Ok(SimResult {
        mean,
        std_error,
        ci95: (mean - half, mean + half),
        replications: samples.len(),
        events_total: samples.iter().map(|s| s.1).sum(),
        seed: config.seed,
    })
}
