#![allow(dead_code)]

use rand::Rng;
use vmadmit::reference::baseline_params;
use vmadmit::{HoldingCost, ModelParams, PolyCoefficients};

/// Baseline geometry with rates drawn from `[0.5, 20]` and `R` from `[0.5, 10]`.
pub fn random_rates(rng: &mut impl Rng) -> ModelParams {
    ModelParams {
        lambda1: rng.random_range(0.5..=20.0),
        lambda2: rng.random_range(0.5..=20.0),
        mu1: rng.random_range(0.5..=20.0),
        mu2: rng.random_range(0.5..=20.0),
        reward: rng.random_range(0.5..=10.0),
        ..baseline_params(1.0)
    }
}

/// Convex, nondecreasing in `n2` with `Δ_{n2} f` nondecreasing in `n1`.
pub fn random_valid_holding(rng: &mut impl Rng) -> HoldingCost {
    let c02 = rng.random_range(0.2..=2.0);
    HoldingCost::polynomial(PolyCoefficients {
        c20: rng.random_range(0.0..=2.0),
        c02,
        c11: rng.random_range(0.0..=1.0),
        c10: rng.random_range(-1.0..=1.0),
        c01: rng.random_range(-c02..=3.0),
        c00: rng.random_range(-5.0..=5.0),
    })
}
