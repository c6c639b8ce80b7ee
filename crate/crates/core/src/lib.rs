//! Admission control for batch tasks in a virtual machine pool shared with
//! preemptive online tasks.
//!
//! The pool has `C` VMs. Online (type-1) tasks take `b` VMs each and are
//! always admitted while capacity remains, displacing batch (type-2) tasks
//! back to the buffer. Each batch arrival is admitted or rejected; admission
//! earns `R`, preemption costs `r` per displaced task, and occupancy accrues a
//! holding cost `f(n1, n2)`. The optimal discounted policy is a control limit
//! `admit iff n2 <= D(n1)`.
//!
//! * [`solver`] computes the optimal value grid and limits.
//! * [`bounds`] brackets the limits in closed form.
//! * [`evaluator`] values an arbitrary limit policy.
//! * [`simulator`] estimates the same value by Monte Carlo.
//! * [`estimator`] learns the limits from model parameters.

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod evaluator;
pub mod io;
pub mod model;
pub mod reference;
pub mod simulator;
pub mod solver;
pub mod structure;

pub use bounds::{bounds, bracket_check, lower_bound, upper_bound, BoundsResult, BracketReport, DEFAULT_SCAN_LIMIT};
pub use error::{Error, Result};
pub use estimator::{build_dataset, evaluate_estimator, train, ComparisonTable, Dataset, Mlp, SweepSpec, TrainConfig, TrainReport};
pub use evaluator::{compare_grids, evaluate_policy, PolicyValueGrid, StopRule};
pub use io::Precision;
pub use model::{validate_hypotheses, Action, Event, HoldingCost, Model, ModelParams, PolyCoefficients, State, ValidationReport};
pub use simulator::{simulate, step, SimConfig, SimResult};
pub use solver::{solve, Cap, SolveOptions, SolveReport, Threshold, ThresholdPolicy, ValueGrid};
pub use structure::{check_structure, StructureReport};
