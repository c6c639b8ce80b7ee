//! Rerun the two baseline settings and compare them with the published tables.

use serde::Serialize;
use vmadmit::reference::{compare_actions, compare_values, golden_for, CellMismatch, GoldenCase};
use vmadmit::solver::ValueGrid;
use vmadmit::{
    bracket_check, check_structure, evaluate_policy, solve, Model, ModelParams, Result, SolveOptions, StopRule,
    DEFAULT_SCAN_LIMIT,
};

/// Printed tables carry two decimals.
pub const VALUE_TOL: f64 = 0.01;
/// Evaluated versus optimal grid.
pub const AGREEMENT_TOL: f64 = 0.02;

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub reward: f64,
    pub thresholds: Vec<i64>,
    pub cap: usize,
    pub iterations: usize,
    pub upper_bound: Option<usize>,
    pub lower_bound: Option<usize>,
    pub structure_passed: bool,
    /// Sup-norm gap between the evaluated and the optimal grid.
    pub evaluated_vs_optimal: f64,
    /// `false` when no published table exists for the parameters.
    pub compared: bool,
    pub optimal_max_deviation: Option<f64>,
    pub evaluated_max_deviation: Option<f64>,
    pub mismatches: Vec<CellMismatch>,
}

#[derive(Debug, Serialize)]
pub struct ReproReport {
    pub cases: Vec<CaseReport>,
    pub mismatch_count: usize,
    pub passed: bool,
}

pub struct CaseOutput {
    pub report: CaseReport,
    pub optimal: ValueGrid,
    pub evaluated: ValueGrid,
}

fn max_deviation(expected: &[Vec<f64>], grid: &ValueGrid) -> f64 {
    expected
        .iter()
        .enumerate()
        .flat_map(|(n1, row)| row.iter().enumerate().map(move |(n2, &e)| (n1, n2, e)))
        .map(|(n1, n2, e)| (grid.get(n1, n2) - e).abs())
        .fold(0.0, f64::max)
}

pub fn run_case(name: &str, params: ModelParams, golden: Option<&GoldenCase>) -> Result<CaseOutput> {
    let model = Model::new(params)?;
    let solved = solve(&model, &SolveOptions::default())?;
    let evaluated = evaluate_policy(&model, &solved.policy, solved.cap, StopRule::default())?;
    let bracket = bracket_check(&model, &solved.policy, DEFAULT_SCAN_LIMIT)?;
    let structure = check_structure(&solved.grid, &solved.policy, vmadmit::structure::STRUCTURE_TOL);
    let gap = solved.grid.sup_distance(&evaluated.grid)?;

    let mut mismatches = Vec::new();
    let (mut optimal_dev, mut evaluated_dev) = (None, None);
    if let Some(g) = golden {
        mismatches.extend(compare_values("optimal", &g.optimal, &solved.grid, VALUE_TOL));
        mismatches.extend(compare_values("evaluated", &g.evaluated, &evaluated.grid, VALUE_TOL));
        mismatches.extend(compare_actions("actions", &g.actions, &solved.policy));
        optimal_dev = Some(max_deviation(&g.optimal, &solved.grid));
        evaluated_dev = Some(max_deviation(&g.evaluated, &evaluated.grid));
    }
    if gap > AGREEMENT_TOL {
        mismatches.push(CellMismatch {
            table: "evaluated_vs_optimal".into(),
            n1: 0,
            n2: 0,
            expected: 0.0,
            actual: gap,
        });
    }

    let report = CaseReport {
        name: name.to_string(),
        reward: params.reward,
        thresholds: solved.policy.levels(),
        cap: solved.cap,
        iterations: solved.iterations,
        upper_bound: bracket.bounds.upper,
        lower_bound: bracket.bounds.lower,
        structure_passed: structure.passed(),
        evaluated_vs_optimal: gap,
        compared: golden.is_some(),
        optimal_max_deviation: optimal_dev,
        evaluated_max_deviation: evaluated_dev,
        mismatches,
    };
    Ok(CaseOutput {
        report,
        optimal: solved.grid,
        evaluated: evaluated.grid,
    })
}

/// Run every case; an explicit `params` replaces the built-in cases.
pub fn reproduce(cases: &[GoldenCase], params: Option<ModelParams>) -> Result<(ReproReport, Vec<CaseOutput>)> {
    let outputs = match params {
        Some(p) => {
            let golden = golden_for(&p);
            let name = golden.as_ref().map_or("custom", |g| g.name);
            vec![run_case(name, p, golden.as_ref())?]
        }
        None => cases
            .iter()
            .map(|g| run_case(g.name, g.params, Some(g)))
            .collect::<Result<Vec<_>>>()?,
    };
    let mismatch_count = outputs.iter().map(|o| o.report.mismatches.len()).sum();
    let report = ReproReport {
        cases: outputs.iter().map(|o| o.report.clone()).collect(),
        mismatch_count,
        passed: mismatch_count == 0,
    };
    Ok((report, outputs))
}
