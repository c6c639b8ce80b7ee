//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Tolerances are fixed here rather than derived from the code under test.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmadmit::estimator::{Features, Mlp};
use vmadmit::reference::{
    baseline_params, compare_values, thresholds_of, HIGH_REWARD_OPTIMAL, LOW_REWARD_ACTIONS, LOW_REWARD_OPTIMAL,
};
use vmadmit::solver::admit_envelope;
use vmadmit::structure::{is_concave, STRUCTURE_TOL};
use vmadmit::{
    bounds, bracket_check, build_dataset, check_structure, evaluate_estimator, evaluate_policy, simulate, solve,
    train, validate_hypotheses, HoldingCost, Model, ModelParams, PolyCoefficients, SimConfig, SolveOptions,
    SolveReport, State, StopRule, SweepSpec, TrainConfig, DEFAULT_SCAN_LIMIT,
};

const VALUE_TOL: f64 = 0.01;
const EVAL_TOL: f64 = 0.02;
const TABLE_RUNTIME_S: f64 = 5.0;
const SIM_RUNTIME_S: f64 = 60.0;
const SIM_REPLICATIONS: usize = 100_000;
const MAE_LIMIT: f64 = 1.0;
const VALIDATION_RMSE_LIMIT: f64 = 1.5;
const GRADIENT_REL_TOL: f64 = 1e-6;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Check + 'a>);

fn owned<const N: usize>(rows: &[[f64; N]; 3]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

fn solve_baseline(reward: f64) -> (Model, SolveReport, f64) {
    let model = Model::new(baseline_params(reward)).unwrap();
    let start = Instant::now();
    let report = solve(&model, &SolveOptions::default()).unwrap();
    (model, report, start.elapsed().as_secs_f64())
}

fn values_match(expected: &[Vec<f64>], report: &SolveReport) -> (usize, usize, f64) {
    let misses = compare_values("t", expected, &report.grid, VALUE_TOL).len();
    let cells = expected.iter().map(Vec::len).sum();
    let worst = expected
        .iter()
        .enumerate()
        .flat_map(|(n1, row)| row.iter().enumerate().map(move |(n2, e)| (n1, n2, *e)))
        .map(|(n1, n2, e)| (report.grid.get(n1, n2) - e).abs())
        .fold(0.0, f64::max);
    (misses, cells, worst)
}

fn criterion_1() -> Check {
    let (_, report, secs) = solve_baseline(5.0);
    let (misses, cells, worst) = values_match(&owned(&HIGH_REWARD_OPTIMAL), &report);
    let detail = format!("{}/{cells} cells within {VALUE_TOL}, worst {worst:.4}, solve {secs:.2}s", cells - misses);
    if misses == 0 && secs < TABLE_RUNTIME_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Check {
    let (_, report, _) = solve_baseline(5.0);
    let d = report.policy.levels();
    if d == [18, 17, 16] {
        Ok(format!("D={d:?}"))
    } else {
        Err(format!("D={d:?}, expected [18, 17, 16]"))
    }
}

fn criterion_3a() -> Check {
    let (_, report, _) = solve_baseline(1.0);
    let (misses, cells, worst) = values_match(&owned(&LOW_REWARD_OPTIMAL), &report);
    let detail = format!("{}/{cells} cells within {VALUE_TOL}, worst {worst:.4}", cells - misses);
    if misses == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3b() -> Check {
    let (_, report, _) = solve_baseline(1.0);
    let d = report.policy.levels();
    let printed = thresholds_of(&LOW_REWARD_ACTIONS.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    let expected = [11, 8, 7];
    let detail = format!("D={d:?}, expected {expected:?}; printed action table reads {printed:?}");
    if d == expected {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for reward in [1.0, 5.0] {
        let (model, report, _) = solve_baseline(reward);
        let value = evaluate_policy(&model, &report.policy, report.cap, StopRule::default()).map_err(|e| e.to_string())?;
        let gap = value.grid.sup_distance(&report.grid).map_err(|e| e.to_string())?;
        ok &= gap <= EVAL_TOL;
        lines.push(format!("R={reward}: sup gap {gap:.2e} after {} sweeps", value.iterations));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_rates(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        lambda1: rng.random_range(0.5..=20.0),
        lambda2: rng.random_range(0.5..=20.0),
        mu1: rng.random_range(0.5..=20.0),
        mu2: rng.random_range(0.5..=20.0),
        reward: rng.random_range(0.5..=10.0),
        ..baseline_params(1.0)
    }
}

fn criterion_5() -> Check {
    let mut failures = Vec::new();
    for (reward, upper) in [(5.0, 200), (1.0, 40)] {
        let (model, report, _) = solve_baseline(reward);
        let b = bounds(&model, DEFAULT_SCAN_LIMIT);
        if b.upper != Some(upper) || b.lower.is_some() {
            failures.push(format!("R={reward}: bounds {:?}/{:?}", b.lower, b.upper));
        }
        if let Err(e) = bracket_check(&model, &report.policy, DEFAULT_SCAN_LIMIT) {
            failures.push(format!("R={reward}: {e}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100;
    for i in 0..draws {
        let p = random_rates(&mut rng);
        let outcome = Model::new(p)
            .and_then(|m| solve(&m, &SolveOptions::default()).and_then(|r| bracket_check(&m, &r.policy, DEFAULT_SCAN_LIMIT)));
        if let Err(e) = outcome {
            failures.push(format!("draw {i}: {e}"));
        }
    }
    if failures.is_empty() {
        Ok(format!("upper 200/40, lower absent, {draws} random draws bracketed"))
    } else {
        Err(failures.join("; "))
    }
}

fn random_valid_holding(rng: &mut ChaCha8Rng) -> HoldingCost {
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

fn criterion_6() -> Check {
    let mut settings = vec![baseline_params(5.0), baseline_params(1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..25 {
        let mut p = random_rates(&mut rng);
        p.holding = random_valid_holding(&mut rng);
        settings.push(p);
    }
    let mut failures = Vec::new();
    for (i, p) in settings.iter().enumerate() {
        let result = Model::new(*p).and_then(|m| {
            let r = solve(&m, &SolveOptions::default())?;
            Ok((validate_hypotheses(&p.holding, m.n1_max(), r.cap), r))
        });
        match result {
            Ok((hyp, r)) if hyp.all_passed() => {
                let s = check_structure(&r.grid, &r.policy, STRUCTURE_TOL);
                if !s.passed() {
                    failures.push(format!("setting {i}: {s:?}"));
                }
            }
            Ok(_) => failures.push(format!("setting {i}: holding cost not validated")),
            Err(e) => failures.push(format!("setting {i}: {e}")),
        }
    }
    if failures.is_empty() {
        Ok(format!("{} settings: monotone, concave, cross-row and threshold order hold", settings.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let concave = |rng: &mut ChaCha8Rng, steps: &mut Vec<i64>, start: i64| -> Vec<f64> {
        steps.sort_unstable_by(|a, b| b.cmp(a));
        let mut h = vec![start as f64];
        for s in steps.iter() {
            let last = *h.last().unwrap();
            h.push(last + *s as f64);
        }
        let _ = rng;
        h
    };
    let diffs = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] - w[0]).collect() };
    let sequences = 200;
    for i in 0..sequences {
        let len = rng.random_range(3..40);
        let mut steps: Vec<i64> = (0..len).map(|_| rng.random_range(-30..30)).collect();
        let start = rng.random_range(-100..100);
        let reward = rng.random_range(-10.0..=10.0);
        let h2 = concave(&mut rng, &mut steps, start);
        if !is_concave(&admit_envelope(&h2, reward), 1e-9) {
            return Err(format!("sequence {i}: envelope not concave"));
        }
        let mut gaps: Vec<i64> = (0..len).map(|_| rng.random_range(0..10)).collect();
        gaps.sort_unstable();
        let mut h1 = vec![start as f64];
        for (d, e) in diffs(&h2).iter().zip(&gaps) {
            let last = *h1.last().unwrap();
            h1.push(last + d - *e as f64);
        }
        let g1 = diffs(&admit_envelope(&h1, reward));
        let g2 = diffs(&admit_envelope(&h2, reward));
        if g1.iter().zip(&g2).any(|(a, b)| *a > b + 1e-9) {
            return Err(format!("sequence {i}: difference order broken"));
        }
    }
    Ok(format!("{sequences} sequences pass both checks"))
}

fn criterion_8() -> Check {
    let (model, report, _) = solve_baseline(5.0);
    let tight = StopRule::Tolerance {
        tol: 1e-9,
        max_iter: 500_000,
    };
    let value = evaluate_policy(&model, &report.policy, report.cap, tight).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut inside = 0;
    let mut misses = Vec::new();
    let states: Vec<State> = [0, 1, 2]
        .iter()
        .flat_map(|&n1| [0, 9, 18].map(|n2| State::new(n1, n2)))
        .collect();
    for (i, s) in states.iter().enumerate() {
        let cfg = SimConfig {
            replications: SIM_REPLICATIONS,
            seed: 1000 + i as u64,
            initial: *s,
            ..Default::default()
        };
        let r = simulate(&model, &report.policy, &cfg).map_err(|e| e.to_string())?;
        let v = value.grid.get(s.n1, s.n2);
        if r.contains(v) {
            inside += 1;
        } else {
            misses.push(format!("({},{}) V={v:.3} CI=[{:.3},{:.3}]", s.n1, s.n2, r.ci95.0, r.ci95.1));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{inside}/9 states inside the 95% CI, {secs:.1}s {}", misses.join(" "));
    if inside >= 8 && secs < SIM_RUNTIME_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9(dataset_path: &Path) -> Check {
    let base = baseline_params(1.0);
    let dataset = build_dataset(&SweepSpec::reference_grid(base), &SolveOptions::default()).map_err(|e| e.to_string())?;
    let file = std::fs::File::create(dataset_path).map_err(|e| e.to_string())?;
    dataset.write_csv(file).map_err(|e| e.to_string())?;
    let (mlp, report) = train(&dataset, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let points: Vec<Features> = (0..8).map(|k| [1.3 + k as f64, 1.0, 1.0, 6.0, 8.0]).collect();
    let table = evaluate_estimator(&mlp, &base, &points, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let mae = table.mae.unwrap_or(f64::INFINITY);
    let rmse = report.validation_rmse.unwrap_or(f64::INFINITY);
    let detail = format!(
        "{} rows, MAE {mae:.3}, max error {:?}, validation RMSE {rmse:.3}",
        dataset.len(),
        table.max_abs_error.unwrap_or(-1)
    );
    if dataset.len() == 200 && mae <= MAE_LIMIT && rmse <= VALIDATION_RMSE_LIMIT {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mlp = Mlp::new(5, 4, 3, &mut rng);
    for p in mlp.params_mut() {
        *p += rng.random_range(-0.5..0.5);
    }
    let xs: Vec<Vec<f64>> = (0..10).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (_, grad) = mlp.loss_and_gradient(&xs, &ys);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k = rng.random_range(0..mlp.param_count());
        let mut plus = mlp.clone();
        *plus.params_mut().nth(k).unwrap() += h;
        let mut minus = mlp.clone();
        *minus.params_mut().nth(k).unwrap() -= h;
        let numeric = (plus.loss(&xs, &ys) - minus.loss(&xs, &ys)) / (2.0 * h);
        let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    let detail = format!("worst relative error {worst:.2e} over 20 coordinates");
    if worst < GRADIENT_REL_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Run {
    code: Option<i32>,
    stdout: Vec<u8>,
    files: Vec<(String, Vec<u8>)>,
}

fn run_binary(args: &[&str], out: &Path) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_vmadmit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    Run {
        code: output.status.code(),
        stdout: output.stdout,
        files,
    }
}

fn criterion_11(work: &Path, dataset: &Path) -> Check {
    let config = work.join("config.json");
    let doc = serde_json::json!({
        "model": baseline_params(5.0),
        "sim": { "replications": 5000 },
        "train": { "epochs": 3000 },
    });
    std::fs::write(&config, doc.to_string()).map_err(|e| e.to_string())?;
    let cfg = config.to_str().unwrap();
    let ds = dataset.to_str().unwrap();
    let commands: [(&str, Vec<&str>); 3] = [
        ("reproduce-paper", vec!["reproduce-paper", "--full-precision"]),
        ("simulate", vec!["simulate", "--config", cfg, "--seed", "77"]),
        ("train", vec!["train", "--config", cfg, "--dataset", ds, "--seed", "3"]),
    ];
    let mut notes = Vec::new();
    for (name, args) in &commands {
        let a = run_binary(args, &work.join(format!("{name}-a")));
        let b = run_binary(args, &work.join(format!("{name}-b")));
        if a.stdout.is_empty() || a.files.is_empty() {
            return Err(format!("{name}: no output (exit {:?})", a.code));
        }
        if a.code != b.code || a.stdout != b.stdout || a.files != b.files {
            return Err(format!("{name}: outputs differ between runs"));
        }
        notes.push(format!("{name} ({} files, exit {:?})", a.files.len(), a.code.unwrap_or(-1)));
    }
    Ok(format!("byte-identical: {}", notes.join(", ")))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let dataset = work.path().join("dataset.csv");
    let checks: Vec<Criterion> = vec![
        ("1", "optimal values, R=5", Box::new(criterion_1)),
        ("2", "control limits, R=5", Box::new(criterion_2)),
        ("3a", "optimal values, R=1", Box::new(criterion_3a)),
        ("3b", "control limits, R=1", Box::new(criterion_3b)),
        ("4", "fixed-policy values agree with optimal", Box::new(criterion_4)),
        ("5", "closed-form bracket", Box::new(criterion_5)),
        ("6", "structural properties", Box::new(criterion_6)),
        ("7", "envelope concavity properties", Box::new(criterion_7)),
        ("8", "simulator cross-validation", Box::new(criterion_8)),
        ("9", "estimator quality", Box::new(|| criterion_9(&dataset))),
        ("10", "gradient check", Box::new(criterion_10)),
        ("11", "determinism", Box::new(|| criterion_11(work.path(), &dataset))),
    ];
    let mut failed = 0;
    for (id, title, check) in &checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {id:>3} {title} [{secs:.1}s]: {detail}");
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
