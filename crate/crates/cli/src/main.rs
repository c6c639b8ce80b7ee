mod config;
mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use vmadmit::io::{actions_to_csv, grid_to_csv, Precision};
use vmadmit::reference::golden_cases;
use vmadmit::structure::STRUCTURE_TOL;
use vmadmit::{
    bounds, build_dataset, check_structure, evaluate_estimator, evaluate_policy, simulate, solve, train, Dataset,
    Error, Mlp, Model, Result, State, ThresholdPolicy, DEFAULT_SCAN_LIMIT,
};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "vmadmit", version, about = "Optimal admission of batch tasks into a preemptive VM pool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for simulation and training (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV values at full precision instead of two decimals.
    #[arg(long)]
    full_precision: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal value grid and control limits.
    Solve(Common),
    /// Print the closed-form bracket on the control limits.
    Bounds(Common),
    /// Value a fixed control-limit policy.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Policy JSON as written by `solve`; defaults to the optimal policy.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Monte Carlo estimate of a policy's discounted value.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Policy JSON as written by `solve`; defaults to the optimal policy.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Overrides `sim.replications`.
        #[arg(long)]
        replications: Option<usize>,
        /// Initial state as `n1,n2`.
        #[arg(long)]
        initial: Option<String>,
    },
    /// Solve a parameter sweep and write the threshold dataset.
    Dataset(Common),
    /// Fit the threshold network to a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// CSV as written by `dataset`.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Predict thresholds with a trained network.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Network JSON as written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Also solve each point and report the errors.
        #[arg(long)]
        compare: bool,
    },
    /// Rerun the baseline settings against the published tables.
    ReproducePaper(Common),
}

enum Failure {
    Core(Error),
    GoldenMismatch(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type CmdResult = std::result::Result<(), Failure>;

struct Context {
    config: RunConfig,
    out: Option<PathBuf>,
    precision: Precision,
    seed: Option<u64>,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let config = RunConfig::load(common.config.as_deref())?;
        let out = common.out.clone().or_else(|| config.output.dir.clone());
        let precision = if common.full_precision {
            Precision::Full
        } else {
            config.output.precision
        };
        Ok(Context {
            config,
            out,
            precision,
            seed: common.seed,
        })
    }

    /// Output directory, created on demand; `out` is the fallback for file-producing commands.
    fn out_dir(&self, fallback: &str) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from(fallback));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn model(&self) -> Result<Model> {
        Model::new(self.config.model()?)
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn read_policy(path: &Path) -> Result<ThresholdPolicy> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read policy {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn parse_state(text: &str) -> Result<State> {
    let bad = || Error::Config(format!("initial state must be `n1,n2`, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let n1 = a.trim().parse().map_err(|_| bad())?;
    let n2 = b.trim().parse().map_err(|_| bad())?;
    Ok(State::new(n1, n2))
}

fn cmd_solve(ctx: &Context) -> CmdResult {
    let model = ctx.model()?;
    let report = solve(&model, &ctx.config.solver)?;
    let structure = check_structure(&report.grid, &report.policy, STRUCTURE_TOL);
    let dir = ctx.out_dir("out")?;
    write(&dir, "grid.csv", &grid_to_csv(&report.grid, ctx.precision))?;
    write(&dir, "actions.csv", &actions_to_csv(&report.policy, report.cap))?;
    write(&dir, "policy.json", &to_json(&report.policy)?)?;
    let summary = json!({ "solve": &report, "structure": structure });
    write(&dir, "report.json", &to_json(&summary)?)?;
    print!("{}", to_json(&json!({ "thresholds": report.policy.levels(), "iterations": report.iterations, "cap": report.cap }))?);
    Ok(())
}

fn cmd_bounds(ctx: &Context) -> CmdResult {
    let model = ctx.model()?;
    print!("{}", to_json(&bounds(&model, DEFAULT_SCAN_LIMIT))?);
    Ok(())
}

fn cmd_evaluate(ctx: &Context, policy: Option<&Path>) -> CmdResult {
    let model = ctx.model()?;
    let policy = match policy {
        Some(p) => read_policy(p)?,
        None => solve(&model, &ctx.config.solver)?.policy,
    };
    let cap = ctx.config.evaluate.cap.unwrap_or_else(|| ctx.config.solver.cap.resolve(&model));
    let value = evaluate_policy(&model, &policy, cap, ctx.config.evaluate.stop)?;
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir)?;
        write(dir, "policy_value.csv", &grid_to_csv(&value.grid, ctx.precision))?;
    }
    let summary = json!({
        "policy": policy,
        "cap": cap,
        "iterations": value.iterations,
        "residual": value.residual,
        "value_at_origin": value.grid.get(0, 0),
    });
    print!("{}", to_json(&summary)?);
    Ok(())
}

fn cmd_simulate(ctx: &Context, policy: Option<&Path>, replications: Option<usize>, initial: Option<&str>) -> CmdResult {
    let model = ctx.model()?;
    let policy = match policy {
        Some(p) => read_policy(p)?,
        None => solve(&model, &ctx.config.solver)?.policy,
    };
    let mut sim = ctx.config.sim;
    if let Some(seed) = ctx.seed {
        sim.seed = seed;
    }
    if let Some(r) = replications {
        sim.replications = r;
    }
    if let Some(s) = initial {
        sim.initial = parse_state(s)?;
    }
    let result = simulate(&model, &policy, &sim)?;
    let text = to_json(&result)?;
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir)?;
        write(dir, "simulation.json", &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_dataset(ctx: &Context) -> CmdResult {
    let sweep = ctx.config.sweep()?;
    let dataset = build_dataset(&sweep, &ctx.config.solver)?;
    let dir = ctx.out_dir("out")?;
    let mut buf = Vec::new();
    dataset.write_csv(&mut buf)?;
    fs::write(dir.join("dataset.csv"), buf)?;
    print!("{}", to_json(&json!({ "rows": dataset.len(), "labels": dataset.label_count }))?);
    Ok(())
}

fn cmd_train(ctx: &Context, dataset: &Path) -> CmdResult {
    let file = fs::File::open(dataset)
        .map_err(|e| Error::Config(format!("cannot read dataset {}: {e}", dataset.display())))?;
    let dataset = Dataset::read_csv(file)?;
    let mut cfg = ctx.config.train;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let (mlp, report) = train(&dataset, &cfg)?;
    let dir = ctx.out_dir("out")?;
    write(&dir, "model.json", &(mlp.to_json()? + "\n"))?;
    let text = to_json(&report)?;
    write(&dir, "train_report.json", &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_predict(ctx: &Context, model: &Path, compare: bool) -> CmdResult {
    let text = fs::read_to_string(model)
        .map_err(|e| Error::Config(format!("cannot read model {}: {e}", model.display())))?;
    let mlp = Mlp::from_json(&text)?;
    let points = ctx.config.predict_points();
    let output = if compare {
        let table = evaluate_estimator(&mlp, &ctx.config.predict_base(), &points, &ctx.config.solver)?;
        to_json(&table)?
    } else {
        let rows: Vec<_> = points
            .iter()
            .map(|f| json!({ "features": f, "predicted": mlp.predict(f) }))
            .collect();
        to_json(&rows)?
    };
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir)?;
        write(dir, "predictions.json", &output)?;
    }
    print!("{output}");
    Ok(())
}

fn cmd_reproduce(ctx: &Context) -> CmdResult {
    let (report, outputs) = reproduce::reproduce(&golden_cases(), ctx.config.model)?;
    let text = to_json(&report)?;
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir)?;
        for o in &outputs {
            let name = &o.report.name;
            write(dir, &format!("{name}-optimal.csv"), &grid_to_csv(&o.optimal, ctx.precision))?;
            write(dir, &format!("{name}-evaluated.csv"), &grid_to_csv(&o.evaluated, ctx.precision))?;
        }
        write(dir, "reproduce.json", &text)?;
    }
    print!("{text}");
    if report.passed {
        Ok(())
    } else {
        Err(Failure::GoldenMismatch(report.mismatch_count))
    }
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Solve(c) => cmd_solve(&Context::new(c)?),
        Command::Bounds(c) => cmd_bounds(&Context::new(c)?),
        Command::Evaluate { common, policy } => cmd_evaluate(&Context::new(common)?, policy.as_deref()),
        Command::Simulate {
            common,
            policy,
            replications,
            initial,
        } => cmd_simulate(&Context::new(common)?, policy.as_deref(), *replications, initial.as_deref()),
        Command::Dataset(c) => cmd_dataset(&Context::new(c)?),
        Command::Train { common, dataset } => cmd_train(&Context::new(common)?, dataset),
        Command::Predict { common, model, compare } => cmd_predict(&Context::new(common)?, model, *compare),
        Command::ReproducePaper(c) => cmd_reproduce(&Context::new(c)?),
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::GoldenMismatch(_) => 3,
            Failure::Core(e) if e.is_config() || matches!(e, Error::Io(_)) => 2,
            Failure::Core(_) => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::GoldenMismatch(cells) => json!({
                "error": "GoldenMismatch",
                "message": format!("{cells} cells differ from the published tables"),
            }),
            Failure::Core(e) => json!({ "error": e.kind(), "message": e.to_string() }),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
