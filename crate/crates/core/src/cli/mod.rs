//! Command-line front end.
//!
//! Exit status: 0 success, 2 parse or validation error, 3 solver
//! infeasibility, 4 divergence or non-convergence of the bidding loop,
//! 1 for failures reading or writing files.

pub mod scenario_file;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cost::MarketScenario;
use crate::dynamics::{self, Tolerance};
use crate::efficiency::{self, write_sweep_csv};
use crate::equilibrium::{self, EquilibriumKind, EquilibriumResult};
use crate::error::MarketError;
use crate::numeric::round12;

pub use scenario_file::{DynamicsSpec, HolderSpec, ScenarioFile, ScenarioFileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "privmarket",
    version,
    about = "Equilibria, bidding dynamics and efficiency loss of a privacy-trading market"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Competitive,
    Oligopoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Three holders A, B, C with demand 2.
    ThreeHolder,
    /// One cheap and two expensive holders, parameterized by --r, --c, --d.
    WorstCase,
    /// --n identical holders with coefficients --a, --h and demand --d.
    Homogeneous,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Competitive equilibrium of a scenario.
    Pce {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Oligopolistic Nash equilibrium of a scenario.
    One {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Runs the distributed bidding loop and writes its trajectory as CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "competitive")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        step_size: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Sets both the absolute and the relative stopping tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Efficiency loss between the two equilibria of a scenario.
    Poa {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Price-of-anarchy sweep over the worst-case family.
    Sweep {
        #[arg(long = "r", value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a scenario file, normalized from --scenario or built from a preset.
    Export {
        #[arg(long, conflicts_with = "preset")]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        a: f64,
        #[arg(long, default_value_t = 0.002)]
        h: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failed command: message for standard error plus exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        let code = match e {
            ScenarioFileError::Io { .. } => EXIT_IO,
            _ => EXIT_PARSE,
        };
        CliError::new(code, format!("scenario error: {e}"))
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        let code = match e {
            MarketError::Diverged { .. } => EXIT_DIVERGED,
            MarketError::InvalidScenario(_) | MarketError::Domain { .. } => EXIT_PARSE,
            _ => EXIT_SOLVER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(EXIT_IO, format!("i/o error: {e}"))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Pce { scenario } => cmd_equilibrium(scenario, EquilibriumKind::Competitive, out),
        Command::One { scenario } => cmd_equilibrium(scenario, EquilibriumKind::Oligopolistic, out),
        Command::Simulate {
            scenario,
            mode,
            out: csv,
            step_size,
            max_iters,
            tol,
        } => cmd_simulate(scenario, *mode, csv, *step_size, *max_iters, *tol, out),
        Command::Poa { scenario } => cmd_poa(scenario, out),
        Command::Sweep { r, c, d, out: csv } => cmd_sweep(r, *c, *d, csv.as_deref(), out),
        Command::Export {
            scenario,
            preset,
            r,
            c,
            d,
            n,
            a,
            h,
            out: path,
        } => {
            let file = match (scenario, preset) {
                (Some(path), _) => ScenarioFile::load(path)?,
                (None, Some(preset)) => preset_file(*preset, *r, *c, *d, *n, *a, *h)?,
                (None, None) => {
                    return Err(CliError::new(
                        EXIT_PARSE,
                        "export needs --scenario or --preset",
                    ))
                }
            };
            write_text(path.as_deref(), &(file.to_json() + "\n"), out)
        }
    }
}

/// JSON number rounded to 12 significant digits; non-finite values as strings.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round12(x))
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn print_json(value: &Value, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    )?;
    Ok(())
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(path: &Path) -> Result<(ScenarioFile, MarketScenario), CliError> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.to_scenario()?;
    Ok((file, scenario))
}

fn solve(
    kind: EquilibriumKind,
    scenario: &MarketScenario,
) -> Result<EquilibriumResult, MarketError> {
    match kind {
        EquilibriumKind::Competitive => equilibrium::solve_pce(scenario),
        EquilibriumKind::Oligopolistic => equilibrium::solve_one(scenario),
    }
}

fn cmd_equilibrium(
    path: &Path,
    kind: EquilibriumKind,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (file, scenario) = load(path)?;
    let result = solve(kind, &scenario)?;
    let kkt = equilibrium::verify_kkt(&result, &scenario)?;
    let net = equilibrium::individual_rationality(&result, &scenario)?;
    let value = json!({
        "equilibrium": kind.to_string(),
        "demand": num(scenario.demand()),
        "labels": file.labels(),
        "benefit": num(result.benefit),
        "allocations": nums(&result.allocations),
        "bids": nums(&result.bids),
        "participants": result.participants,
        "total_cost": num(result.total_cost),
        "kkt": {
            "max_participant_residual": num(kkt.max_participant_residual),
            "max_nonparticipant_residual": num(kkt.max_nonparticipant_residual),
            "threshold": num(kkt.threshold),
            "pass": kkt.pass,
        },
        "net_revenue": nums(&net),
    });
    print_json(&value, out)
}

fn cmd_simulate(
    path: &Path,
    mode: Mode,
    csv: &Path,
    step_size: Option<f64>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (file, scenario) = load(path)?;
    let block = file.dynamics.clone().unwrap_or_default();
    let kind = match mode {
        Mode::Competitive => EquilibriumKind::Competitive,
        Mode::Oligopoly => EquilibriumKind::Oligopolistic,
    };
    let step = step_size
        .or(block.step_size)
        .unwrap_or_else(|| dynamics::recommend_step_size(&scenario));
    let p0 = block
        .p0
        .unwrap_or_else(|| dynamics::default_initial_benefit(&scenario));
    let max_iters = max_iters
        .or(block.max_iters)
        .unwrap_or(dynamics::DEFAULT_MAX_ITERS);
    let tolerance = Tolerance {
        abs: tol.or(block.tol_abs).unwrap_or(dynamics::DEFAULT_TOL_ABS),
        rel: tol.or(block.tol_rel).unwrap_or(dynamics::DEFAULT_TOL_REL),
    };
    for (name, v) in [("--step-size", step), ("--tol", tolerance.abs)] {
        if !v.is_finite() || v < 0.0 {
            return Err(CliError::new(
                EXIT_PARSE,
                format!("{name} must be finite and >= 0"),
            ));
        }
    }

    let exact = solve(kind, &scenario)?;
    let trajectory = dynamics::run_bidding(kind, &scenario, p0, step, max_iters, tolerance)?;

    let mut writer = BufWriter::new(File::create(csv)?);
    trajectory.write_csv(&mut writer)?;
    writer.flush()?;

    let last = trajectory.last();
    let final_state = &trajectory.final_state;
    let distance = final_state
        .allocations
        .iter()
        .zip(&exact.allocations)
        .map(|(q, e)| (q - e).abs())
        .fold((final_state.benefit - exact.benefit).abs(), f64::max);
    let value = json!({
        "mode": match mode { Mode::Competitive => "competitive", Mode::Oligopoly => "oligopoly" },
        "converged": trajectory.converged,
        "iterations": trajectory.iterations(),
        "step_size": num(step),
        "final_benefit": num(final_state.benefit),
        "final_gap": num(last.supply_gap),
        "exact_benefit": num(exact.benefit),
        "distance_to_exact": num(distance),
        "csv": csv.display().to_string(),
    });
    print_json(&value, out)?;
    if trajectory.converged {
        Ok(())
    } else {
        Err(CliError::new(
            EXIT_DIVERGED,
            format!(
                "bidding did not converge within {max_iters} iterations (final gap {})",
                last.supply_gap
            ),
        ))
    }
}

fn cmd_poa(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (_, scenario) = load(path)?;
    let audit = efficiency::audit(&scenario)?;
    let r = &audit.report;
    let c = &r.checks;
    let value = json!({
        "p_pce": num(audit.pce.benefit),
        "p_one": num(audit.one.benefit),
        "c_pce": num(audit.pce.total_cost),
        "c_one": num(audit.one.total_cost),
        "price_ratio": num(r.price_ratio),
        "cost_ratio": num(r.cost_ratio),
        "price_bound": num(r.price_bound),
        "cost_bound": r.cost_bound.map(num),
        "marginal_max": num(r.marginal_max),
        "marginal_min": num(r.marginal_min),
        "competitive_max_allocation": num(r.competitive_max_allocation),
        "participation_superset": r.participation_superset,
        "checks": {
            "participation_superset": c.participation_superset,
            "benefit_order": c.benefit_order,
            "competitive_floor": c.competitive_floor,
            "oligopoly_ceiling": c.oligopoly_ceiling,
            "price_ratio_bound": c.price_ratio_bound,
            "cost_order": c.cost_order,
            "cost_ratio_bound": c.cost_ratio_bound,
        },
        "bounds_hold": r.bounds_hold,
    });
    print_json(&value, out)
}

fn cmd_sweep(
    r: &[f64],
    c: f64,
    d: f64,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let rows = efficiency::poa_sweep(r, c, d)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv is ascii");
    write_text(csv, &text, out)?;
    if let Some(path) = csv {
        writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
    }
    Ok(())
}

fn preset_file(
    preset: Preset,
    r: f64,
    c: f64,
    d: Option<f64>,
    n: usize,
    a: f64,
    h: f64,
) -> Result<ScenarioFile, CliError> {
    let file = match preset {
        Preset::ThreeHolder => {
            let holders = [("A", 0.1, 0.002), ("B", 0.2, 0.005), ("C", 0.1, 0.005)]
                .iter()
                .map(|&(label, a, h)| HolderSpec {
                    a,
                    h,
                    label: Some(label.to_string()),
                })
                .collect();
            ScenarioFile {
                demand: d.unwrap_or(2.0),
                holders,
                dynamics: None,
            }
        }
        Preset::WorstCase => {
            ScenarioFile::from_scenario(&efficiency::worst_case_scenario(r, c, d.unwrap_or(1.0))?)
        }
        Preset::Homogeneous => {
            let scenario = MarketScenario::quadratic(d.unwrap_or(1.0), &vec![(a, h); n])?;
            ScenarioFile::from_scenario(&scenario)
        }
    };
    file.validate()?;
    Ok(file)
}
