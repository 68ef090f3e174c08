//! Scenario runners behind the `harvest-dde` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 premise violation,
//! 4 integration failure, 5 periodic solve not converged.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    periodicity_margins, persistence_bounds_with_floor, validate_premises_with_floor,
    verify_bounds, BoundsReport, BoundsVerdict, PeriodicityCondition, PeriodicityReport, Premise,
    PremiseReport,
};
use crate::dde::{fmt_f64, integrate};
use crate::error::Error;
use crate::periodic::{solve_periodic, PeriodicSolveResult};
use crate::scenario::{ConfigError, Scenario, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PREMISE: i32 = 3;
pub const EXIT_INTEGRATION: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("premise `{premise}` violated at t = {t} (value {value})")]
    Premise { premise: String, t: f64, value: f64 },

    #[error("integration failed: {0}")]
    Integration(Error),

    #[error(
        "periodic solve did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NotConverged { residual: f64, iterations: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Premise { .. } => EXIT_PREMISE,
            CliError::Integration(_) => EXIT_INTEGRATION,
            CliError::NotConverged { .. } => EXIT_NOT_CONVERGED,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Io { .. } => "io_error",
            CliError::Premise { .. } => "premise_violation",
            CliError::Integration(_) => "integration_failure",
            CliError::NotConverged { .. } => "not_converged",
        }
    }

    /// Machine-readable error block.
    pub fn to_json(&self) -> serde_json::Value {
        let mut block = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        let extra = match self {
            CliError::Config(e) => json!({"file": e.file, "field": e.field}),
            CliError::Premise { premise, t, value } => {
                json!({"premise": premise, "t": t, "value": value})
            }
            CliError::Integration(Error::PositivityLoss { t, value }) => {
                json!({"t": t, "value": value})
            }
            CliError::NotConverged {
                residual,
                iterations,
            } => {
                json!({"residual": residual, "iterations": iterations})
            }
            _ => json!({}),
        };
        if let (Some(obj), Some(extra)) = (block.as_object_mut(), extra.as_object()) {
            obj.extend(extra.clone());
        }
        json!({ "error": block })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::PremiseViolation { premise, t, value } => {
                CliError::Premise { premise, t, value }
            }
            Error::NotConverged {
                residual,
                iterations,
            } => CliError::NotConverged {
                residual,
                iterations,
            },
            Error::InvalidInput(msg) => CliError::Config(ConfigError {
                file: "scenario".into(),
                field: ".".into(),
                message: msg,
            }),
            other => CliError::Integration(other),
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

/// Premise check over the analysis horizon plus the initial function check.
fn check_model(scenario: &Scenario, horizon: f64) -> Result<PremiseReport, CliError> {
    let a = &scenario.analysis;
    let premises = validate_premises_with_floor(&scenario.model, horizon, a.grid_n, a.floor);
    premises.require_model()?;
    let depth = scenario.model.max_delay(horizon, a.grid_n);
    scenario.initial.validate(depth, a.grid_n)?;
    Ok(premises)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub premises: PremiseReport,
    pub bounds: Option<BoundsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds_note: Option<String>,
    pub verification: Option<BoundsVerdict>,
    pub step: f64,
    pub t_end: f64,
    pub nodes: usize,
    pub final_value: f64,
}

/// Integrates the scenario and writes the trajectory CSV and a premises/bounds report.
pub fn run_simulate(scenario: &Scenario, out: &Path) -> Result<SimulationReport, CliError> {
    let t_end = scenario.integration.t_end;
    let premises = match check_model(scenario, t_end) {
        Ok(p) => p,
        Err(e) => {
            let premises = validate_premises_with_floor(
                &scenario.model,
                t_end,
                scenario.analysis.grid_n,
                scenario.analysis.floor,
            );
            write_json(
                out,
                &scenario.outputs.report,
                &json!({"premises": premises, "error": e.to_json()["error"]}),
            )?;
            return Err(e);
        }
    };

    let traj = integrate(&scenario.model, &scenario.initial, &scenario.integration)
        .map_err(CliError::from)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, scenario.outputs.oversample)
        .expect("writing to memory cannot fail");
    write_file(out, &scenario.outputs.trajectory, &csv)?;

    let a = &scenario.analysis;
    let (bounds, bounds_note) = if premises.passed(Premise::FecundityExceedsLoss) {
        match persistence_bounds_with_floor(
            &scenario.model,
            scenario.initial.n0,
            scenario.analysis_horizon(),
            a.grid_n,
            a.quad_n,
            a.floor,
        ) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (
            None,
            Some("r(t) > b(t) fails; persistence bounds are undefined".to_string()),
        )
    };
    let verification = bounds.as_ref().map(|b| verify_bounds(&traj, b, a.tol));
    let last = traj.nodes()[traj.nodes().len() - 1];
    let report = SimulationReport {
        premises,
        bounds,
        bounds_note,
        verification,
        step: traj.step(),
        t_end: traj.t_end(),
        nodes: traj.nodes().len(),
        final_value: last.n,
    };
    write_json(out, &scenario.outputs.report, &report)?;
    Ok(report)
}

/// Computes the persistence bounds and writes them as JSON.
pub fn run_bounds(scenario: &Scenario, out: &Path) -> Result<BoundsReport, CliError> {
    let horizon = scenario.analysis_horizon();
    check_model(scenario, horizon)?;
    let a = &scenario.analysis;
    let report = persistence_bounds_with_floor(
        &scenario.model,
        scenario.initial.n0,
        horizon,
        a.grid_n,
        a.quad_n,
        a.floor,
    )?;
    write_json(out, &scenario.outputs.bounds, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOutput {
    pub margins: PeriodicityReport,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub result: Option<PeriodicSolveResult>,
}

/// Periodicity margins, then (unless skipped) the periodic solve.
pub fn run_periodic(
    scenario: &Scenario,
    out: &Path,
    force: bool,
) -> Result<PeriodicOutput, CliError> {
    let period = scenario.model.period.ok_or_else(|| {
        CliError::Config(ConfigError {
            file: "scenario".into(),
            field: "model.period".into(),
            message: "the periodic solve needs a declared period".into(),
        })
    })?;
    check_model(scenario, period)?;
    let margins = periodicity_margins(&scenario.model, scenario.analysis.grid_n)?;
    let force = force || scenario.periodic.force;
    if margins.condition == PeriodicityCondition::Neither && !force {
        let output = PeriodicOutput {
            margins,
            skipped: true,
            note: Some(
                "neither margin condition holds; solve skipped (use --force to run it)".into(),
            ),
            result: None,
        };
        write_json(out, &scenario.outputs.periodic, &output)?;
        return Ok(output);
    }
    let cfg = scenario.periodic.solver_config(
        scenario.analysis.grid_n,
        scenario.integration.max_lag_iterations,
    );
    let seed = scenario.periodic.seed_segment(&scenario.model, &cfg)?;
    let result = solve_periodic(&scenario.model, &seed, &cfg)?;
    let mut csv = Vec::new();
    result
        .trajectory_one_period
        .write_csv(&mut csv, scenario.outputs.oversample)
        .expect("writing to memory cannot fail");
    write_file(out, &scenario.outputs.periodic_trajectory, &csv)?;
    let converged = result.converged;
    let (residual, iterations) = (result.residual, result.iterations);
    let note = (!margins.condition.guarantees_existence())
        .then(|| "solve forced although neither margin condition holds".to_string());
    let output = PeriodicOutput {
        margins,
        skipped: false,
        note,
        result: Some(result),
    };
    write_json(out, &scenario.outputs.periodic, &output)?;
    if converged {
        Ok(output)
    } else {
        Err(CliError::NotConverged {
            residual,
            iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cell: usize,
    pub values: Vec<f64>,
    pub premises_ok: bool,
    pub failed_premise: Option<String>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub m: Option<f64>,
    pub big_m: Option<f64>,
    pub log_bound: Option<f64>,
    pub condition: Option<PeriodicityCondition>,
}

fn sweep_cell(base: &Scenario, spec: &SweepSpec, cell: usize, values: Vec<f64>) -> SweepRow {
    let mut row = SweepRow {
        cell,
        values: values.clone(),
        premises_ok: false,
        failed_premise: None,
        lower: None,
        upper: None,
        m: None,
        big_m: None,
        log_bound: None,
        condition: None,
    };
    let mut scenario = base.clone();
    for (axis, v) in spec.axes.iter().zip(&values) {
        match scenario.with_field(&axis.path, *v) {
            Ok(s) => scenario = s,
            Err(e) => {
                row.failed_premise = Some(format!("invalid cell: {}", e.message));
                return row;
            }
        }
    }
    let horizon = scenario.analysis_horizon();
    let a = &scenario.analysis;
    let premises = validate_premises_with_floor(&scenario.model, horizon, a.grid_n, a.floor);
    row.premises_ok = premises.all_passed();
    if let Some(c) = premises.first_failure() {
        row.failed_premise = Some(c.label.clone());
        return row;
    }
    if let Ok(b) = persistence_bounds_with_floor(
        &scenario.model,
        scenario.initial.n0,
        horizon,
        a.grid_n,
        a.quad_n,
        a.floor,
    ) {
        row.lower = Some(b.lower);
        row.upper = Some(b.upper);
    }
    if scenario.model.period.is_some() {
        if let Ok(m) = periodicity_margins(&scenario.model, a.grid_n) {
            row.m = Some(m.inf_margin);
            row.big_m = Some(m.sup_margin);
            row.log_bound = Some(m.log_bound);
            row.condition = Some(m.condition);
        }
    }
    row
}

/// Bounds and margins for every cell of the sweep grid, in cell order.
pub fn run_sweep(
    scenario: &Scenario,
    spec: &SweepSpec,
    out: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    for axis in &spec.axes {
        scenario.check_axis(&axis.path)?;
    }
    let rows: Vec<SweepRow> = spec
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, values)| sweep_cell(scenario, spec, i, values))
        .collect();

    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut csv = String::from("cell");
    for axis in &spec.axes {
        csv.push(',');
        csv.push_str(&axis.path);
    }
    csv.push_str(",premises_ok,failed_premise,lower,upper,m,M,B,condition\n");
    for row in &rows {
        csv.push_str(&row.cell.to_string());
        for v in &row.values {
            csv.push(',');
            csv.push_str(&fmt_f64(*v));
        }
        csv.push_str(&format!(
            ",{},{},{},{},{},{},{},{}\n",
            row.premises_ok,
            row.failed_premise.as_deref().unwrap_or(""),
            opt(row.lower),
            opt(row.upper),
            opt(row.m),
            opt(row.big_m),
            opt(row.log_bound),
            row.condition.map(|c| c.to_string()).unwrap_or_default(),
        ));
    }
    write_file(out, &scenario.outputs.sweep, csv.as_bytes())?;
    Ok(rows)
}

#[derive(Debug, Parser)]
#[command(
    name = "harvest-dde",
    version,
    about = "Delayed harvested population model: simulation, bounds, periodic solutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Sampling points for premise checks, bounds and margins.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Simpson panels per delay integral.
    #[arg(long)]
    pub quad_n: Option<usize>,
    /// Verification slack (simulate, bounds, sweep) or Picard tolerance (periodic).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scenario and check the persistence bounds along the trajectory.
    Simulate(CommonArgs),
    /// Compute the persistence bounds.
    Bounds(CommonArgs),
    /// Compute periodicity margins and search for a periodic solution.
    Periodic {
        #[command(flatten)]
        common: CommonArgs,
        /// Solve even if neither margin condition holds.
        #[arg(long)]
        force: bool,
    },
    /// Bounds and margins over a grid of parameter values.
    Sweep(CommonArgs),
}

fn load(args: &CommonArgs, periodic: bool) -> Result<Scenario, CliError> {
    let mut scenario = Scenario::load(&args.config)?;
    if let Some(n) = args.grid_n {
        scenario.analysis.grid_n = n;
    }
    if let Some(n) = args.quad_n {
        scenario.analysis.quad_n = n;
    }
    if let Some(tol) = args.tol {
        if periodic {
            scenario.periodic.tol = tol;
        } else {
            scenario.analysis.tol = tol;
        }
    }
    scenario.validate(&args.config.display().to_string())?;
    Ok(scenario)
}

fn print_table(rows: &[(&str, String)]) {
    let width = rows
        .iter()
        .map(|(k, _)| k.chars().count())
        .max()
        .unwrap_or(0);
    for (k, v) in rows {
        println!("{k:<width$}  {v}");
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => {
            let scenario = load(args, false)?;
            let r = run_simulate(&scenario, &args.out)?;
            let mut rows = vec![
                ("nodes", r.nodes.to_string()),
                ("t_end", r.t_end.to_string()),
                ("N(t_end)", r.final_value.to_string()),
            ];
            if let (Some(b), Some(v)) = (&r.bounds, &r.verification) {
                rows.push(("lower bound", b.lower.to_string()));
                rows.push(("upper bound", b.upper.to_string()));
                rows.push(("min N", v.min_n.to_string()));
                rows.push(("max N", v.max_n.to_string()));
                rows.push(("contained", v.passed.to_string()));
            }
            print_table(&rows);
        }
        Command::Bounds(args) => {
            let scenario = load(args, false)?;
            let b = run_bounds(&scenario, &args.out)?;
            print_table(&[
                ("lower", b.lower.to_string()),
                ("upper", b.upper.to_string()),
                ("inf K(r/b-1)^(1/γ)", b.inner_inf.to_string()),
                ("sup K(r/b-1)^(1/γ)", b.inner_sup.to_string()),
                ("sup ∫b", b.sup_int_b.to_string()),
                ("sup ∫(r-b)", b.sup_int_rb.to_string()),
            ]);
        }
        Command::Periodic { common, force } => {
            let scenario = load(common, true)?;
            let r = run_periodic(&scenario, &common.out, *force)?;
            let mut rows = vec![
                ("m", r.margins.inf_margin.to_string()),
                ("M", r.margins.sup_margin.to_string()),
                ("B", r.margins.log_bound.to_string()),
                ("condition", r.margins.condition.to_string()),
            ];
            match &r.result {
                Some(res) => {
                    rows.push(("iterations", res.iterations.to_string()));
                    rows.push(("residual", format!("{:e}", res.residual)));
                    if let Some(p) = res.periodicity_residual {
                        rows.push(("periodicity check", format!("{p:e}")));
                    }
                    rows.push(("N(0)", res.final_segment.terminal().to_string()));
                }
                None => rows.push(("solve", "skipped".to_string())),
            }
            print_table(&rows);
        }
        Command::Sweep(args) => {
            let scenario = load(args, false)?;
            let spec = scenario.sweep.clone().ok_or_else(|| {
                CliError::Config(ConfigError {
                    file: args.config.display().to_string(),
                    field: "sweep".into(),
                    message: "missing sweep section".into(),
                })
            })?;
            let rows = run_sweep(&scenario, &spec, &args.out)?;
            let flagged = rows.iter().filter(|r| !r.premises_ok).count();
            print_table(&[
                ("cells", rows.len().to_string()),
                ("flagged", flagged.to_string()),
            ]);
        }
    }
    Ok(())
}

fn out_dir(command: &Command) -> &Path {
    match command {
        Command::Simulate(a) | Command::Bounds(a) | Command::Sweep(a) => &a.out,
        Command::Periodic { common, .. } => &common.out,
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let block = e.to_json();
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&block).expect("error block serializes")
            );
            if !matches!(e, CliError::Io { .. }) {
                let _ = write_json(out_dir(&cli.command), "error.json", &block);
            }
            e.exit_code()
        }
    }
}

/// Initializes logging from `HARVEST_DDE_LOG` (`error`, `info` or `debug`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("HARVEST_DDE_LOG", "error");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}
