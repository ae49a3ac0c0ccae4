use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use mipopt::io::{self, BuildingSituation, CsvSource, Scenario};
use mipopt::lp::export_lp;
use mipopt::solve::{self, Backend, ExternalSolver, SolutionFormat, SolveOptions, Status};

/// Schedules building energy systems by mixed-integer linear optimization.
#[derive(Parser)]
#[command(name = "mipopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, solve and write the schedule.
    Optimize(OptimizeArgs),
    /// Parse the descriptions and check the generated model.
    Validate(Inputs),
    /// Print the generated rows whose tag starts with a prefix.
    Explain {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "")]
        prefix: String,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    situation: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Builtin,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Cbc,
    Plain,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "builtin")]
    solver: SolverKind,
    /// Command with `{in}` and `{out}` placeholders; defaults to CBC.
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long, value_enum, default_value = "cbc")]
    solution_format: Format,
    /// Also write the LP file here (before solving).
    #[arg(long)]
    emit_lp: Option<PathBuf>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

type Failure = Box<dyn std::error::Error>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read `{}`: {e}", path.display()).into())
}

fn load(inputs: &Inputs) -> Result<(BuildingSituation, Scenario), Failure> {
    let config = io::parse_configuration(&read(&inputs.config)?)
        .map_err(|e| format!("{}: {e}", inputs.config.display()))?;
    let situation = io::parse_situation(&read(&inputs.situation)?, &config)
        .map_err(|e| format!("{}: {e}", inputs.situation.display()))?;
    let base = inputs.situation.parent().unwrap_or(Path::new("."));
    let scenario = io::build_scenario(&config, &situation, &CsvSource::new(base))?;
    info!(
        "scenario `{}`: {} variables, {} rows",
        scenario.id,
        scenario.model.num_vars(),
        scenario.model.num_constraints()
    );
    Ok((situation, scenario))
}

/// The situation's `fileNameHDF5` stem names the schedule files.
fn schedule_stem(situation: &BuildingSituation) -> String {
    situation
        .file_name_hdf5
        .as_deref()
        .and_then(|f| Path::new(f).file_stem())
        .and_then(|s| s.to_str())
        .unwrap_or("schedule")
        .to_string()
}

fn validate(inputs: &Inputs) -> Result<ExitCode, Failure> {
    let (_, s) = load(inputs)?;
    let report = s.model.validate();
    for &c in &report.infeasible_rows {
        eprintln!("infeasible constant row {}", s.model.render_row(&s.model.constraints()[c.index()]));
    }
    if !report.infeasible_rows.is_empty() {
        return Ok(ExitCode::from(1));
    }
    println!(
        "{}: {} variables ({} unused), {} rows, {} big-M constants",
        s.id,
        s.model.num_vars(),
        report.unused_vars.len(),
        s.model.num_constraints(),
        s.model.big_ms().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn explain(inputs: &Inputs, prefix: &str) -> Result<ExitCode, Failure> {
    let (_, s) = load(inputs)?;
    let mut out = std::io::stdout().lock();
    for (_, c) in s.model.constraints_with_prefix(prefix) {
        match writeln!(out, "{}", s.model.render_row(c)) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => break,
            r => r?,
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn optimize(a: &OptimizeArgs) -> Result<ExitCode, Failure> {
    let (situation, s) = load(&a.inputs)?;
    if let Some(path) = &a.emit_lp {
        std::fs::write(path, export_lp(&s.model).text)
            .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?;
        info!("wrote {}", path.display());
    }
    let mut options = SolveOptions::default();
    if let Some(t) = a.time_limit {
        if !(t > 0.0) || !t.is_finite() {
            return Err("--time-limit must be a positive number of seconds".into());
        }
        options.time_limit = Some(Duration::from_secs_f64(t));
    }
    if let SolverKind::External = a.solver {
        let format = match a.solution_format {
            Format::Cbc => SolutionFormat::Cbc,
            Format::Plain => SolutionFormat::Plain,
        };
        let command = a.solver_cmd.clone().unwrap_or_else(|| "cbc {in} solve solu {out}".to_string());
        options.backend = Backend::External(ExternalSolver { command, format });
    } else if a.solver_cmd.is_some() {
        return Err("--solver-cmd needs --solver external".into());
    }
    let solution = solve::solve(&s.model, &options)?;
    let schedule = solve::extract_schedule(&solution, &s.ledger, &s.grid);
    let written = io::write_schedule(&schedule, &s.id, &a.out, &schedule_stem(&situation))?;
    match &written.csv {
        Some(p) => println!("{}: objective {} ({})", solution.status.label(), solution.objective, p.display()),
        None => println!("{}", solution.status.label()),
    }
    Ok(match solution.status {
        Status::Infeasible => ExitCode::from(2),
        _ if solution.has_solution() => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Optimize(a) => optimize(a),
        Command::Validate(inputs) => validate(inputs),
        Command::Explain { inputs, prefix } => explain(inputs, prefix),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
