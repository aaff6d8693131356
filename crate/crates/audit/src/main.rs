use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use walker_audit::{load, run, Command, Format, Overrides};

/// Audits the geometry of Walker three-manifolds and their umbilical surfaces.
#[derive(Debug, Parser)]
#[command(name = "walker-audit", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Frame, connection and torsion checks over the metric grid
    FrameCheck(RunArgs),
    /// Closed-form curvature against the coordinate Riemann oracle
    CurvatureCheck(RunArgs),
    /// Conformal flatness verdict cross-checked with the Cotton tensor
    LcfTest(RunArgs),
    /// Umbilicity scan and case classification of the configured surface
    UmbilicScan(RunArgs),
    /// Builds the ODE surface family and verifies it
    ParallelConstruct(RunArgs),
    /// Seeded random sweeps of the gradient and bracket identities
    TheoremAudit(RunArgs),
    /// Everything the scenario supports
    All(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    #[value(alias = "json")]
    Structured,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Overrides `analysis.seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides one tolerance, e.g. `umbilic=1e-8`; repeatable
    #[arg(long = "tol-override", value_name = "KEY=VALUE")]
    tol_override: Vec<String>,
    /// Directory for the report and points.csv; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::FrameCheck(a) => (Command::FrameCheck, a),
        Sub::CurvatureCheck(a) => (Command::CurvatureCheck, a),
        Sub::LcfTest(a) => (Command::LcfTest, a),
        Sub::UmbilicScan(a) => (Command::UmbilicScan, a),
        Sub::ParallelConstruct(a) => (Command::ParallelConstruct, a),
        Sub::TheoremAudit(a) => (Command::TheoremAudit, a),
        Sub::All(a) => (Command::All, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        tolerances: args.tol_override,
        out: args.out,
        format: args.format.map(|f| match f {
            FormatArg::Text => Format::Text,
            FormatArg::Structured => Format::Structured,
        }),
    };
    let started = Instant::now();
    let scenario = match load(&args.config, &overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(command, &scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let format = scenario.output.format;
    match &scenario.output.path {
        Some(dir) => match report.write(dir, format) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: writing to {}: {e}", dir.display());
                return ExitCode::from(2);
            }
        },
        None => print!("{}", report.render(format)),
    }
    for section in &report.sections {
        for c in section.failed_checks() {
            let witness = c.witness.as_deref().unwrap_or("-");
            eprintln!("FAIL {}.{}: {} (witness: {witness})", section.name, c.name, c.value);
        }
    }
    let verdict = if report.passed { "pass" } else { "fail" };
    eprintln!("{} {verdict} in {:.2?}", command.name(), started.elapsed());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
