//! `gtd`: curvature scans, representation comparisons and claim verification
//! for thermodynamic fundamental relations.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 hypothesis not met, 4 numerical error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{
    parse_backend, parse_grid_flag, parse_metric_flag, parse_system_flag, Format, RunConfig,
};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "gtd",
    version,
    about = "Geometrothermodynamic metrics, curvature and claim verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Scalar curvature of the induced metric over a grid.
    Curvature,
    /// Conformal factor and curvature in the canonical and an E^(i) representation.
    Compare,
    /// Run verification claims and emit JSON reports.
    Verify,
    /// Print the resolved configuration as JSON.
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `monomial:<a1>,<a2>,…[:<coefficient>]` or `expr:<v1>,<v2>,…:<expression>`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    system: Option<String>,
    /// `natural[:i]`, `gt[:lambda]`, `gii[:lambda]`, `gp:<k>`, `hessian`, or a JSON object.
    #[arg(long, global = true, allow_hyphen_values = true)]
    metric: Option<String>,
    /// `min:max:count[:linear|log]` per axis, comma-separated; one axis applies to all.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// 1-based representation index i.
    #[arg(long, global = true)]
    rep: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Comma-separated claim names, or `all`.
    #[arg(long, global = true)]
    claims: Option<String>,
    /// `jets` or `finite_diff`.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Claim tolerance (verify) or backend agreement tolerance (curvature).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Skip the second curvature backend.
    #[arg(long, global = true)]
    no_cross_check: bool,
    /// Relative perturbation applied to predicted conformal factors (verify).
    #[arg(long, global = true, allow_hyphen_values = true)]
    factor_perturbation: Option<f64>,
}

fn resolve(command: Command, flags: &Flags) -> CliResult<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::empty(),
    };
    if let Some(s) = &flags.system {
        cfg.system = Some(parse_system_flag(s)?);
    }
    if let Some(m) = &flags.metric {
        let n = cfg.relation()?.n();
        cfg.metric = Some(parse_metric_flag(m, n)?);
    }
    if let Some(g) = &flags.grid {
        cfg.grid = Some(parse_grid_flag(g)?);
    }
    if flags.rep.is_some() {
        cfg.representation = flags.rep;
    }
    if flags.out.is_some() {
        cfg.output.path = flags.out.clone();
    }
    if let Some(f) = flags.format {
        cfg.output.format = Some(match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        });
    }
    if let Some(c) = &flags.claims {
        cfg.verify.claims = vec![c.clone()];
    }
    if let Some(b) = &flags.backend {
        cfg.curvature.backend = parse_backend(b)?;
    }
    if flags.no_cross_check {
        cfg.curvature.cross_check = false;
    }
    if let Some(t) = flags.tolerance {
        if !(t > 0.0) {
            return Err(CliError::Config(format!(
                "--tolerance must be positive (got {t})"
            )));
        }
        match command {
            Command::Verify => cfg.verify.tolerance = Some(t),
            _ => cfg.curvature.tolerance = t,
        }
    }
    if let Some(p) = flags.factor_perturbation {
        cfg.verify.factor_perturbation = p;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<u8> {
    let cfg = resolve(cli.command, &cli.flags)?;
    let default_format = match cli.command {
        Command::Verify | Command::Config => Format::Json,
        Command::Curvature | Command::Compare => Format::Csv,
    };
    let format = cfg.output.format.unwrap_or(default_format);
    let outcome = match cli.command {
        Command::Curvature => commands::curvature(&cfg, format)?,
        Command::Compare => commands::compare(&cfg, format)?,
        Command::Verify => commands::verify(&cfg, format)?,
        Command::Config => commands::Outcome {
            text: cfg.to_json(),
            exit: 0,
        },
    };
    match &cfg.output.path {
        Some(path) => std::fs::write(path, &outcome.text)
            .map_err(|err| CliError::Config(format!("cannot write {}: {err}", path.display())))?,
        None => print!("{}", outcome.text),
    }
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("gtd: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
