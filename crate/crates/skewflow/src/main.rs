use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skewflow::config::{load_config, parse_config_with, Command};
use skewflow::registry::BUILTINS;
use skewflow::{run_command, ConfigError, RunError};
use skewflow_core::TheoremId;

/// Periodic linear systems, their suspension flows, and box-graph chain recurrence.
#[derive(Debug, Parser)]
#[command(name = "skewflow", version)]
struct Cli {
    /// Configuration file of `key: value` items.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Extra `key: value` item, applied after the file (repeatable).
    #[arg(short, long = "set", value_name = "ITEM")]
    set: Vec<String>,
    /// Output directory (overrides `output`).
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Trajectory CSV of x' = X(t)x and the suspension of the initial point.
    Integrate,
    /// Monodromy matrix, Floquet multipliers and norm constants.
    Monodromy,
    /// Transition graph of the monodromy action: edge list, box geometry, components.
    ChainGraph,
    /// Run one theorem check, or `all`.
    Verify {
        #[arg(value_name = "THEOREM")]
        theorem: String,
    },
    /// Lift a perturbed orbit of the monodromy action to a chain of the flow.
    LiftDemo,
    /// Project a closed chain of the flow across the base seam.
    ProjectDemo,
    /// List the builtin systems.
    Builtins,
}

fn execute(cli: Cli) -> Result<i32, RunError> {
    let command = match cli.command {
        None => None,
        Some(Sub::Builtins) => {
            for b in BUILTINS {
                let params: Vec<String> = b.parameters.iter().map(|(p, d)| format!("{p} = {d}")).collect();
                println!("{:<11} {:<34} {}", b.name, b.about, params.join(", "));
            }
            return Ok(0);
        }
        Some(Sub::Integrate) => Some(Command::Integrate),
        Some(Sub::Monodromy) => Some(Command::Monodromy),
        Some(Sub::ChainGraph) => Some(Command::ChainGraph),
        Some(Sub::LiftDemo) => Some(Command::LiftDemo),
        Some(Sub::ProjectDemo) => Some(Command::ProjectDemo),
        Some(Sub::Verify { theorem }) => match theorem.as_str() {
            "all" => Some(Command::Verify(None)),
            id => Some(Command::Verify(Some(TheoremId::parse(id).ok_or_else(|| {
                let names: Vec<&str> = TheoremId::ALL.iter().map(|t| t.name()).collect();
                ConfigError::Field {
                    field: "theorem".into(),
                    line: None,
                    message: format!("unknown theorem `{id}` (all, {})", names.join(", ")),
                }
            })?))),
        },
    };
    let mut config = match &cli.config {
        Some(path) => load_config(path, &cli.set)?,
        None => parse_config_with("", &cli.set)?,
    };
    if let Some(c) = command {
        config.command = Some(c);
    }
    if let Some(dir) = cli.out {
        config.output = dir;
    }
    let outcome = run_command(&config)?;
    print!("{}", outcome.summary);
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let code = match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("skewflow: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
