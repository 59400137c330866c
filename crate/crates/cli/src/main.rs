use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qct_cli::config::Variant;
use qct_cli::output::write_output;
use qct_cli::{parse_config, render, run, CliError, CliResult, OutputFormat};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "qct", version, about = "Coherence-transfer criterion kernels and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; its values override the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Seed for the stochastic paths (triangle multi-start, sampling oracle, LP self-test).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One-qubit remote state preparation through a fusion network.
    Onequbit {
        #[arg(long)]
        network: Option<u8>,
        #[arg(long)]
        rsp: Option<usize>,
        #[arg(long)]
        checkpoint: Option<usize>,
        /// Comma-separated pair visibilities.
        #[arg(long, value_delimiter = ',')]
        visibilities: Option<Vec<f64>>,
        #[arg(long)]
        oracle_trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Two-qubit entanglement swapping, capable or polarizer control.
    Twoqubit {
        #[arg(long)]
        network: Option<u8>,
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[arg(long)]
        checkpoint: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        visibilities: Option<Vec<f64>>,
        #[arg(long)]
        oracle_trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Triangle-network kernel by multi-start minimization.
    Triangle {
        #[arg(long)]
        restarts: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Temporal kernel sweep of the double-quantum-dot model.
    Dqd {
        #[arg(long)]
        gamma_l: Option<f64>,
        #[arg(long)]
        gamma_r: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Simplex solver against vertex enumeration on random programs.
    LpSelftest {
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        max_vars: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn put<T: Into<Value>>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.into(), v.into());
    }
}

/// Collects the flags into a config object keyed like the JSON schema.
fn flags_to_map(command: Command) -> (Map<String, Value>, Common) {
    let mut m = Map::new();
    let common = match command {
        Command::Onequbit { network, rsp, checkpoint, visibilities, oracle_trials, common } => {
            m.insert("scenario".into(), "one-qubit".into());
            put(&mut m, "network", network);
            put(&mut m, "rsp", rsp);
            put(&mut m, "checkpoint", checkpoint);
            put(&mut m, "visibilities", visibilities);
            put(&mut m, "oracle_trials", oracle_trials);
            common
        }
        Command::Twoqubit { network, variant, checkpoint, visibilities, oracle_trials, common } => {
            m.insert("scenario".into(), "two-qubit".into());
            put(&mut m, "network", network);
            put(&mut m, "variant", variant.map(|v| serde_json::to_value(v).expect("serializable")));
            put(&mut m, "checkpoint", checkpoint);
            put(&mut m, "visibilities", visibilities);
            put(&mut m, "oracle_trials", oracle_trials);
            common
        }
        Command::Triangle { restarts, common } => {
            m.insert("scenario".into(), "triangle".into());
            put(&mut m, "restarts", restarts);
            common
        }
        Command::Dqd { gamma_l, gamma_r, delta, t_max, points, dt, common } => {
            m.insert("scenario".into(), "dqd".into());
            put(&mut m, "gamma_l", gamma_l);
            put(&mut m, "gamma_r", gamma_r);
            put(&mut m, "delta", delta);
            put(&mut m, "t_max", t_max);
            put(&mut m, "points", points);
            put(&mut m, "dt", dt);
            common
        }
        Command::LpSelftest { instances, max_vars, common } => {
            m.insert("scenario".into(), "lp-selftest".into());
            put(&mut m, "instances", instances);
            put(&mut m, "max_vars", max_vars);
            common
        }
    };
    put(&mut m, "seed", common.seed);
    put(&mut m, "out", common.out.clone());
    put(
        &mut m,
        "format",
        common.format.map(|f| serde_json::to_value(f).expect("serializable")),
    );
    (m, common)
}

fn execute(cli: Cli) -> CliResult<()> {
    let (mut merged, common) = flags_to_map(cli.command);
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)?;
        // Parse once on its own for positioned syntax errors and schema checks.
        let file = parse_config(&text)?;
        let subcommand = merged["scenario"].as_str().unwrap_or_default().to_owned();
        if file.scenario.name() != subcommand {
            return Err(CliError::Validation(format!(
                "config scenario {:?} does not match the {subcommand} subcommand",
                file.scenario.name()
            )));
        }
        let Ok(Value::Object(file_map)) = serde_json::from_str::<Value>(&text) else {
            unreachable!("already parsed as an object");
        };
        merged.extend(file_map);
    }
    let config = parse_config(&Value::Object(merged).to_string())?;
    let result = run(&config)?;
    let text = render(&result, config.format.unwrap_or_default());
    match &config.out {
        Some(path) => write_output(&text, Path::new(path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
