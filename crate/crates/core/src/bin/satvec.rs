use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use satvec::experiment::{
    apply_key, parse_config, run_experiment, trace_path, write_summary, write_trace, ConfigError, ExecMode,
    ExperimentSpec, TrialRecord,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

/// Satellite-terrestrial VEC offloading experiments.
#[derive(Parser)]
#[command(name = "satvec", version)]
struct Cli {
    /// Run trials one after another instead of on the thread pool.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-iteration objective traces only.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter, overriding the config.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Io(String),
}

fn load(path: Option<&Path>) -> Result<ExperimentSpec, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentSpec::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn override_key(spec: &mut ExperimentSpec, key: &str, value: &str) -> Result<(), Failure> {
    apply_key(spec, 0, key, value)
        .map_err(|e: ConfigError| Failure::Config(format!("--{}: {}", key.replace('_', "-"), e.message)))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn report_failures(records: &[TrialRecord]) {
    for r in records {
        if let Err(msg) = &r.outcome {
            eprintln!(
                "warning: {} trial {} at {}: {msg}",
                r.scheme, r.trial, r.sweep_value
            );
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mode = if cli.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::default()
    };
    let (mut spec, seed, out, trace_only) = match cli.command {
        Command::Run { config, seed, out } => (load(Some(&config))?, seed, out, false),
        Command::Convergence { config, seed, out } => (load(Some(&config))?, seed, out, true),
        Command::Sweep {
            config,
            param,
            values,
            seed,
            out,
        } => {
            let mut spec = load(config.as_deref())?;
            override_key(&mut spec, "sweep_param", &param)?;
            override_key(&mut spec, "sweep_values", &values)?;
            (spec, seed, out, false)
        }
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(out) = out {
        spec.output_path = out;
    }
    spec.validate().map_err(|e| Failure::Config(e.to_string()))?;

    let records = run_experiment(&spec, mode);
    report_failures(&records);

    let io = |e: csv::Error| Failure::Io(e.to_string());
    if trace_only {
        write_trace(create(&spec.output_path)?, &spec, &records).map_err(io)?;
        return Ok(());
    }
    write_summary(create(&spec.output_path)?, &spec, &records).map_err(io)?;
    if spec.emit_trace {
        write_trace(create(&trace_path(&spec.output_path))?, &spec, &records).map_err(io)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
