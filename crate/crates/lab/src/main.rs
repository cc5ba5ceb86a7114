use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use weyl_scatter::commands::{run_recover, run_scatter, run_trace, run_volume};
use weyl_scatter::report::{read_scatter_csv, recovery_json, write_scatter_csv, write_volume_csv};
use weyl_scatter::{ConfigError, Experiment};

/// Billiard scattering around tubes and recovery of Weyl invariants.
#[derive(Parser)]
#[command(name = "weyl-scatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate travel-time statistics, one CSV row per tube radius.
    Scatter(Common),
    /// Invert a scatter CSV into the invariants Q_ℓ (JSON).
    Recover {
        #[command(flatten)]
        common: Common,
        /// Scatter CSV to read; defaults to `outputs.scatter`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Exit with status 2 when a layer exceeds the trapped-fraction gate.
        #[arg(long)]
        strict: bool,
    },
    /// Compare exact tube volumes with hit-or-miss estimates.
    Volume(Common),
    /// Print the polyline of a single trajectory.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Start foot on the container boundary, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        foot: Option<Vec<f64>>,
        /// Start direction (normalised), comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        dir: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override `samples`.
    #[arg(long)]
    samples: Option<u64>,
    /// Override `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent and the config names none.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<Experiment, ConfigError> {
        let mut exp = Experiment::from_path(&self.config)?;
        if let Some(s) = self.samples {
            if s == 0 {
                return Err(ConfigError {
                    field: "--samples".into(),
                    line: None,
                    message: "must be positive".into(),
                });
            }
            exp.samples = s;
        }
        if let Some(s) = self.seed {
            exp.seed = s;
        }
        if let Some(t) = self.threads {
            exp.threads = Some(t.max(1));
        }
        Ok(exp)
    }
}

fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut buf = Vec::new();
            write(&mut buf)?;
            fs::write(p, buf).with_context(|| format!("writing {}", p.display()))
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

enum Failure {
    Validation(anyhow::Error),
    Strict,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Validation(e.into())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Scatter(c) => {
            let exp = c.load()?;
            let rows = run_scatter(&exp)?;
            let out = c.out.or(exp.outputs.scatter.clone());
            emit(out.as_deref(), |w| Ok(write_scatter_csv(w, &rows)?))?;
        }
        Command::Recover {
            common,
            input,
            strict,
        } => {
            let exp = common.load()?;
            let input = input
                .or(exp.outputs.scatter.clone())
                .context("no scatter CSV given (--input or outputs.scatter)")?;
            let file =
                fs::File::open(&input).with_context(|| format!("reading {}", input.display()))?;
            let rows =
                read_scatter_csv(file).with_context(|| format!("parsing {}", input.display()))?;
            let result = run_recover(&rows, &exp)?;
            let json = recovery_json(&result);
            let out = common.out.or(exp.outputs.recovery.clone());
            emit(out.as_deref(), |w| Ok(w.write_all(json.as_bytes())?))?;
            for warning in &result.warnings {
                eprintln!("warning: {warning}");
            }
            if strict && result.has_hypothesis_a_warning() {
                return Err(Failure::Strict);
            }
        }
        Command::Volume(c) => {
            let exp = c.load()?;
            let rows = run_volume(&exp)?;
            let out = c.out.or(exp.outputs.volume.clone());
            emit(out.as_deref(), |w| Ok(write_volume_csv(w, &rows)?))?;
        }
        Command::Trace { common, foot, dir } => {
            let exp = common.load()?;
            let text = run_trace(&exp, foot.as_deref(), dir.as_deref())?;
            emit(common.out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Strict) => {
            eprintln!("error: trapped fraction above the gate in strict mode");
            ExitCode::from(2)
        }
    }
}
