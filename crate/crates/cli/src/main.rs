use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bgsub_cli::config::parse_key_values;
use bgsub_cli::report::{metrics_csv, metrics_json};
use bgsub_cli::{exit, execute, generate, write_outputs, CliError, ReportFormat, RunConfig, SyntheticSpec};
use bgsub_core::video::{emit_frames, emit_masks, ingest_masks, FrameFormat};

#[derive(Parser)]
#[command(name = "bgsub", version, about = "Low-rank background subtraction benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the background, extract masks and write a report.
    Run {
        /// key=value configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = ["frmc", "rpca-ialm", "rmc-ialm"])]
        solver: Option<String>,
        /// Nuclear-norm radius for frmc.
        #[arg(long)]
        delta: Option<f64>,
        /// l1 weight for rpca-ialm.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = ["json", "csv"])]
        format: Option<String>,
    },
    /// Generate a synthetic scene: frames, ground truth and background.
    Synth {
        /// key=value scene description.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score a directory of masks against ground truth.
    Eval {
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
        format: String,
    },
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            config,
            solver,
            delta,
            lambda,
            threshold,
            seed,
            out,
            format,
        } => {
            let mut pairs = match &config {
                Some(path) => parse_key_values(&read_text(path)?)?,
                None => Vec::new(),
            };
            let mut flag = |k: &str, v: Option<String>| {
                if let Some(v) = v {
                    pairs.push((k.to_string(), v));
                }
            };
            flag("solver", solver);
            flag("fw.delta", delta.map(|d| d.to_string()));
            flag("ialm.lambda", lambda.map(|l| l.to_string()));
            flag("threshold", threshold.map(|t| t.to_string()));
            flag("seed", seed.map(|s| s.to_string()));
            flag("out", out.map(|o| o.display().to_string()));
            flag("format", format);
            let config = RunConfig::from_pairs(&pairs)?;
            let outcome = execute(&config)?;
            write_outputs(&outcome, &config)?;
            if config.out.is_none() {
                print!("{}", outcome.report.render(config.format)?);
            }
            for w in &outcome.report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if outcome.report.converged {
                exit::SUCCESS
            } else {
                exit::NOT_CONVERGED
            })
        }
        Command::Synth { spec, out, seed } => {
            let spec = SyntheticSpec::parse(&read_text(&spec)?)?;
            let scene = generate(&spec, seed)?;
            emit_frames(&scene.frames, &out.join("frames"), FrameFormat::PgmDir)?;
            emit_masks(&scene.truth, &out.join("truth"), FrameFormat::PgmDir)?;
            let background = bgsub_core::video::from_observation_matrix(&scene.background, spec.width, spec.height)?;
            emit_frames(&background, &out.join("background"), FrameFormat::PgmDir)?;
            Ok(exit::SUCCESS)
        }
        Command::Eval { masks, truth, format } => {
            let detected = ingest_masks(&masks)?;
            let truth = ingest_masks(&truth)?;
            let metrics = bgsub_core::evaluate(&detected, &truth)?;
            let text = match format.parse::<ReportFormat>()? {
                ReportFormat::Json => metrics_json(&metrics)?,
                ReportFormat::Csv => metrics_csv(&metrics)?,
            };
            print!("{text}");
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
