use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mopekit::cli::{self, CliError, Overrides, RunConfig, CONFIG_ENV};
use mopekit::rewards::RewardWeights;

#[derive(Parser)]
#[command(name = "mopekit", version, about = "Motion action extraction, caption rewards and pose kinematics")]
struct Args {
    /// JSON run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Reward weights for action, order and direction, e.g. `0.5,0.25,0.25`.
    #[arg(long, global = true, value_parser = parse_weights)]
    weights: Option<RewardWeights>,
    /// Keypoint confidence threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// High-frequency cutoff as a DFT bin index.
    #[arg(long, global = true)]
    cutoff_bin: Option<usize>,
    /// JSON list of joint definitions `{name, a, vertex, c}`.
    #[arg(long, global = true)]
    joints: Option<PathBuf>,
    /// Do not link consecutive sentences in temporal ordering.
    #[arg(long, global = true)]
    no_cross_sentence: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract motion actions from a PENMAN file and a CoNLL-U file.
    Parse { penman: PathBuf, conllu: PathBuf },
    /// Score JSON-lines caption pairs `{id, gen, ref}`.
    Score { pairs: PathBuf },
    /// Analyze a pose-keypoint file.
    Kinematics { pose: PathBuf },
    /// Run the embedded fixture corpus.
    Selftest,
}

fn parse_weights(s: &str) -> Result<RewardWeights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [a, o, d] = parts[..] else {
        return Err(format!("expected three comma-separated weights, got {}", parts.len()));
    };
    RewardWeights::new(a, o, d).map_err(|e| e.to_string())
}

fn run(args: Args) -> Result<bool, CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let Command::Selftest = args.command {
        return cli::cmd_selftest(&mut out);
    }
    let overrides = Overrides {
        weights: args.weights,
        threshold: args.threshold,
        cutoff_bin: args.cutoff_bin,
        joints: args.joints,
        no_cross_sentence: args.no_cross_sentence,
    };
    let config = RunConfig::resolve(args.config.as_deref(), &overrides)?;
    match args.command {
        Command::Parse { penman, conllu } => cli::cmd_parse(&penman, &conllu, &config, &mut out)?,
        Command::Score { pairs } => cli::cmd_score(&pairs, &config, &mut out)?,
        Command::Kinematics { pose } => cli::cmd_kinematics(&pose, &config, &mut out)?,
        Command::Selftest => unreachable!(),
    }
    out.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("mopekit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
