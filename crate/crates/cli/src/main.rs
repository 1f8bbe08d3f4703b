//! `jamgame` — analyses of jamming games over channel families.
//!
//! Subcommands map one-to-one onto the library's run engine; every output
//! embeds the resolved configuration so runs are reproducible.

use clap::{Args, Parser, Subcommand, ValueEnum};
use jamgame_core::runner::{self, CodeScheme, CommandKind, OutputFormat, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "jamgame",
    about = "Capacities, game-value curves, finite-blocklength bounds, exact tiny games, and code construction for channel families with an adversarial state",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Feinstein,
    Split,
}

#[derive(Args)]
struct CommonArgs {
    /// Channel family JSON file
    #[arg(long, value_name = "PATH")]
    family: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Solver tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for any randomized fallback
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Per-state, worst-case, and subset compound capacities
    Capacity {
        #[command(flatten)]
        common: CommonArgs,
        /// Also list every nonempty state-subset capacity
        #[arg(long)]
        subsets: bool,
    },
    /// Limiting game-value step functions and epsilon-capacities
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        /// Error levels for the epsilon-capacity table (repeatable)
        #[arg(long = "eps", value_name = "EPS")]
        eps: Vec<f64>,
    },
    /// Finite-blocklength achievability and converse bounds
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        /// Blocklength
        #[arg(long)]
        n: u64,
        /// Rate in bits per use
        #[arg(long = "R")]
        r: Option<f64>,
        /// Rate grid start:end:steps (bits per use)
        #[arg(long = "R-grid", value_name = "A:B:STEPS")]
        r_grid: Option<String>,
        /// Tail-shape constant in nats (defaults from the rate margin)
        #[arg(long)]
        xi: Option<f64>,
        /// Threshold constant in nats for the achievability side
        #[arg(long)]
        alpha: Option<f64>,
        /// Slack constant in nats for the achievability side
        #[arg(long)]
        delta: Option<f64>,
        /// Dual-converse constant in nats
        #[arg(long)]
        gamma: Option<f64>,
        /// Flag reports whose upper-lower gap is at most this value
        #[arg(long)]
        gap_threshold: Option<f64>,
    },
    /// Exact game values at enumerable sizes
    Exact {
        #[command(flatten)]
        common: CommonArgs,
        /// Blocklength
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// Number of messages
        #[arg(long = "M", default_value_t = 2)]
        m: usize,
        /// Random restarts for the stochastic-code heuristic
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Build and evaluate explicit codes
    Codes {
        #[command(flatten)]
        common: CommonArgs,
        /// Construction scheme
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Blocklength
        #[arg(long)]
        n: u64,
        /// Number of messages (feinstein; defaults from the rate)
        #[arg(long = "M")]
        m: Option<usize>,
        /// Rate in bits per use (split; optional for feinstein)
        #[arg(long = "R")]
        r: Option<f64>,
        /// Prefix length for the split scheme (default ceil(sqrt(n)))
        #[arg(long)]
        n1: Option<u64>,
        /// Decoding threshold in nats for the feinstein scheme
        #[arg(long)]
        alpha: Option<f64>,
        /// Jammer mixture for the evaluation, comma-separated weights
        #[arg(long, value_name = "Q0,Q1,...")]
        q: Option<String>,
    },
}

fn parse_q(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad weight {p}")))
        .collect()
}

fn build_config(command: Command) -> Result<(RunConfig, Option<PathBuf>), String> {
    let (kind, common) = match &command {
        Command::Capacity { common, .. } => (CommandKind::Capacity, common),
        Command::Curve { common, .. } => (CommandKind::Curve, common),
        Command::Bounds { common, .. } => (CommandKind::Bounds, common),
        Command::Exact { common, .. } => (CommandKind::Exact, common),
        Command::Codes { common, .. } => (CommandKind::Codes, common),
    };
    let mut config = RunConfig::new(
        kind,
        common
            .family
            .to_str()
            .ok_or_else(|| "family path is not valid unicode".to_string())?,
    );
    config.format = match common.format {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Csv => OutputFormat::Csv,
    };
    config.tol = common.tol;
    config.seed = common.seed;
    let out = common.out.clone();
    match command {
        Command::Capacity { subsets, .. } => {
            config.subsets = subsets;
        }
        Command::Curve { eps, .. } => {
            config.eps = eps;
        }
        Command::Bounds { n, r, r_grid, xi, alpha, delta, gamma, gap_threshold, .. } => {
            config.n = Some(n);
            config.r = r;
            config.r_grid = r_grid;
            config.xi = xi;
            config.alpha = alpha;
            config.delta = delta;
            config.gamma = gamma;
            config.gap_threshold = gap_threshold;
        }
        Command::Exact { n, m, restarts, .. } => {
            config.n = Some(n);
            config.m = Some(m);
            config.restarts = restarts;
        }
        Command::Codes { scheme, n, m, r, n1, alpha, q, .. } => {
            config.scheme = Some(match scheme {
                SchemeArg::Feinstein => CodeScheme::Feinstein,
                SchemeArg::Split => CodeScheme::Split,
            });
            config.n = Some(n);
            config.m = m;
            config.r = r;
            config.n1 = n1;
            config.alpha = alpha;
            config.q = q.as_deref().map(parse_q).transpose()?;
        }
    }
    Ok((config, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, out) = match build_config(cli.command) {
        Ok(pair) => pair,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match runner::run(&config) {
        Ok(text) => {
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
