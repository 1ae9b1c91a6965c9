//! `zoeg`: runs ZO-EG experiments from JSON configs.

mod config;
mod output;
mod problem;
mod run;
mod segment;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_rho_grid, ConfigError, ExperimentConfig, Overrides};

const AFTER_HELP: &str = "\
Output files
  trace.csv           k, fL = f^L at the probe iterate, gap_D = set duality gap of the
                      rounded probe set, gap_R = restricted gap (empty without a set
                      saddle), gap_Dtau = D^L at the probe iterate, queries = cumulative
                      set-function queries including gap oracles, wall_ms (0 unless
                      \"timing\": true)
  summary.json        schema_version, version, problem, seed, solver, schedule, best,
                      average, final, mean_gap_dtau, queries, config
  mask.pgm            final mask, pixels with x > 0.5 are 255
  metrics.json        iou, precision, recall, f1 against the ground truth (only when
                      a ground truth is available)
  rho_sweep.csv       rho, iou, gap: medians over seeds per distinct rho
  online_metrics.csv  k, iou, precision, recall, f1, dual_gap, queries, wall_ms
  masks/mask_NNNN.pgm per-frame masks of segment-online

Exit codes: 0 success, 1 runtime or property failure, 2 invalid config or usage.";

#[derive(Parser)]
#[command(name = "zoeg", version, about = "Zeroth-order extragradient experiments", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single seed, replacing the config's seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the offline schedule for this target accuracy.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Offline run on b1, b2, a table problem or a segmentation image.
    Solve(Common),
    /// Offline segmentation with mask and metrics.
    Segment(Common),
    /// One extragradient update per incoming frame.
    SegmentOnline(Common),
    /// Segmentation over a grid of adversary budgets.
    SweepRho {
        #[command(flatten)]
        common: Common,
        /// Comma-separated budgets, e.g. `0,2,4,6,8`.
        #[arg(long)]
        rho_grid: Option<String>,
    },
    /// Property suites: submodularity, lovasz, duality, oracle.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: Option<String>,
    },
}

fn load(common: &Common, rho_grid: Option<Vec<f64>>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref())?;
    cfg.apply(Overrides {
        seed: common.seed,
        out: common.out.clone(),
        epsilon: common.epsilon,
        rho_grid,
    });
    Ok(cfg)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve(c) => solve::cmd_solve(&load(&c, None)?),
        Command::Segment(c) => segment::cmd_segment(&load(&c, None)?),
        Command::SegmentOnline(c) => segment::cmd_segment_online(&load(&c, None)?),
        Command::SweepRho { common, rho_grid } => {
            let grid = rho_grid.as_deref().map(parse_rho_grid).transpose().map_err(config::config_error)?;
            segment::cmd_sweep_rho(&load(&common, grid)?)
        }
        Command::Verify { common, suite } => verify::cmd_verify(&load(&common, None)?, suite.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
