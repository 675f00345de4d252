mod config;
mod figures;
mod output;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CliError, CliResult, RunConfig, ShapingSetup};
use figures::Figure;
use output::Outputs;
use simulate::{SimFlags, SimSetup};
use verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "sdpc", version, about = "Scalar dirty paper coding: verification, figure data and simulation")]
struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: config `out_dir`, then $SDPC_OUT_DIR, then `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct ShapingArgs {
    /// ASK order.
    #[arg(long = "M", visible_alias = "order")]
    order: Option<usize>,
    /// Modulo interval length.
    #[arg(long = "A", visible_alias = "interval")]
    interval: Option<f64>,
    /// Width of the truncated Gaussian shaping.
    #[arg(long)]
    sigma_x: Option<f64>,
    /// Grid cells per modulo interval.
    #[arg(long = "n", visible_alias = "grid-cells")]
    grid_cells: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run invariant suites and write verify-<suite>.json.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        shaping: ShapingArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write figure data as CSV.
    Figures {
        #[arg(value_enum)]
        which: Figure,
        #[command(flatten)]
        shaping: ShapingArgs,
        /// ASK orders for the convergence sweep.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        /// `A / sigma_x` for the convergence sweep.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Simulate a broadcast channel model end to end.
    Simulate {
        /// Channel model TOML file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Encoding order as 1-based receiver indices, first encoded first.
        #[arg(long, value_delimiter = ',')]
        ordering: Option<Vec<usize>>,
        #[arg(long)]
        n_trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// ASK order of every real subchannel.
        #[arg(long = "M", visible_alias = "order")]
        order: Option<usize>,
        /// `A / sigma_x` of every real subchannel.
        #[arg(long)]
        ratio: Option<f64>,
        /// Reuse one dither for all streams of a receiver (negative control).
        #[arg(long)]
        shared_dither: bool,
    },
}

fn shaping(cfg: &RunConfig, a: ShapingArgs) -> CliResult<ShapingSetup> {
    ShapingSetup::resolve(cfg, a.order, a.interval, a.sigma_x, a.grid_cells)
}

fn commit(out: &Outputs, dir: &std::path::Path) -> CliResult<()> {
    for p in out
        .commit(dir)
        .map_err(|e| CliError::Config(format!("cannot write to {}: {e}", dir.display())))?
    {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let dir = cfg.out_dir(cli.out_dir);
    match cli.command {
        Command::Verify { suite, shaping: s, seed } => {
            let setup = shaping(&cfg, s)?;
            let report = verify::run(suite, &setup, seed.or(cfg.seed).unwrap_or(1))?;
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark} {}::{} {}", c.suite, c.name, c.detail);
            }
            let mut out = Outputs::default();
            let json = serde_json::to_string_pretty(&report).expect("report serialises");
            out.add(format!("verify-{}.json", suite.name()), json);
            commit(&out, &dir)?;
            let failed = report.failed();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(format!("{} of {} checks failed", failed.len(), report.checks.len())))
            }
        }
        Command::Figures { which, shaping: s, orders, ratio } => {
            let text = match which {
                Figure::Fig2 => figures::fig2(&shaping(&cfg, s)?)?,
                Figure::Fig3 => figures::fig3(&shaping(&cfg, s)?)?,
                Figure::Convergence => {
                    let orders = orders
                        .or_else(|| cfg.orders.clone())
                        .unwrap_or_else(|| figures::DEFAULT_ORDERS.to_vec());
                    let ratio = ratio.or(cfg.ratio).unwrap_or(simulate::DEFAULT_RATIO);
                    config::check_positive("ratio", ratio)?;
                    figures::convergence(&orders, ratio)?
                }
            };
            let mut out = Outputs::default();
            out.add(figures::file_name(which), text);
            commit(&out, &dir)
        }
        Command::Simulate { model, ordering, n_trials, seed, order, ratio, shared_dither } => {
            let setup = SimSetup::resolve(
                &cfg,
                SimFlags { model, ordering, n_trials, seed, order, ratio, shared_dither },
            )?;
            let (report, out) = simulate::execute(&setup)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for r in &report.receivers {
                println!(
                    "receiver {} (position {}): grid rate {:.6}, empirical {:.6}, target {:.6} nats",
                    r.receiver + 1,
                    r.position + 1,
                    r.grid,
                    r.empirical,
                    r.target
                );
            }
            commit(&out, &dir)?;
            let failures = report.failures();
            for f in &failures {
                eprintln!("FAIL {f}");
            }
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(format!("{} simulation checks failed", failures.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
