use std::path::PathBuf;

use scalar_dpc::mimo::{ChannelModel, DpcParams};
use scalar_dpc::montecarlo::{run, DitherMode, Prepared, SimConfig, SimReport};

use crate::config::{check_positive, config_err, CliError, CliResult, RunConfig};
use crate::output::{csv, fmt_float, Outputs};

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_RATIO: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub model: ChannelModel,
    pub config: SimConfig,
}

#[derive(Debug, Default, Clone)]
pub struct SimFlags {
    pub model: Option<PathBuf>,
    pub ordering: Option<Vec<usize>>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    pub order: Option<usize>,
    pub ratio: Option<f64>,
    pub shared_dither: bool,
}

impl SimSetup {
    /// Validates everything before any simulation work; `ordering` is 1-based.
    pub fn resolve(cfg: &RunConfig, flags: SimFlags) -> CliResult<Self> {
        let Some(path) = flags.model.or_else(|| cfg.model.clone()) else {
            return config_err("simulate needs a channel model file (--model or `model` in the config)");
        };
        if !path.is_file() {
            return config_err(format!("model file {} does not exist", path.display()));
        }
        let mut model = ChannelModel::from_file(&path).map_err(|e| {
            CliError::Config(format!("{}: {e}", path.display()))
        })?;
        if let Some(ord) = flags.ordering.or_else(|| cfg.ordering.clone()) {
            if ord.iter().any(|&k| k == 0) {
                return config_err("ordering is 1-based");
            }
            model = model
                .with_ordering(ord.iter().map(|k| k - 1).collect())
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        let n_trials = flags.n_trials.or(cfg.n_trials).unwrap_or(DEFAULT_TRIALS);
        if n_trials == 0 {
            return config_err("n-trials must be positive");
        }
        let order = flags.order.or(cfg.order).unwrap_or(DEFAULT_ORDER);
        if order < 2 {
            return config_err(format!("M must be at least 2, got {order}"));
        }
        let ratio = flags.ratio.or(cfg.ratio).unwrap_or(DEFAULT_RATIO);
        check_positive("ratio", ratio)?;
        let shared = flags.shared_dither || cfg.shared_dither.unwrap_or(false);
        Ok(Self {
            model,
            config: SimConfig {
                params: DpcParams { order, ratio },
                n_trials,
                seed: flags.seed.or(cfg.seed).unwrap_or(1),
                dither: if shared {
                    DitherMode::SharedWithinReceiver
                } else {
                    DitherMode::Independent
                },
            },
        })
    }
}

pub fn receiver_table(r: &SimReport) -> String {
    let rows: Vec<Vec<String>> = r
        .receivers
        .iter()
        .map(|x| {
            vec![
                (x.receiver + 1).to_string(),
                (x.position + 1).to_string(),
                fmt_float(x.grid),
                fmt_float(x.empirical),
                fmt_float(x.target),
            ]
        })
        .collect();
    csv(&["receiver", "position", "grid_rate", "empirical_rate", "target"], &rows)
}

pub fn subchannel_table(r: &SimReport) -> String {
    let (header, rows) = r.rate_table();
    csv(&header, &rows)
}

/// Runs the simulation and collects the report files. Returns the report with the outputs so
/// the caller can decide the exit status after writing.
pub fn execute(setup: &SimSetup) -> CliResult<(SimReport, Outputs)> {
    let prep = Prepared::new(&setup.model, setup.config.params)?;
    let (_, report) = run(&prep, &setup.config)?;
    let mut out = Outputs::default();
    out.add("sim_report.json", report.to_json());
    out.add("subchannel_rates.csv", subchannel_table(&report));
    out.add("receiver_rates.csv", receiver_table(&report));
    out.add("plan.json", prep.plan.to_json());
    Ok((report, out))
}
