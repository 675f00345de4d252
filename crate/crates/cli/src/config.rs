use std::fmt;
use std::path::{Path, PathBuf};

use scalar_dpc::dpc::{default_cells, Shaping};
use serde::Deserialize;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SDPC_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config file or model file.
    Config(String),
    /// A verification or simulation check failed.
    Check(String),
    /// Linear algebra broke down on valid input.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<scalar_dpc::Error> for CliError {
    fn from(e: scalar_dpc::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

/// Contents of a `--config` file. Every key is optional; flags win over the file.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub order: Option<usize>,
    pub interval: Option<f64>,
    pub sigma_x: Option<f64>,
    pub grid_cells: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub ratio: Option<f64>,
    pub model: Option<PathBuf>,
    pub ordering: Option<Vec<usize>>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub shared_dither: Option<bool>,
}

impl RunConfig {
    /// Parses a config file; a relative `model` path is taken relative to the file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(m), Some(dir)) = (&cfg.model, path.parent()) {
            if m.is_relative() {
                cfg.model = Some(dir.join(m));
            }
        }
        Ok(cfg)
    }

    /// Flag, then config file, then `SDPC_OUT_DIR`, then the working directory.
    pub fn out_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.out_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Parameters of one shaped scalar channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingSetup {
    pub order: usize,
    pub interval: f64,
    pub sigma_x: f64,
    pub grid_cells: usize,
}

impl ShapingSetup {
    pub const DEFAULT: (usize, f64, f64) = (4, 6.0, 1.8);

    pub fn resolve(
        cfg: &RunConfig,
        order: Option<usize>,
        interval: Option<f64>,
        sigma_x: Option<f64>,
        grid_cells: Option<usize>,
    ) -> CliResult<Self> {
        let order = order.or(cfg.order).unwrap_or(Self::DEFAULT.0);
        let interval = interval.or(cfg.interval).unwrap_or(Self::DEFAULT.1);
        let sigma_x = sigma_x.or(cfg.sigma_x).unwrap_or(Self::DEFAULT.2);
        if order < 2 {
            return config_err(format!("M must be at least 2, got {order}"));
        }
        check_positive("A", interval)?;
        check_positive("sigma-x", sigma_x)?;
        let grid_cells = grid_cells.or(cfg.grid_cells).unwrap_or_else(|| default_cells(order));
        let setup = Self {
            order,
            interval,
            sigma_x,
            grid_cells,
        };
        setup.shaping()?;
        Ok(setup)
    }

    pub fn shaping(&self) -> CliResult<Shaping> {
        Ok(Shaping::new(self.order, self.interval, self.sigma_x)?.with_grid_cells(self.grid_cells)?)
    }
}

pub fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config_err(format!("{name} must be positive and finite, got {v}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let cfg = RunConfig {
            order: Some(8),
            interval: Some(5.0),
            ..Default::default()
        };
        let s = ShapingSetup::resolve(&cfg, Some(16), None, None, None).unwrap();
        assert_eq!(s.order, 16);
        assert_eq!(s.interval, 5.0);
        assert_eq!(s.sigma_x, 1.8);
        assert_eq!(s.grid_cells, default_cells(16));
    }

    #[test]
    fn rejects_bad_ranges() {
        let cfg = RunConfig::default();
        assert!(ShapingSetup::resolve(&cfg, Some(1), None, None, None).is_err());
        assert!(ShapingSetup::resolve(&cfg, None, Some(-1.0), None, None).is_err());
        assert!(ShapingSetup::resolve(&cfg, None, None, Some(f64::NAN), None).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("orderr = 3").is_err());
        let c: RunConfig = toml::from_str("order = 3\nordering = [2, 1]").unwrap();
        assert_eq!(c.ordering, Some(vec![2, 1]));
    }
}
