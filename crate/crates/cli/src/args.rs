//! Command-line arguments and their merge with an optional JSON
//! configuration file.
//!
//! Precedence, highest first: explicit flags, keys present in the
//! configuration file, derived defaults, [`RunConfig::default`]. Three
//! values are derived when neither a flag nor the file sets them:
//!
//! * `n_lower` is half of `n_upper`;
//! * `spacing_lower` makes both bands equally wide (`n_upper Δε₁ / n_lower`);
//! * `coupling_scale` equals `spacing_upper`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use relax_core::experiment::{HsaCheckOptions, RunConfig};
use relax_core::{CouplingKind, Execution};
use serde_json::{Map, Value};

#[derive(Debug, Parser)]
#[command(name = "relax", version, about = "Exact relaxation of a two-level system in a two-band container")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve one trajectory and write its CSV and JSON sidecar.
    Run,
    /// Evolve every (size, seed) pair and summarize the deviation from theory.
    Sweep,
    /// Print the validity report of the configured parameters as JSON.
    Regime,
    /// Monte-Carlo check of the averaged short-time step quantities.
    HsaCheck(HsaCheckArgs),
}

#[derive(Debug, Args)]
pub struct HsaCheckArgs {
    /// Step length in units of the first validity time scale.
    #[arg(long, default_value_t = HsaCheckOptions::default().tau_over_tau1)]
    pub tau_factor: f64,
    /// Excited-sector weight of the sampled states.
    #[arg(long, default_value_t = HsaCheckOptions::default().p_ex)]
    pub p_ex: f64,
    /// Number of random states per size.
    #[arg(long, default_value_t = HsaCheckOptions::default().n_samples)]
    pub mc_samples: usize,
}

impl HsaCheckArgs {
    pub fn options(&self) -> HsaCheckOptions {
        HsaCheckOptions {
            tau_over_tau1: self.tau_factor,
            p_ex: self.p_ex,
            n_samples: self.mc_samples,
        }
    }
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// JSON file with any subset of the configuration fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of upper-band levels.
    #[arg(long, global = true)]
    pub n1: Option<usize>,
    /// Number of lower-band levels [default: n1 / 2].
    #[arg(long, global = true)]
    pub n0: Option<usize>,
    /// Level spacing of the upper band.
    #[arg(long, global = true)]
    pub spacing_upper: Option<f64>,
    /// Level spacing of the lower band [default: equal band widths].
    #[arg(long, global = true)]
    pub spacing_lower: Option<f64>,
    /// Coupling strength [default: spacing of the upper band].
    #[arg(long, global = true)]
    pub coupling: Option<f64>,
    /// Draw complex instead of real Gaussian coupling entries.
    #[arg(long, global = true)]
    pub complex_coupling: bool,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of seeds per size in a sweep.
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    /// Trajectory length [default: five relaxation times].
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Number of sample times per trajectory.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated upper-band sizes of a sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration file {}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
}

fn load_file(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    };
    // Parse once into the typed struct for field validation, keep the map
    // to tell which fields were given explicitly.
    serde_json::from_str::<RunConfig>(&text).map_err(parse_err)?;
    match serde_json::from_str::<Value>(&text).map_err(parse_err)? {
        Value::Object(map) => Ok(map),
        _ => unreachable!("RunConfig deserializes only from an object"),
    }
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => load_file(path)?,
            None => Map::new(),
        };
        let mut cfg: RunConfig =
            serde_json::from_value(Value::Object(file.clone())).expect("validated in load_file");
        let given = |key: &str| file.contains_key(key);

        if let Some(v) = self.n1 {
            cfg.n_upper = v;
        }
        match self.n0 {
            Some(v) => cfg.n_lower = v,
            None if !given("n_lower") => cfg.n_lower = cfg.n_upper / 2,
            None => {}
        }
        if let Some(v) = self.spacing_upper {
            cfg.spacing_upper = v;
        }
        match self.spacing_lower {
            Some(v) => cfg.spacing_lower = v,
            None if !given("spacing_lower") && cfg.n_lower > 0 => {
                cfg.spacing_lower = cfg.n_upper as f64 * cfg.spacing_upper / cfg.n_lower as f64;
            }
            None => {}
        }
        match self.coupling {
            Some(v) => cfg.coupling_scale = v,
            None if !given("coupling_scale") => cfg.coupling_scale = cfg.spacing_upper,
            None => {}
        }
        if self.complex_coupling {
            cfg.coupling_kind = CouplingKind::Complex;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.seeds {
            cfg.n_seeds = v;
        }
        if let Some(v) = self.t_max {
            cfg.t_max = Some(v);
        }
        if let Some(v) = self.samples {
            cfg.n_samples = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.sizes {
            cfg.sizes = v.clone();
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        Ok(cfg)
    }
}
