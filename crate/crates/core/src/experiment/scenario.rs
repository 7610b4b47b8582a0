use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{RunConfig, UniverseConfig};
use crate::error::{Error, Result};
use crate::ingest::{align_and_log_returns, load_price_csv, ReturnSample};
use crate::stats::rng::mix_seed;
use crate::stats::{estimate_moments, simulate_mvn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Market,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    /// As many rows as the market sample of the universe.
    Native,
    Fixed(usize),
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleSize::Native => f.write_str("native"),
            SampleSize::Fixed(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub universe: UniverseConfig,
    pub data_kind: DataKind,
    pub sample_size: SampleSize,
    /// Simulation seed; `None` for market scenarios.
    pub seed: Option<u64>,
    /// Seed of the bootstrap that bounds the moments for the worst-case VaR.
    pub bootstrap_seed: u64,
}

impl ScenarioSpec {
    /// Builds the scenario's return sample from the universe's market
    /// sample. Simulated scenarios draw from a normal law whose moments are
    /// the market estimates, and keep the market tickers.
    pub fn resolve(&self, market: &ReturnSample) -> Result<ReturnSample> {
        match self.data_kind {
            DataKind::Market => Ok(market.clone()),
            DataKind::Simulated => {
                let rows = match self.sample_size {
                    SampleSize::Native => market.periods(),
                    SampleSize::Fixed(n) => n,
                };
                let seed = self.seed.ok_or_else(|| {
                    Error::Config(format!("simulated scenario {} has no seed", self.name))
                })?;
                let truth = estimate_moments(market)?;
                let sim = simulate_mvn(&truth, rows, seed)?;
                ReturnSample::new(market.assets().to_vec(), sim.dates().to_vec(), sim.returns().clone())
            }
        }
    }
}

/// Per universe: the market sample, a simulated sample of the same length
/// and a large simulated sample. Seeds derive from the run seed only.
pub fn build_scenarios(config: &RunConfig) -> Result<Vec<ScenarioSpec>> {
    config.validate()?;
    let mut specs = Vec::with_capacity(3 * config.universes.len());
    for (u, universe) in config.universes.iter().enumerate() {
        if !universe.data_dir.is_dir() {
            return Err(Error::Io {
                path: universe.data_dir.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
            });
        }
        let salt = 16 * u as u64;
        let variants = [
            ("market".to_string(), DataKind::Market, SampleSize::Native),
            ("sim_zeta".to_string(), DataKind::Simulated, SampleSize::Native),
            (
                format!("sim_{}", config.large_samples),
                DataKind::Simulated,
                SampleSize::Fixed(config.large_samples),
            ),
        ];
        for (k, (suffix, data_kind, sample_size)) in variants.into_iter().enumerate() {
            specs.push(ScenarioSpec {
                name: format!("{}_{}", universe.name, suffix),
                universe: universe.clone(),
                data_kind,
                sample_size,
                seed: (data_kind == DataKind::Simulated).then(|| mix_seed(config.seed, salt + k as u64)),
                bootstrap_seed: mix_seed(config.seed, salt + 8 + k as u64),
            });
        }
    }
    Ok(specs)
}

/// The `*.csv` files of a data directory in file-name order.
pub fn price_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv && path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::NoRows {
            path: dir.to_path_buf(),
        });
    }
    files.sort();
    Ok(files)
}

/// Loads and aligns every price file of the universe inside its window.
pub fn load_universe(universe: &UniverseConfig) -> Result<ReturnSample> {
    let files = price_files(&universe.data_dir)?;
    let tables = files
        .par_iter()
        .map(|f| load_price_csv(f))
        .collect::<Result<Vec<_>>>()?;
    align_and_log_returns(&tables, universe.date_min, universe.date_max)
}
