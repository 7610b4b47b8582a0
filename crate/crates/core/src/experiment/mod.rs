//! The study design: epsilon sweeps of the four models over market and
//! simulated scenarios, worst-case CVaR mixture-size selection and CSV
//! reports.
//!
//! Portfolios are scored in-sample: each one is evaluated on the same
//! returns it was optimized on.

mod grid;
mod report;
mod scenario;
mod study;

use std::path::{Path, PathBuf};

pub use grid::{
    epsilon_grid, epsilon_grid_with_step, is_tabulation_point, GRID_END, GRID_START, GRID_STEP,
    TABULATION,
};
pub use report::{
    fmt_sig6, lselect_csv, rows_csv, summary_csv, write_report, LSELECT_HEADER, ROWS_HEADER,
    SUMMARY_HEADER,
};
pub use scenario::{
    build_scenarios, load_universe, price_files, DataKind, SampleSize, ScenarioSpec,
};
pub use study::{
    average_sr, run_cvar_study, run_var_study, select_l, var_sweep, LSelection, ModelAverage,
    StudyConfig, StudyKind, SweepReport, SweepRow,
};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingest::ReturnSample;

/// Both studies of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub periods: usize,
    pub n_assets: usize,
    pub var: SweepReport,
    pub cvar: SweepReport,
}

/// Builds every scenario and runs both studies on each, in scenario order.
pub fn run_experiment(config: &RunConfig) -> Result<Vec<ScenarioResult>> {
    let study = StudyConfig::from_run_config(config)?;
    let specs = build_scenarios(config)?;
    let mut results = Vec::with_capacity(specs.len());
    let mut market: Option<(String, ReturnSample)> = None;
    for spec in specs {
        let cached = market.as_ref().filter(|(name, _)| *name == spec.universe.name);
        let base = match cached {
            Some((_, sample)) => sample.clone(),
            None => {
                let sample = load_universe(&spec.universe)?;
                market = Some((spec.universe.name.clone(), sample.clone()));
                sample
            }
        };
        let sample = spec.resolve(&base)?;
        log::info!(
            "scenario {}: {} periods x {} assets",
            spec.name,
            sample.periods(),
            sample.n_assets()
        );
        let var = run_var_study(&spec.name, &sample, &study, spec.bootstrap_seed)?;
        let cvar = run_cvar_study(&spec.name, &sample, &study)?;
        results.push(ScenarioResult {
            periods: sample.periods(),
            n_assets: sample.n_assets(),
            spec,
            var,
            cvar,
        });
    }
    Ok(results)
}

/// Writes the per-scenario reports and `summary.csv` into `dir`, creating
/// it if needed. Returns the written paths in write order.
pub fn write_outputs(results: &[ScenarioResult], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for r in results {
        written.extend(write_report(&r.var, dir)?);
        written.extend(write_report(&r.cvar, dir)?);
    }
    let pairs: Vec<_> = results.iter().map(|r| (&r.var, &r.cvar)).collect();
    written.push(report::write_file(&dir.join("summary.csv"), &summary_csv(&pairs))?);
    Ok(written)
}
