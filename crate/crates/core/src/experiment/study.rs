use rayon::prelude::*;

use super::grid::{epsilon_grid_with_step, is_tabulation_point};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingest::ReturnSample;
use crate::risk::{
    minimize_cvar, minimize_var, minimize_wcvar, minimize_wvar, tail_is_thin, ConfidenceParam,
    KappaKind, MixtureSpec, Model, Portfolio,
};
use crate::stats::{
    bootstrap_bounds, estimate_moments, evaluate_performance, MomentEstimate, PerformanceConfig,
    PerformanceRecord, UncertaintyBounds,
};

/// Parameters shared by every sweep of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub performance: PerformanceConfig,
    pub kappa_kind: KappaKind,
    pub grid: Vec<ConfidenceParam>,
    pub bootstrap_b: usize,
    pub bootstrap_confidence: f64,
    pub l_values: Vec<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self::from_run_config(&RunConfig::default()).expect("defaults are valid")
    }
}

impl StudyConfig {
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            performance: PerformanceConfig::with_rf(cfg.annual_rf),
            kappa_kind: cfg.kappa_kind,
            grid: epsilon_grid_with_step(cfg.grid_step)?,
            bootstrap_b: cfg.bootstrap_b,
            bootstrap_confidence: cfg.bootstrap_confidence,
            l_values: cfg.l_values.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Var,
    CVar,
}

impl StudyKind {
    pub fn tag(self) -> &'static str {
        match self {
            StudyKind::Var => "var",
            StudyKind::CVar => "cvar",
        }
    }
}

/// One optimal portfolio scored in-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub model: Model,
    /// Mixture size for worst-case CVaR rows.
    pub l: Option<usize>,
    pub performance: PerformanceRecord,
    pub portfolio: Portfolio,
}

impl SweepRow {
    pub fn sortino(&self) -> Option<f64> {
        self.performance.sortino
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelAverage {
    pub model: Model,
    /// Mean Sortino ratio over the grid; NaN if any ratio is undefined.
    pub avg_sr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LSelection {
    pub l: usize,
    pub avg_sr_cvar: f64,
    pub avg_sr_wcvar: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub scenario: String,
    pub study: StudyKind,
    /// Rows ordered by model, then epsilon. For the CVaR study these are the
    /// base rows followed by the worst-case rows at the selected `l`.
    pub rows: Vec<SweepRow>,
    pub averages: Vec<ModelAverage>,
    /// The subset of `rows` at the tabulation points.
    pub table_rows: Vec<SweepRow>,
    pub l_selection: Vec<LSelection>,
    pub l_star: Option<usize>,
    /// Worst-case rows for every candidate `l`, in `l_values` order.
    pub candidates: Vec<(usize, Vec<SweepRow>)>,
    /// Grid points where fewer than one sample falls in the tail.
    pub thin_tail: Vec<f64>,
}

impl SweepReport {
    pub fn average(&self, model: Model) -> Option<f64> {
        self.averages.iter().find(|a| a.model == model).map(|a| a.avg_sr)
    }

    pub fn rows_for(&self, model: Model) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.model == model)
    }
}

/// Arithmetic mean of the Sortino ratios of `rows` in order; NaN when any
/// ratio is undefined or `rows` is empty.
pub fn average_sr<'a>(rows: impl IntoIterator<Item = &'a SweepRow>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in rows {
        match row.sortino() {
            Some(sr) => sum += sr,
            None => return f64::NAN,
        }
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// The `l` with the largest finite difference; the smallest `l` wins ties.
pub fn select_l(diffs: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(l, d) in diffs {
        if !d.is_finite() {
            continue;
        }
        match best {
            Some((bl, bd)) if d < bd || (d == bd && l > bl) => {}
            _ => best = Some((l, d)),
        }
    }
    best.map(|(l, _)| l)
}

fn in_context(scenario: &str, eps: ConfidenceParam, err: Error) -> Error {
    match err {
        Error::Solver(m) => Error::Solver(format!("scenario {scenario}, epsilon {eps}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("scenario {scenario}, epsilon {eps}: {m}")),
        other => other,
    }
}

fn scored(
    sample: &ReturnSample,
    portfolio: Portfolio,
    l: Option<usize>,
    perf: &PerformanceConfig,
) -> Result<SweepRow> {
    let performance = evaluate_performance(sample, &portfolio.weights, perf)?;
    Ok(SweepRow {
        epsilon: portfolio.epsilon.value(),
        model: portfolio.model,
        l,
        performance,
        portfolio,
    })
}

fn finish(
    scenario: &str,
    study: StudyKind,
    rows: Vec<SweepRow>,
    models: &[Model],
    sample: &ReturnSample,
    grid: &[ConfidenceParam],
) -> SweepReport {
    let averages = models
        .iter()
        .map(|&model| ModelAverage {
            model,
            avg_sr: average_sr(rows.iter().filter(|r| r.model == model)),
        })
        .collect();
    let table_rows = rows
        .iter()
        .filter(|r| is_tabulation_point(r.epsilon))
        .cloned()
        .collect();
    // Only the scenario programs depend on the tail sample count.
    let thin_tail: Vec<f64> = grid
        .iter()
        .filter(|e| study == StudyKind::CVar && tail_is_thin(sample.periods(), **e))
        .map(|e| e.value())
        .collect();
    if !thin_tail.is_empty() {
        log::warn!(
            "scenario {scenario}: {} grid points leave fewer than one tail sample",
            thin_tail.len()
        );
    }
    SweepReport {
        scenario: scenario.to_string(),
        study,
        rows,
        averages,
        table_rows,
        l_selection: Vec::new(),
        l_star: None,
        candidates: Vec::new(),
        thin_tail,
    }
}

/// VaR versus worst-case VaR sweep with caller-supplied moment bounds.
pub fn var_sweep(
    scenario: &str,
    sample: &ReturnSample,
    moments: &MomentEstimate,
    bounds: &UncertaintyBounds,
    cfg: &StudyConfig,
) -> Result<SweepReport> {
    let pairs = cfg
        .grid
        .par_iter()
        .map(|&eps| {
            let solve = || -> Result<(SweepRow, SweepRow)> {
                let base = minimize_var(moments, eps, cfg.kappa_kind)?;
                let worst = minimize_wvar(moments, bounds, eps, cfg.kappa_kind)?;
                Ok((
                    scored(sample, base, None, &cfg.performance)?,
                    scored(sample, worst, None, &cfg.performance)?,
                ))
            };
            solve().map_err(|e| in_context(scenario, eps, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let (base, worst): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let rows = base.into_iter().chain(worst).collect();
    Ok(finish(scenario, StudyKind::Var, rows, &[Model::Var, Model::WVar], sample, &cfg.grid))
}

/// Estimates moments and bootstrap bounds on `sample`, then sweeps VaR and
/// worst-case VaR over the grid.
pub fn run_var_study(
    scenario: &str,
    sample: &ReturnSample,
    cfg: &StudyConfig,
    bootstrap_seed: u64,
) -> Result<SweepReport> {
    let moments = estimate_moments(sample)?;
    let bounds = bootstrap_bounds(sample, cfg.bootstrap_confidence, cfg.bootstrap_b, bootstrap_seed)?;
    var_sweep(scenario, sample, &moments, &bounds, cfg)
}

/// CVaR versus worst-case CVaR over contiguous `l`-block mixtures. Base CVaR
/// is solved once per grid point; the reported worst-case rows are those of
/// the `l` maximizing the average Sortino improvement.
pub fn run_cvar_study(scenario: &str, sample: &ReturnSample, cfg: &StudyConfig) -> Result<SweepReport> {
    if cfg.l_values.is_empty() {
        return Err(Error::invalid("l_values", "[]", "non-empty"));
    }
    let mixes = cfg
        .l_values
        .iter()
        .map(|&l| MixtureSpec::contiguous(sample.periods(), l))
        .collect::<Result<Vec<_>>>()?;

    // Job j = (grid index) * (1 + L) + slot; slot 0 is base CVaR.
    let per_eps = 1 + mixes.len();
    let jobs = cfg.grid.len() * per_eps;
    let solved = (0..jobs)
        .into_par_iter()
        .map(|j| {
            let eps = cfg.grid[j / per_eps];
            let slot = j % per_eps;
            let solve = || -> Result<SweepRow> {
                if slot == 0 {
                    scored(sample, minimize_cvar(sample, eps)?, None, &cfg.performance)
                } else {
                    let mix = &mixes[slot - 1];
                    scored(sample, minimize_wcvar(sample, eps, mix)?, Some(mix.l), &cfg.performance)
                }
            };
            solve().map_err(|e| in_context(scenario, eps, e))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut base = Vec::with_capacity(cfg.grid.len());
    let mut candidates: Vec<(usize, Vec<SweepRow>)> =
        cfg.l_values.iter().map(|&l| (l, Vec::with_capacity(cfg.grid.len()))).collect();
    for (j, row) in solved.into_iter().enumerate() {
        match j % per_eps {
            0 => base.push(row),
            slot => candidates[slot - 1].1.push(row),
        }
    }

    let avg_cvar = average_sr(&base);
    let l_selection: Vec<LSelection> = candidates
        .iter()
        .map(|(l, rows)| {
            let avg_wcvar = average_sr(rows);
            LSelection {
                l: *l,
                avg_sr_cvar: avg_cvar,
                avg_sr_wcvar: avg_wcvar,
                diff: avg_wcvar - avg_cvar,
            }
        })
        .collect();
    let l_star = select_l(&l_selection.iter().map(|s| (s.l, s.diff)).collect::<Vec<_>>());
    // Without a finite difference the first candidate is reported.
    let chosen = l_star.unwrap_or(candidates[0].0);
    let worst = candidates
        .iter()
        .find(|(l, _)| *l == chosen)
        .map(|(_, rows)| rows.clone())
        .unwrap_or_default();

    let rows = base.into_iter().chain(worst).collect();
    let mut report = finish(scenario, StudyKind::CVar, rows, &[Model::CVar, Model::WCVar], sample, &cfg.grid);
    report.l_selection = l_selection;
    report.l_star = l_star;
    report.candidates = candidates;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::TABULATION;
    use crate::stats::simulate_mvn;
    use nalgebra::{DMatrix, DVector};

    fn desk_sample(n: usize, rows: usize, seed: u64) -> ReturnSample {
        let mean = DVector::from_fn(n, |i, _| 0.0004 + 0.0002 * i as f64);
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let vol = 0.01 + 0.002 * i.max(j) as f64;
            if i == j { vol * vol } else { 0.3 * 1e-4 }
        });
        simulate_mvn(&MomentEstimate::new(mean, cov).unwrap(), rows, seed).unwrap()
    }

    fn small_config() -> StudyConfig {
        StudyConfig {
            grid: epsilon_grid_with_step(0.01).unwrap(),
            bootstrap_b: 200,
            ..StudyConfig::default()
        }
    }

    #[test]
    fn select_l_matches_published_differences() {
        let table7 = [(2, -0.0214), (3, -0.048), (4, -0.0385), (5, -0.0513)];
        assert_eq!(select_l(&table7), Some(2));
        let table9 = [(2, -5.78e-05), (3, 6.59e-05), (4, 0.0025), (5, 0.00492)];
        assert_eq!(select_l(&table9), Some(5));
        assert_eq!(select_l(&[(3, 0.1), (2, 0.1)]), Some(2));
        assert_eq!(select_l(&[(2, f64::NAN)]), None);
    }

    #[test]
    fn degenerate_bounds_make_var_and_wvar_coincide() {
        let sample = desk_sample(4, 120, 3);
        let moments = estimate_moments(&sample).unwrap();
        let bounds = UncertaintyBounds::from_point(&moments).unwrap();
        let cfg = small_config();
        let report = var_sweep("degenerate", &sample, &moments, &bounds, &cfg).unwrap();
        let base: Vec<_> = report.rows_for(Model::Var).collect();
        let worst: Vec<_> = report.rows_for(Model::WVar).collect();
        assert_eq!(base.len(), cfg.grid.len());
        for (b, w) in base.iter().zip(&worst) {
            assert_eq!(b.epsilon, w.epsilon);
            assert!((b.performance.mean_return - w.performance.mean_return).abs() < 1e-9);
            assert!((b.portfolio.objective_value - w.portfolio.objective_value).abs() < 1e-9);
        }
    }

    #[test]
    fn var_study_is_seed_deterministic() {
        let sample = desk_sample(5, 150, 11);
        let cfg = small_config();
        let a = run_var_study("desk", &sample, &cfg, 9).unwrap();
        let b = run_var_study("desk", &sample, &cfg, 9).unwrap();
        assert_eq!(a, b);
        let sr = |r: &SweepReport| r.rows.iter().map(|x| x.sortino().unwrap().to_bits()).collect::<Vec<_>>();
        assert_eq!(sr(&a), sr(&b));
    }

    #[test]
    fn averages_recompute_from_rows() {
        let sample = desk_sample(3, 80, 5);
        let report = run_var_study("avg", &sample, &small_config(), 1).unwrap();
        for avg in &report.averages {
            let srs: Vec<f64> = report.rows_for(avg.model).map(|r| r.sortino().unwrap()).collect();
            let mean = srs.iter().sum::<f64>() / srs.len() as f64;
            assert!((avg.avg_sr - mean).abs() <= 1e-12);
        }
        assert_eq!(report.table_rows.len(), 2 * TABULATION.len());
    }

    #[test]
    fn cvar_study_selects_the_best_l() {
        let sample = desk_sample(3, 60, 8);
        let cfg = StudyConfig {
            grid: epsilon_grid_with_step(0.02).unwrap(),
            l_values: vec![2, 3],
            ..StudyConfig::default()
        };
        let report = run_cvar_study("cv", &sample, &cfg).unwrap();
        let l_star = report.l_star.unwrap();
        let best = report
            .l_selection
            .iter()
            .map(|s| s.diff)
            .fold(f64::NEG_INFINITY, f64::max);
        let picked = report.l_selection.iter().find(|s| s.l == l_star).unwrap();
        assert_eq!(picked.diff, best);
        assert_eq!(report.rows.len(), 2 * cfg.grid.len());
        assert!(report.rows_for(Model::WCVar).all(|r| r.l == Some(l_star)));
        for (_, rows) in &report.candidates {
            for (w, c) in rows.iter().zip(report.rows_for(Model::CVar)) {
                assert!(w.portfolio.objective_value >= c.portfolio.objective_value - 1e-9);
            }
        }
    }

    #[test]
    fn single_asset_cvar_and_wcvar_coincide() {
        let sample = desk_sample(1, 40, 2);
        let cfg = StudyConfig {
            grid: epsilon_grid_with_step(0.02).unwrap(),
            ..StudyConfig::default()
        };
        let report = run_cvar_study("one", &sample, &cfg).unwrap();
        for (_, rows) in &report.candidates {
            for (w, c) in rows.iter().zip(report.rows_for(Model::CVar)) {
                assert!((w.performance.mean_return - c.performance.mean_return).abs() < 1e-12);
                assert_eq!(w.sortino().is_some(), c.sortino().is_some());
            }
        }
    }
}
