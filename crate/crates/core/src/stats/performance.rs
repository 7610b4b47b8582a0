use crate::error::{Error, Result};
use crate::ingest::ReturnSample;

/// Threshold below which returns count as downside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DownsideTarget {
    /// The per-period risk-free rate (minimum acceptable return).
    #[default]
    RiskFree,
    Zero,
    PortfolioMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceConfig {
    pub annual_rf: f64,
    /// Day-count used to de-annualize the risk-free rate.
    pub periods_per_year: f64,
    pub downside_target: DownsideTarget,
}

impl Default for PerformanceConfig {
    fn default() -> Self {
        Self {
            annual_rf: 0.06,
            periods_per_year: 365.0,
            downside_target: DownsideTarget::RiskFree,
        }
    }
}

impl PerformanceConfig {
    pub fn with_rf(annual_rf: f64) -> Self {
        Self {
            annual_rf,
            ..Self::default()
        }
    }

    /// Per-period risk-free rate.
    pub fn rf_per_period(&self) -> f64 {
        self.annual_rf / self.periods_per_year
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceRecord {
    pub mean_return: f64,
    pub downside_dev: f64,
    /// `None` when the downside deviation is zero.
    pub sortino: Option<f64>,
    pub target_return: f64,
}

/// `(mean - rf) / downside_dev`, undefined for a zero deviation.
pub fn sortino_ratio(mean: f64, downside_dev: f64, rf_per_period: f64) -> Option<f64> {
    (downside_dev > 0.0).then(|| (mean - rf_per_period) / downside_dev)
}

/// Scores a portfolio on `sample`: mean portfolio return, downside
/// deviation `sqrt(mean(min(p_t - target, 0)^2))` over all `T` periods, and
/// the Sortino ratio against the per-period risk-free rate.
pub fn evaluate_performance(
    sample: &ReturnSample,
    weights: &[f64],
    config: &PerformanceConfig,
) -> Result<PerformanceRecord> {
    if !(config.annual_rf >= 0.0 && config.annual_rf.is_finite()) {
        return Err(Error::invalid("annual risk-free rate", config.annual_rf, ">= 0"));
    }
    if config.periods_per_year.is_nan() || config.periods_per_year <= 0.0 {
        return Err(Error::invalid("periods per year", config.periods_per_year, "> 0"));
    }
    let series = sample.portfolio_returns(weights)?;
    let t = series.len() as f64;
    let rf = config.rf_per_period();
    let mean_return = series.iter().sum::<f64>() / t;
    let target_return = match config.downside_target {
        DownsideTarget::RiskFree => rf,
        DownsideTarget::Zero => 0.0,
        DownsideTarget::PortfolioMean => mean_return,
    };
    let lpm2 = series
        .iter()
        .map(|p| (p - target_return).min(0.0).powi(2))
        .sum::<f64>()
        / t;
    let downside_dev = lpm2.sqrt();
    Ok(PerformanceRecord {
        mean_return,
        downside_dev,
        sortino: sortino_ratio(mean_return, downside_dev, rf),
        target_return,
    })
}
