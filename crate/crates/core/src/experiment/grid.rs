use crate::error::{Error, Result};
use crate::risk::ConfidenceParam;

/// First sweep point.
pub const GRID_START: f64 = 0.0001;

/// Default spacing of the sweep grid.
pub const GRID_STEP: f64 = 0.002;

/// Exclusive upper end of the sweep range.
pub const GRID_END: f64 = 0.1;

/// The epsilon values reported in the comparison tables.
pub const TABULATION: [f64; 5] = [0.0001, 0.0201, 0.0401, 0.0601, 0.0801];

/// The default 50-point sweep `0.0001 + 0.002 k`, `k = 0..49`.
pub fn epsilon_grid() -> Vec<ConfidenceParam> {
    epsilon_grid_with_step(GRID_STEP).expect("default step is valid")
}

/// `0.0001 + step * k` for every `k` keeping the point below 0.1. Points
/// are rounded to 12 decimals so repeated construction is exact.
pub fn epsilon_grid_with_step(step: f64) -> Result<Vec<ConfidenceParam>> {
    if !(step > 0.0 && step < GRID_END) {
        return Err(Error::invalid("grid step", step, "in (0, 0.1)"));
    }
    (0..)
        .map(|k| round12(GRID_START + step * k as f64))
        .take_while(|&e| e < GRID_END)
        .map(ConfidenceParam::new)
        .collect()
}

/// Whether `eps` is one of the tabulation points.
pub fn is_tabulation_point(eps: f64) -> bool {
    TABULATION.iter().any(|t| (t - eps).abs() < 1e-12)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
