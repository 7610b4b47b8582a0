//! Moment estimation, bootstrap uncertainty bounds, PSD repair, scenario
//! simulation and downside-risk performance metrics.

mod bootstrap;
mod moments;
pub mod normal;
mod performance;
mod psd;
pub mod rng;
mod simulate;

pub use bootstrap::{bootstrap_bounds, nearest_rank, UncertaintyBounds};
pub use moments::{estimate_moments, MomentEstimate};
pub use performance::{
    evaluate_performance, sortino_ratio, DownsideTarget, PerformanceConfig, PerformanceRecord,
};
pub use psd::{min_eigenvalue, psd_repair, PSD_FLOOR};
pub use simulate::{simulate_mvn, MAX_JITTER};
