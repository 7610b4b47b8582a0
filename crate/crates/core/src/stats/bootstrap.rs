use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::moments::{moments_of, MomentEstimate};
use super::psd::psd_repair;
use super::rng;
use crate::error::{Error, Result};
use crate::ingest::ReturnSample;

/// Componentwise bounds on the mean and covariance from a row bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyBounds {
    pub mean_lower: DVector<f64>,
    /// Elementwise upper quantiles; symmetric but generally not PSD.
    pub cov_upper_raw: DMatrix<f64>,
    pub cov_upper_psd: DMatrix<f64>,
    pub confidence: f64,
    pub resamples: usize,
}

impl UncertaintyBounds {
    /// Bounds that coincide with point estimates (no estimation noise).
    pub fn from_point(moments: &MomentEstimate) -> Result<Self> {
        Ok(Self {
            mean_lower: moments.mean.clone(),
            cov_upper_raw: moments.cov.clone(),
            cov_upper_psd: psd_repair(&moments.cov)?,
            confidence: 0.5,
            resamples: 0,
        })
    }
}

/// Nearest-rank quantile of an ascending slice: element `ceil(q * len)`
/// (1-based), with a small guard so `0.95 * 1000` lands on rank 950.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let len = sorted.len();
    let rank = (q * len as f64 - 1e-9).ceil().clamp(1.0, len as f64) as usize;
    sorted[rank - 1]
}

/// Resamples the rows of `sample` with replacement `resamples` times.
///
/// Resample `b` draws from its own ChaCha stream `(seed, b)`, so the result
/// does not depend on thread scheduling. The lower mean bound is the
/// `1 - confidence` nearest-rank quantile of the resampled means; the
/// covariance bound is the `confidence` quantile of each resampled entry.
pub fn bootstrap_bounds(
    sample: &ReturnSample,
    confidence: f64,
    resamples: usize,
    seed: u64,
) -> Result<UncertaintyBounds> {
    if !(confidence > 0.5 && confidence < 1.0) {
        return Err(Error::invalid("bootstrap confidence", confidence, "in (0.5, 1)"));
    }
    if resamples < 100 {
        return Err(Error::invalid("bootstrap resamples", resamples, ">= 100"));
    }
    let periods = sample.periods();
    if periods < 2 {
        return Err(Error::InsufficientData {
            what: "return rows",
            required: 2,
            actual: periods,
        });
    }
    let returns = sample.returns();
    let n = sample.n_assets();

    let draws: Vec<MomentEstimate> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b as u64);
            let rows: Vec<usize> = (0..periods).map(|_| rng.random_range(0..periods)).collect();
            moments_of(&returns.select_rows(&rows))
        })
        .collect();

    let mut column = vec![0.0; resamples];
    let mut quantile = |f: &dyn Fn(&MomentEstimate) -> f64, q: f64| {
        for (slot, d) in column.iter_mut().zip(&draws) {
            *slot = f(d);
        }
        column.sort_by(f64::total_cmp);
        nearest_rank(&column, q)
    };

    let mean_lower = DVector::from_fn(n, |j, _| quantile(&|d| d.mean[j], 1.0 - confidence));
    let mut cov_upper_raw = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v = quantile(&|d| d.cov[(j, k)], confidence);
            cov_upper_raw[(j, k)] = v;
            cov_upper_raw[(k, j)] = v;
        }
    }
    let cov_upper_psd = psd_repair(&cov_upper_raw)?;
    Ok(UncertaintyBounds {
        mean_lower,
        cov_upper_raw,
        cov_upper_psd,
        confidence,
        resamples,
    })
}
