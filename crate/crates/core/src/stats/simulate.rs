use nalgebra::{Cholesky, DMatrix};

use super::moments::MomentEstimate;
use super::rng;
use crate::error::{Error, Result};
use crate::ingest::{synthetic_dates, ReturnSample};

/// Largest diagonal jitter tried before giving up on the factorization.
pub const MAX_JITTER: f64 = 1e-6;

fn factor_with_jitter(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let mut jitter = 0.0;
    loop {
        let shifted = cov + DMatrix::<f64>::identity(n, n) * jitter;
        if let Some(chol) = Cholesky::new(shifted) {
            if jitter > 0.0 {
                log::debug!("covariance factorized with jitter {jitter:e}");
            }
            return Ok(chol.unpack());
        }
        jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
        if jitter > MAX_JITTER * 1.000_001 {
            return Err(Error::Numerical(format!(
                "covariance not factorizable with jitter up to {MAX_JITTER:e}"
            )));
        }
    }
}

/// Draws `samples` i.i.d. rows from `N(mean, cov)` as `mean + L z`, where
/// `L` is the Cholesky factor of `cov + jitter * I` and `z` comes from a
/// Box-Muller stream seeded by `seed`.
pub fn simulate_mvn(moments: &MomentEstimate, samples: usize, seed: u64) -> Result<ReturnSample> {
    if samples < 2 {
        return Err(Error::invalid("simulated sample count", samples, ">= 2"));
    }
    let cov = &moments.cov;
    if (cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
        return Err(Error::Numerical("covariance is not symmetric".into()));
    }
    let n = moments.n_assets();
    let lower = factor_with_jitter(cov)?;

    let mut z = vec![0.0; samples * n];
    rng::fill_normal(&mut rng::stream(seed, 0), &mut z);
    // Row-major draws: row t uses z[t*n .. (t+1)*n].
    let z = DMatrix::from_row_slice(samples, n, &z);
    let mut returns = z * lower.transpose();
    for mut row in returns.row_iter_mut() {
        row += moments.mean.transpose();
    }
    let assets = (0..n).map(|j| format!("A{j}")).collect();
    ReturnSample::new(assets, synthetic_dates(samples), returns)
}
