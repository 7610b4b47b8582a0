use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ingest::ReturnSample;

/// Sample mean vector and unbiased sample covariance of per-period returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MomentEstimate {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "covariance matrix",
                expected: n,
                actual: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite moment".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn n_assets(&self) -> usize {
        self.mean.len()
    }
}

/// Column means and the `T - 1` divisor covariance, computed in two passes.
pub fn estimate_moments(sample: &ReturnSample) -> Result<MomentEstimate> {
    let periods = sample.periods();
    if periods < 2 {
        return Err(Error::InsufficientData {
            what: "return rows",
            required: 2,
            actual: periods,
        });
    }
    Ok(moments_of(sample.returns()))
}

/// Unchecked core shared with the bootstrap; `r` must have at least 2 rows.
pub(crate) fn moments_of(r: &DMatrix<f64>) -> MomentEstimate {
    let (t, n) = r.shape();
    let mean = DVector::from_fn(n, |j, _| r.column(j).sum() / t as f64);
    let centered = DMatrix::from_fn(t, n, |i, j| r[(i, j)] - mean[j]);
    let mut cov = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v = centered.column(j).dot(&centered.column(k)) / (t - 1) as f64;
            cov[(j, k)] = v;
            cov[(k, j)] = v;
        }
    }
    MomentEstimate { mean, cov }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::min_eigenvalue;
    use proptest::prelude::*;

    #[test]
    fn two_point_variance() {
        let s = ReturnSample::from_rows(&[vec![0.01], vec![0.03]]).unwrap();
        let m = estimate_moments(&s).unwrap();
        assert!((m.mean[0] - 0.02).abs() < 1e-17);
        assert!((m.cov[(0, 0)] - 0.0002).abs() < 1e-17);
    }

    #[test]
    fn identical_columns_are_rank_one() {
        let s = ReturnSample::from_rows(&[vec![0.1, 0.1], vec![-0.2, -0.2], vec![0.05, 0.05]])
            .unwrap();
        let m = estimate_moments(&s).unwrap();
        assert_eq!(m.cov[(0, 0)], m.cov[(1, 1)]);
        assert_eq!(m.cov[(0, 0)], m.cov[(0, 1)]);
    }

    #[test]
    fn matches_raw_moment_oracle() {
        // E[xy] - E[x]E[y], rescaled to the unbiased divisor.
        let rows = vec![
            vec![0.3, -1.2, 0.7],
            vec![1.1, 0.4, -0.5],
            vec![-0.6, 0.9, 0.2],
            vec![0.05, -0.3, 1.4],
            vec![0.8, 0.1, -0.9],
        ];
        let s = ReturnSample::from_rows(&rows).unwrap();
        let m = estimate_moments(&s).unwrap();
        let t = rows.len() as f64;
        for j in 0..3 {
            let ej: f64 = rows.iter().map(|r| r[j]).sum::<f64>() / t;
            assert!((m.mean[j] - ej).abs() < 1e-12);
            for k in 0..3 {
                let ek: f64 = rows.iter().map(|r| r[k]).sum::<f64>() / t;
                let exy: f64 = rows.iter().map(|r| r[j] * r[k]).sum::<f64>() / t;
                let want = (exy - ej * ek) * t / (t - 1.0);
                assert!((m.cov[(j, k)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_single_row() {
        let s = ReturnSample::from_rows(&[vec![0.01, 0.02]]).unwrap();
        assert!(matches!(
            estimate_moments(&s),
            Err(Error::InsufficientData { .. })
        ));
    }

    proptest! {
        #[test]
        fn covariance_is_psd(
            t in 2usize..12,
            n in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::stats::rng::stream(seed, 0);
            let mut z = vec![0.0; t * n];
            crate::stats::rng::fill_normal(&mut rng, &mut z);
            let s = ReturnSample::from_matrix(DMatrix::from_vec(t, n, z)).unwrap();
            let m = estimate_moments(&s).unwrap();
            prop_assert!(m.cov == m.cov.transpose());
            prop_assert!(min_eigenvalue(&m.cov).unwrap() >= -1e-10);
        }
    }
}
