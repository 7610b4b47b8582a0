use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Value assigned to clipped eigenvalues.
pub const PSD_FLOOR: f64 = 1e-12;

fn check(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "square matrix",
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    check(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let eig = SymmetricEigen::new(symmetrized(m));
    Ok(eig.eigenvalues.min())
}

/// Projects a symmetric matrix onto the PSD cone (Frobenius norm) by
/// raising negative eigenvalues to [`PSD_FLOOR`]. Matrices that are
/// already PSD come back unchanged apart from symmetrization.
pub fn psd_repair(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check(m)?;
    let sym = symmetrized(m);
    if sym.is_empty() {
        return Ok(sym);
    }
    let SymmetricEigen {
        eigenvectors,
        mut eigenvalues,
    } = SymmetricEigen::new(sym.clone());
    if eigenvalues.min() >= 0.0 {
        return Ok(sym);
    }
    eigenvalues.apply(|v| {
        if *v < 0.0 {
            *v = PSD_FLOOR
        }
    });
    let scaled = &eigenvectors * nalgebra::DMatrix::from_diagonal(&eigenvalues);
    let out = scaled * eigenvectors.transpose();
    Ok(symmetrized(&out))
}
