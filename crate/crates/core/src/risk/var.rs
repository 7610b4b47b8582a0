use crate::error::{Error, Result};
use crate::optim::{solve_simplex_cone, SimplexProblem, Solution};
use crate::stats::{MomentEstimate, UncertaintyBounds};

use super::{ConfidenceParam, KappaKind, Model, Portfolio};

fn into_portfolio(sol: Solution, model: Model, eps: ConfidenceParam) -> Result<Portfolio> {
    if !sol.is_optimal() {
        return Err(Error::Solver(format!(
            "{model} at epsilon {eps}: {} after {} iterations (gap {:e})",
            sol.status, sol.iterations, sol.kkt_residual
        )));
    }
    Ok(Portfolio {
        weights: sol.point,
        objective_value: sol.value,
        model,
        epsilon: eps,
        gamma: None,
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
    })
}

/// Minimizes `kappa(eps) * sqrt(x' S x) - mu' x` over long-only, fully
/// invested portfolios using the point estimates.
pub fn minimize_var(
    moments: &MomentEstimate,
    eps: ConfidenceParam,
    kind: KappaKind,
) -> Result<Portfolio> {
    let kappa = kind.kappa(eps.value())?;
    let problem = SimplexProblem::new(kappa, moments.cov.clone(), moments.mean.clone())?;
    into_portfolio(solve_simplex_cone(&problem)?, Model::Var, eps)
}

/// Worst case over the separable bounds: the same objective with the
/// (PSD-repaired) upper covariance bound and the lower mean bound.
pub fn minimize_wvar(
    moments: &MomentEstimate,
    bounds: &UncertaintyBounds,
    eps: ConfidenceParam,
    kind: KappaKind,
) -> Result<Portfolio> {
    let n = moments.n_assets();
    if bounds.mean_lower.len() != n || bounds.cov_upper_psd.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "uncertainty bounds",
            expected: n,
            actual: bounds.mean_lower.len(),
        });
    }
    let kappa = kind.kappa(eps.value())?;
    let problem = SimplexProblem::new(
        kappa,
        bounds.cov_upper_psd.clone(),
        bounds.mean_lower.clone(),
    )?;
    into_portfolio(solve_simplex_cone(&problem)?, Model::WVar, eps)
}
