use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::ReturnSample;
use crate::optim::{solve_lp, LinearProgram, Solution};

use super::{ConfidenceParam, Model, Portfolio};

/// Mixture of `l` empirical likelihood distributions, one per contiguous
/// block of sample rows.
///
/// Blocks hold `floor(S / l)` rows each, with the remainder handed one row
/// at a time to the earliest blocks. Mixture weights never enter the
/// program: the worst mixture is taken implicitly by bounding every block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureSpec {
    pub l: usize,
    pub block_sizes: Vec<usize>,
}

impl MixtureSpec {
    pub const MAX_COMPONENTS: usize = 5;

    pub fn contiguous(rows: usize, l: usize) -> Result<Self> {
        if !(1..=Self::MAX_COMPONENTS).contains(&l) {
            return Err(Error::invalid("mixture size l", l, "in 1..=5"));
        }
        if rows < l {
            return Err(Error::InsufficientData {
                what: "sample rows for the mixture blocks",
                required: l,
                actual: rows,
            });
        }
        let base = rows / l;
        let extra = rows % l;
        Ok(Self {
            l,
            block_sizes: (0..l).map(|j| base + usize::from(j < extra)).collect(),
        })
    }

    /// Row ranges of the blocks, in order.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.block_sizes
            .iter()
            .map(|&len| {
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }

    pub fn total_rows(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    fn validate(&self, rows: usize) -> Result<()> {
        if self.l != self.block_sizes.len() || self.block_sizes.contains(&0) {
            return Err(Error::invalid(
                "mixture blocks",
                format!("{:?}", self.block_sizes),
                "l non-empty blocks",
            ));
        }
        if self.total_rows() != rows {
            return Err(Error::DimensionMismatch {
                context: "mixture block sizes",
                expected: rows,
                actual: self.total_rows(),
            });
        }
        Ok(())
    }
}

/// `S * eps < 1`: the tail holds less than one scenario and CVaR collapses
/// onto the largest loss.
pub fn tail_is_thin(rows: usize, eps: ConfidenceParam) -> bool {
    (rows as f64) * eps.value() < 1.0
}

fn losses(sample: &ReturnSample, weights: &[f64]) -> Result<Vec<f64>> {
    Ok(sample
        .portfolio_returns(weights)?
        .into_iter()
        .map(|r| -r)
        .collect())
}

/// Empirical VaR: the `ceil(S (1 - eps))`-th smallest loss.
pub fn empirical_var(sample: &ReturnSample, weights: &[f64], eps: ConfidenceParam) -> Result<f64> {
    let mut l = losses(sample, weights)?;
    l.sort_by(f64::total_cmp);
    let s = l.len();
    let rank = ((s as f64) * (1.0 - eps.value()) - 1e-9).ceil().clamp(1.0, s as f64) as usize;
    Ok(l[rank - 1])
}

/// Minimizes `F(gamma) = gamma + sum_i [loss_i - gamma]^+ / (S eps)` exactly.
///
/// `F` is convex and piecewise linear with kinks at the losses, so the
/// minimum sits at one of them. Returns the minimal value and the smallest
/// minimizing `gamma`.
pub fn empirical_cvar(
    sample: &ReturnSample,
    weights: &[f64],
    eps: ConfidenceParam,
) -> Result<(f64, f64)> {
    let mut l = losses(sample, weights)?;
    Ok(cvar_of_losses(&mut l, eps.value()))
}

pub(crate) fn cvar_of_losses(losses: &mut [f64], eps: f64) -> (f64, f64) {
    losses.sort_by(f64::total_cmp);
    let s = losses.len();
    let scale = 1.0 / (s as f64 * eps);
    let mut suffix = 0.0;
    let mut best = (f64::INFINITY, f64::NAN);
    // Walk from the largest loss down; `suffix` sums losses[k..].
    for k in (0..s).rev() {
        suffix += losses[k];
        let gamma = losses[k];
        let value = gamma + scale * (suffix - (s - k) as f64 * gamma);
        if value <= best.0 {
            best = (value, gamma);
        }
    }
    best
}

/// Variables are laid out as `[x (N), u (S), gamma, theta]`; the first
/// `blocks.len()` inequality rows are the per-block tail bounds.
fn scenario_lp(sample: &ReturnSample, eps: f64, blocks: &[Range<usize>]) -> LinearProgram {
    let n = sample.n_assets();
    let s = sample.periods();
    let vars = n + s + 2;
    let (gamma, theta) = (n + s, n + s + 1);
    let returns = sample.returns();

    let mut objective = vec![0.0; vars];
    objective[theta] = 1.0;

    let mut ineq = DMatrix::zeros(blocks.len() + s, vars);
    for (j, block) in blocks.iter().enumerate() {
        let weight = 1.0 / (block.len() as f64 * eps);
        ineq[(j, gamma)] = 1.0;
        ineq[(j, theta)] = -1.0;
        for i in block.clone() {
            ineq[(j, n + i)] = weight;
        }
    }
    // u_i >= -r_i'x - gamma   <=>   -r_i'x - gamma - u_i <= 0
    for i in 0..s {
        let row = blocks.len() + i;
        for k in 0..n {
            ineq[(row, k)] = -returns[(i, k)];
        }
        ineq[(row, gamma)] = -1.0;
        ineq[(row, n + i)] = -1.0;
    }

    let mut eq = DMatrix::zeros(1, vars);
    eq.view_mut((0, 0), (1, n)).fill(1.0);

    let mut lower = vec![0.0; vars];
    lower[gamma] = f64::NEG_INFINITY;
    lower[theta] = f64::NEG_INFINITY;

    LinearProgram::new(objective)
        .with_eq(eq, vec![1.0])
        .with_ineq(ineq, vec![0.0; blocks.len() + s])
        .with_lower(lower)
}

fn lp_portfolio(sol: Solution, n: usize, s: usize, model: Model, eps: ConfidenceParam) -> Result<Portfolio> {
    if !sol.is_optimal() {
        return Err(Error::Solver(format!(
            "{model} program at epsilon {eps}: {} after {} pivots",
            sol.status, sol.iterations
        )));
    }
    let weights = sol.point[..n].iter().map(|w| w.max(0.0)).collect();
    Ok(Portfolio {
        weights,
        objective_value: sol.value,
        model,
        epsilon: eps,
        gamma: Some(sol.point[n + s]),
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
    })
}

fn check_eps(eps: ConfidenceParam) -> Result<()> {
    if eps.value() >= 1.0 {
        return Err(Error::invalid("epsilon", eps.value(), "in (0, 1)"));
    }
    Ok(())
}

/// Scenario LP for the sample CVaR over variables `(x, u, gamma, theta)`:
/// minimize `theta` subject to `sum x = 1`, `x >= 0`,
/// `gamma + sum u / (S eps) <= theta`, `u_i >= -r_i'x - gamma`, `u >= 0`.
pub fn minimize_cvar(sample: &ReturnSample, eps: ConfidenceParam) -> Result<Portfolio> {
    check_eps(eps)?;
    let s = sample.periods();
    let lp = scenario_lp(sample, eps.value(), std::slice::from_ref(&(0..s)));
    lp_portfolio(solve_lp(&lp)?, sample.n_assets(), s, Model::CVar, eps)
}

/// Worst-case CVaR over mixtures of the block distributions in `mix`: one
/// `gamma + sum_{i in block j} u_i / (S_j eps) <= theta` row per block.
pub fn minimize_wcvar(
    sample: &ReturnSample,
    eps: ConfidenceParam,
    mix: &MixtureSpec,
) -> Result<Portfolio> {
    check_eps(eps)?;
    let s = sample.periods();
    mix.validate(s)?;
    let lp = scenario_lp(sample, eps.value(), &mix.blocks());
    lp_portfolio(solve_lp(&lp)?, sample.n_assets(), s, Model::WCVar, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(v: f64) -> ConfidenceParam {
        ConfidenceParam::new(v).unwrap()
    }

    fn column(values: &[f64]) -> ReturnSample {
        ReturnSample::from_rows(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn block_partition() {
        let m = MixtureSpec::contiguous(11, 3).unwrap();
        assert_eq!(m.block_sizes, vec![4, 4, 3]);
        assert_eq!(m.blocks(), vec![0..4, 4..8, 8..11]);
        assert!(MixtureSpec::contiguous(10, 0).is_err());
        assert!(MixtureSpec::contiguous(10, 6).is_err());
        assert!(MixtureSpec::contiguous(2, 3).is_err());
    }

    #[test]
    fn worst_fifth_of_losses() {
        let s = column(&[-0.01, -0.02, -0.03, -0.04, -0.05]);
        let (cvar, _) = empirical_cvar(&s, &[1.0], eps(0.2)).unwrap();
        assert!((cvar - 0.05).abs() < 1e-15);
        // Fine grid over gamma agrees.
        let grid_min = (0..=10_000)
            .map(|k| {
                let g = -0.1 + 0.2 * k as f64 / 10_000.0;
                g + [0.01, 0.02, 0.03, 0.04, 0.05]
                    .iter()
                    .map(|l| (l - g).max(0.0))
                    .sum::<f64>()
                    / (5.0 * 0.2)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((cvar - grid_min).abs() < 1e-12);
    }

    #[test]
    fn point_mass_and_full_average() {
        let s = column(&[0.003; 7]);
        for e in [0.01, 0.3, 1.0] {
            assert!((empirical_cvar(&s, &[1.0], eps(e)).unwrap().0 + 0.003).abs() < 1e-15);
        }
        let s = column(&[0.01, -0.02, 0.004, 0.03]);
        let mean = (0.01 - 0.02 + 0.004 + 0.03) / 4.0;
        assert!((empirical_cvar(&s, &[1.0], eps(1.0)).unwrap().0 + mean).abs() < 1e-15);
    }

    #[test]
    fn var_rank() {
        let s = column(&[-0.01, -0.02, -0.03, -0.04, -0.05]);
        assert_eq!(empirical_var(&s, &[1.0], eps(0.2)).unwrap(), 0.04);
        assert_eq!(empirical_var(&s, &[1.0], eps(0.01)).unwrap(), 0.05);
    }

    #[test]
    fn single_asset_lp_matches_scan() {
        let s = column(&[0.01, -0.03, 0.002, -0.011, 0.02, -0.004, 0.0]);
        for e in [0.05, 0.2, 0.5] {
            let p = minimize_cvar(&s, eps(e)).unwrap();
            let (cvar, _) = empirical_cvar(&s, &[1.0], eps(e)).unwrap();
            assert!((p.weights[0] - 1.0).abs() < 1e-12);
            assert!((p.objective_value - cvar).abs() < 1e-12);
            assert!(p.gamma.is_some());
        }
    }

    #[test]
    fn duplicated_rows_keep_optimum() {
        let rows = vec![
            vec![0.01, -0.02],
            vec![-0.03, 0.01],
            vec![0.02, 0.005],
            vec![-0.01, -0.015],
            vec![0.004, 0.02],
        ];
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let a = minimize_cvar(&ReturnSample::from_rows(&rows).unwrap(), eps(0.2)).unwrap();
        let b = minimize_cvar(&ReturnSample::from_rows(&doubled).unwrap(), eps(0.2)).unwrap();
        assert!((a.objective_value - b.objective_value).abs() < 1e-8);
    }

    #[test]
    fn one_block_mixture_is_base_cvar() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![0.01 * (t * 0.7).sin(), 0.012 * (t * 1.3).cos(), 0.008 * (t * 0.4 + 1.0).sin()]
            })
            .collect();
        let s = ReturnSample::from_rows(&rows).unwrap();
        let mix = MixtureSpec::contiguous(12, 1).unwrap();
        let a = minimize_cvar(&s, eps(0.1)).unwrap();
        let b = minimize_wcvar(&s, eps(0.1), &mix).unwrap();
        assert!((a.objective_value - b.objective_value).abs() < 1e-12);
        assert_eq!(a.weights, b.weights);
        assert_eq!(b.model, Model::WCVar);
    }

    #[test]
    fn rejects_mismatched_mixture() {
        let s = column(&[0.01, 0.02, 0.03]);
        let mix = MixtureSpec::contiguous(4, 2).unwrap();
        assert!(minimize_wcvar(&s, eps(0.1), &mix).is_err());
        assert!(minimize_cvar(&s, eps(1.0)).is_err());
    }

    #[test]
    fn thin_tail_flag() {
        assert!(tail_is_thin(193, eps(0.0001)));
        assert!(!tail_is_thin(193, eps(0.0201)));
    }
}
