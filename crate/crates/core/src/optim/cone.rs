//! Minimizes `f(x) = kappa * sqrt(x'Sx) - mu'x` over the unit simplex.
//!
//! Pairwise Frank-Wolfe steps with an exact line search move weight from the
//! worst support vertex to the best vertex; periodic Newton steps restricted
//! to the current support face finish the solve quickly. The square root is
//! smoothed to `sqrt(x'Sx + SMOOTHING^2)`, which keeps the gradient defined
//! at `x'Sx = 0`. Convergence is certified by the Frank-Wolfe duality gap
//! `grad'x - min_j grad_j`.

use nalgebra::{DMatrix, DVector};

use super::{Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::stats::min_eigenvalue;

pub const SMOOTHING: f64 = 1e-10;
const NEWTON_EVERY: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexProblem {
    pub kappa: f64,
    pub cov: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl SimplexProblem {
    pub fn new(kappa: f64, cov: DMatrix<f64>, mean: DVector<f64>) -> Result<Self> {
        let p = Self {
            kappa,
            cov,
            mean,
            tol: 1e-9,
            max_iters: 200_000,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 {
            return Err(Error::InsufficientData {
                what: "assets",
                required: 1,
                actual: 0,
            });
        }
        if self.cov.nrows() != n || self.cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "covariance matrix",
                expected: n,
                actual: self.cov.nrows(),
            });
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", self.kappa, "positive and finite"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tolerance", self.tol, "> 0"));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite mean".into()));
        }
        let lambda = min_eigenvalue(&self.cov)?;
        if lambda < -1e-10 {
            return Err(Error::Numerical(format!(
                "covariance is not PSD (min eigenvalue {lambda:e})"
            )));
        }
        Ok(())
    }

    /// Unsmoothed objective.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let q = x.dot(&(&self.cov * &x)).max(0.0);
        self.kappa * q.sqrt() - self.mean.dot(&x)
    }
}

struct State<'a> {
    p: &'a SimplexProblem,
    x: Vec<f64>,
    /// `S x`, maintained incrementally.
    sx: Vec<f64>,
}

impl<'a> State<'a> {
    fn vertex(p: &'a SimplexProblem, j: usize) -> Self {
        let n = p.mean.len();
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        let sx = p.cov.column(j).iter().copied().collect();
        Self { p, x, sx }
    }

    fn refresh(&mut self) {
        let cov = &self.p.cov;
        for (i, slot) in self.sx.iter_mut().enumerate() {
            *slot = self
                .x
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(j, w)| cov[(i, j)] * w)
                .sum();
        }
    }

    fn quad(&self) -> f64 {
        dot(&self.x, &self.sx).max(0.0)
    }

    fn smoothed(&self, q: f64) -> f64 {
        (q + SMOOTHING * SMOOTHING).sqrt()
    }

    fn value(&self) -> f64 {
        self.p.kappa * self.smoothed(self.quad()) - dot(self.p.mean.as_slice(), &self.x)
    }

    fn gradient(&self) -> Vec<f64> {
        let s = self.smoothed(self.quad());
        let k = self.p.kappa / s;
        self.sx
            .iter()
            .zip(self.p.mean.iter())
            .map(|(sx, mu)| k * sx - mu)
            .collect()
    }

    /// Exact line search along `e_to - e_from`, step in `[0, x_from]`.
    fn pairwise_step(&mut self, to: usize, from: usize) {
        let p = self.p;
        let cov = &p.cov;
        let max_step = self.x[from];
        let q0 = self.quad() + SMOOTHING * SMOOTHING;
        let b = self.sx[to] - self.sx[from];
        let a = (cov[(to, to)] + cov[(from, from)] - 2.0 * cov[(to, from)]).max(0.0);
        let m = p.mean[to] - p.mean[from];
        let slope = |t: f64| {
            let q = (q0 + 2.0 * b * t + a * t * t).max(SMOOTHING * SMOOTHING);
            p.kappa * (b + a * t) / q.sqrt() - m
        };

        let step = if slope(max_step) <= 0.0 {
            max_step
        } else {
            let (mut lo, mut hi) = (0.0, max_step);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if step <= 0.0 {
            return;
        }
        self.x[to] += step;
        if step >= max_step {
            self.x[from] = 0.0;
        } else {
            self.x[from] -= step;
        }
        for (i, slot) in self.sx.iter_mut().enumerate() {
            *slot += step * (cov[(i, to)] - cov[(i, from)]);
        }
    }

    /// Damped Newton step on the face spanned by the current support.
    /// Returns whether the iterate moved.
    fn newton_step(&mut self, grad: &[f64]) -> bool {
        let support: Vec<usize> = (0..self.x.len()).filter(|&j| self.x[j] > 0.0).collect();
        let k = support.len();
        if k < 2 {
            return false;
        }
        let p = self.p;
        let s = self.smoothed(self.quad());
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] =
                    p.kappa * (p.cov[(i, j)] / s - self.sx[i] * self.sx[j] / (s * s * s));
            }
            kkt[(a, k)] = 1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = -grad[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            return false;
        };
        let dir: Vec<f64> = sol.iter().take(k).copied().collect();
        if dir.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let descent: f64 = support.iter().zip(&dir).map(|(&j, d)| grad[j] * d).sum();
        if descent >= 0.0 {
            return false;
        }

        let mut max_step: f64 = 1.0;
        let mut blocking = None;
        for (&j, &d) in support.iter().zip(&dir) {
            if d < 0.0 && self.x[j] / -d < max_step {
                max_step = self.x[j] / -d;
                blocking = Some(j);
            }
        }
        let f0 = self.value();
        let mut step = max_step;
        for _ in 0..40 {
            let mut trial = self.x.clone();
            for (&j, &d) in support.iter().zip(&dir) {
                trial[j] = (trial[j] + step * d).max(0.0);
            }
            if step == max_step {
                if let Some(j) = blocking {
                    trial[j] = 0.0;
                }
            }
            let total: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|v| *v /= total);
            let saved = std::mem::replace(&mut self.x, trial);
            self.refresh();
            if self.value() <= f0 + 1e-4 * step * descent {
                return true;
            }
            self.x = saved;
            self.refresh();
            step *= 0.5;
        }
        false
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = j;
        }
    }
    best
}

/// Global minimizer of the smoothed objective over `{x >= 0, sum x = 1}`.
///
/// Returns `IterationLimit` with the best iterate and its gap when the
/// certificate is not reached within `max_iters` iterations.
pub fn solve_simplex_cone(p: &SimplexProblem) -> Result<Solution> {
    p.validate()?;
    let n = p.mean.len();

    // Start from the best vertex.
    let start = (0..n)
        .map(|j| State::vertex(p, j).value())
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc })
        .0;
    let mut state = State::vertex(p, start);

    let mut gap = f64::INFINITY;
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;
    while iterations < p.max_iters {
        let grad = state.gradient();
        let best = argmin(&grad);
        gap = dot(&grad, &state.x) - grad[best];
        if gap <= p.tol {
            status = SolveStatus::Optimal;
            break;
        }
        iterations += 1;
        if iterations % NEWTON_EVERY == 0 && state.newton_step(&grad) {
            continue;
        }
        let worst = (0..n)
            .filter(|&j| state.x[j] > 0.0)
            .fold(best, |acc, j| if grad[j] > grad[acc] { j } else { acc });
        state.pairwise_step(best, worst);
        if iterations % 64 == 0 {
            state.refresh();
        }
    }

    let mut x = state.x;
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    let value = p.objective(&x);
    Ok(Solution {
        point: x,
        value,
        status,
        iterations,
        kkt_residual: gap.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn problem(kappa: f64, cov: DMatrix<f64>, mean: DVector<f64>) -> SimplexProblem {
        SimplexProblem::new(kappa, cov, mean).unwrap()
    }

    #[test]
    fn single_asset_closed_form() {
        let kappa = 19f64.sqrt();
        let sol = solve_simplex_cone(&problem(kappa, dmatrix![1e-4], dvector![0.001])).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.point, vec![1.0]);
        assert!((sol.value - (kappa * 0.01 - 0.001)).abs() < 1e-12);
        assert!((sol.value - 0.042_588_989_4).abs() < 1e-9);
    }

    #[test]
    fn symmetric_pair_closed_form() {
        let (sigma, rho, mu, kappa) = (0.02, 0.3, 0.0007, 3.0);
        let c = rho * sigma * sigma;
        let p = problem(
            kappa,
            dmatrix![sigma * sigma, c; c, sigma * sigma],
            dvector![mu, mu],
        );
        let sol = solve_simplex_cone(&p).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.point[0] - 0.5).abs() < 1e-6);
        let want = kappa * sigma * ((1.0 + rho) / 2.0).sqrt() - mu;
        assert!((sol.value - want).abs() < 1e-9);
    }

    #[test]
    fn zero_covariance_picks_max_mean_vertex() {
        let p = problem(2.0, DMatrix::zeros(3, 3), dvector![0.001, 0.003, 0.002]);
        let sol = solve_simplex_cone(&p).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.point, vec![0.0, 1.0, 0.0]);
        assert!((sol.value + 0.003).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SimplexProblem::new(0.0, dmatrix![1.0], dvector![0.0]).is_err());
        assert!(SimplexProblem::new(1.0, dmatrix![-1.0], dvector![0.0]).is_err());
        assert!(SimplexProblem::new(1.0, dmatrix![1.0], dvector![0.0, 1.0]).is_err());
    }

    #[test]
    fn iteration_limit_keeps_feasible_iterate() {
        let mut p = problem(
            1.0,
            dmatrix![1.0, 0.2, 0.0; 0.2, 2.0, 0.1; 0.0, 0.1, 1.5],
            dvector![0.1, 0.2, 0.15],
        );
        p.max_iters = 1;
        let sol = solve_simplex_cone(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::IterationLimit);
        assert!((sol.point.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sol.point.iter().all(|v| *v >= 0.0));
        assert!(sol.kkt_residual > p.tol);
    }

    #[test]
    fn translation_shifts_value() {
        let cov = dmatrix![4e-4, 1e-4, 0.0; 1e-4, 2e-4, -5e-5; 0.0, -5e-5, 3e-4];
        let mean = dvector![0.001, 0.0004, 0.0008];
        let a = solve_simplex_cone(&problem(2.5, cov.clone(), mean.clone())).unwrap();
        let shift = 0.003;
        let b = solve_simplex_cone(&problem(2.5, cov, mean.add_scalar(shift))).unwrap();
        assert!((b.value - (a.value - shift)).abs() < 1e-9);
        for (u, v) in a.point.iter().zip(&b.point) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}
