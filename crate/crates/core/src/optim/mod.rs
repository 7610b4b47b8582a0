//! Numerical engines: a simplex-constrained solver for the
//! `kappa * sqrt(x'Sx) - mu'x` objective and a dense linear-programming
//! solver.

mod cone;
mod lp;

pub use cone::{solve_simplex_cone, SimplexProblem, SMOOTHING};
pub use lp::{solve_lp, solve_lp_with, LinearProgram, LpOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::IterationLimit => "iteration limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub point: Vec<f64>,
    pub value: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Optimality certificate: the Frank-Wolfe gap for the cone solver, the
    /// largest of primal violation, dual violation and relative duality gap
    /// for the LP solver.
    pub kkt_residual: f64,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
