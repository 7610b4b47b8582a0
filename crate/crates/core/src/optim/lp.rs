//! Dense two-phase primal simplex.
//!
//! Problems are stated as
//!
//! ```text
//! minimize c'z  subject to  A_eq z = b_eq,  A_in z <= b_in,  z >= lower
//! ```
//!
//! where a lower bound of `-inf` marks a free variable. Bounded variables are
//! shifted to `y = z - lower >= 0`, free variables are split into a
//! difference of two non-negative columns, and every row gets either a slack
//! or an artificial column forming the starting basis.
//!
//! Pricing is Dantzig's rule (most negative reduced cost, lowest index on
//! ties). After a run of degenerate pivots the solver switches to Bland's
//! rule until the objective moves again, which rules out cycling. Ratio-test
//! ties go to the lowest basic column index. The pivot sequence is a pure
//! function of the input, so results are reproducible bit for bit.

use nalgebra::DMatrix;

use super::{Solution, SolveStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_lhs: DMatrix<f64>,
    pub eq_rhs: Vec<f64>,
    /// Rows read `a'z <= b`.
    pub ineq_lhs: DMatrix<f64>,
    pub ineq_rhs: Vec<f64>,
    /// Per-variable lower bounds; `f64::NEG_INFINITY` for free variables.
    pub lower: Vec<f64>,
}

impl LinearProgram {
    /// `min c'z` over `z >= 0` with no other constraints yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_lhs: DMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ineq_lhs: DMatrix::zeros(0, n),
            ineq_rhs: Vec::new(),
            lower: vec![0.0; n],
        }
    }

    pub fn with_eq(mut self, lhs: DMatrix<f64>, rhs: Vec<f64>) -> Self {
        self.eq_lhs = lhs;
        self.eq_rhs = rhs;
        self
    }

    pub fn with_ineq(mut self, lhs: DMatrix<f64>, rhs: Vec<f64>) -> Self {
        self.ineq_lhs = lhs;
        self.ineq_rhs = rhs;
        self
    }

    pub fn with_lower(mut self, lower: Vec<f64>) -> Self {
        self.lower = lower;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let dims = [
            ("equality matrix columns", self.eq_lhs.ncols()),
            ("inequality matrix columns", self.ineq_lhs.ncols()),
            ("lower bounds", self.lower.len()),
        ];
        for (context, actual) in dims {
            if actual != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    actual,
                });
            }
        }
        if self.eq_rhs.len() != self.eq_lhs.nrows() {
            return Err(Error::DimensionMismatch {
                context: "equality right-hand side",
                expected: self.eq_lhs.nrows(),
                actual: self.eq_rhs.len(),
            });
        }
        if self.ineq_rhs.len() != self.ineq_lhs.nrows() {
            return Err(Error::DimensionMismatch {
                context: "inequality right-hand side",
                expected: self.ineq_lhs.nrows(),
                actual: self.ineq_rhs.len(),
            });
        }
        let finite = self
            .objective
            .iter()
            .chain(self.eq_lhs.iter())
            .chain(&self.eq_rhs)
            .chain(self.ineq_lhs.iter())
            .chain(&self.ineq_rhs)
            .all(|v| v.is_finite());
        if !finite || self.lower.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::Numerical("linear program has non-finite data".into()));
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `z`.
    pub fn violation(&self, z: &[f64]) -> f64 {
        let row = |lhs: &DMatrix<f64>, i: usize| -> f64 {
            lhs.row(i).iter().zip(z).map(|(a, v)| a * v).sum()
        };
        let ineq = (0..self.ineq_lhs.nrows())
            .map(|i| (row(&self.ineq_lhs, i) - self.ineq_rhs[i]).max(0.0));
        let eq = (0..self.eq_lhs.nrows()).map(|i| (row(&self.eq_lhs, i) - self.eq_rhs[i]).abs());
        let bounds = self.lower.iter().zip(z).map(|(l, v)| (l - v).max(0.0));
        ineq.chain(eq).chain(bounds).fold(0.0, f64::max)
    }

    pub fn value_at(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub max_iters: usize,
    /// Reduced-cost threshold for optimality.
    pub optimality_tol: f64,
    /// Smallest admissible pivot element.
    pub pivot_tol: f64,
    /// Phase-one objective above which the program is declared infeasible.
    pub feasibility_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            feasibility_tol: 1e-9,
            bland_after: 50,
        }
    }
}

/// Where an original variable lives in the standard-form column space.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    barred: Vec<bool>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn cols(&self) -> usize {
        self.width - 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let (head, tail) = self.data.split_at_mut(r * w);
        let (prow, rest) = tail.split_at_mut(w);
        let inv = 1.0 / prow[q];
        prow.iter_mut().for_each(|v| *v *= inv);
        prow[q] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&c| prow[c] != 0.0).collect();
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &c in &nz {
                    row[c] -= f * prow[c];
                }
                row[q] = 0.0;
            }
        };
        head.chunks_exact_mut(w).for_each(eliminate);
        rest.chunks_exact_mut(w).for_each(eliminate);
        eliminate(&mut self.obj);
        self.basis[r] = q;
    }

    fn entering(&self, bland: bool, tol: f64) -> Option<usize> {
        let candidates = (0..self.cols()).filter(|&c| !self.barred[c] && self.obj[c] < -tol);
        if bland {
            candidates.into_iter().next()
        } else {
            candidates.fold(None, |best: Option<usize>, c| match best {
                Some(b) if self.obj[b] <= self.obj[c] => Some(b),
                _ => Some(c),
            })
        }
    }

    /// Ratio test for entering column `q`; returns the row and step length.
    ///
    /// Harris two-pass rule: the first pass finds the largest step that keeps
    /// every basic variable above `-feas_tol`, the second picks, among rows
    /// whose exact ratio fits inside that step, the largest pivot element
    /// (lowest basic index on ties). Under Bland's rule the row is the
    /// exact minimum ratio with the lowest basic index.
    fn leaving(&self, q: usize, bland: bool, opts: &LpOptions) -> Option<(usize, f64)> {
        let col_max = (0..self.rows()).map(|r| self.at(r, q).abs()).fold(0.0, f64::max);
        let tol = opts.pivot_tol * col_max.max(1.0);
        let eligible = || (0..self.rows()).filter(move |&r| self.at(r, q) > tol);
        let ratio = |r: usize| self.rhs(r).max(0.0) / self.at(r, q);

        let chosen = if bland {
            let min = eligible().map(ratio).fold(f64::INFINITY, f64::min);
            eligible()
                .filter(|&r| ratio(r) <= min + 1e-12 * (1.0 + min))
                .min_by_key(|&r| self.basis[r])
        } else {
            let bound = eligible()
                .map(|r| (self.rhs(r).max(0.0) + opts.feasibility_tol) / self.at(r, q))
                .fold(f64::INFINITY, f64::min);
            eligible().filter(|&r| ratio(r) <= bound).fold(None, |best: Option<usize>, r| {
                match best {
                    Some(b) if self.at(b, q) > self.at(r, q)
                        || (self.at(b, q) == self.at(r, q) && self.basis[b] < self.basis[r]) =>
                    {
                        Some(b)
                    }
                    _ => Some(r),
                }
            })
        };
        chosen.map(|r| (r, ratio(r)))
    }

    /// Runs simplex iterations until optimal, unbounded or out of budget.
    ///
    /// Phase one is bounded below, so a column that fails the ratio test
    /// there only carries round-off; it is skipped until the next pivot.
    fn optimize(&mut self, opts: &LpOptions, phase_one: bool, iterations: &mut usize) -> SolveStatus {
        let mut degenerate_run = 0usize;
        let mut skipped: Vec<usize> = Vec::new();
        loop {
            let bland = degenerate_run >= opts.bland_after;
            let Some(q) = self.entering(bland, opts.optimality_tol) else {
                for c in skipped.drain(..) {
                    self.barred[c] = false;
                }
                return SolveStatus::Optimal;
            };
            let Some((r, step)) = self.leaving(q, bland, opts) else {
                if phase_one {
                    self.barred[q] = true;
                    skipped.push(q);
                    continue;
                }
                return SolveStatus::Unbounded;
            };
            for c in skipped.drain(..) {
                self.barred[c] = false;
            }
            if *iterations >= opts.max_iters {
                return SolveStatus::IterationLimit;
            }
            *iterations += 1;
            if step <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q);
        }
    }

    fn basic_values(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.cols()];
        for (r, &c) in self.basis.iter().enumerate() {
            y[c] = self.rhs(r).max(0.0);
        }
        y
    }
}

struct StandardForm {
    map: Vec<VarMap>,
    tableau: Tableau,
    costs: Vec<f64>,
    /// Initial identity column of each row and the sign applied to the row.
    identity: Vec<(usize, f64)>,
    artificial_start: usize,
}

fn standardize(lp: &LinearProgram) -> StandardForm {
    let n = lp.n_vars();
    let mut map = Vec::with_capacity(n);
    let mut ny = 0;
    for &l in &lp.lower {
        if l == f64::NEG_INFINITY {
            map.push(VarMap::Split { pos: ny, neg: ny + 1 });
            ny += 2;
        } else {
            map.push(VarMap::Shifted { col: ny, lower: l });
            ny += 1;
        }
    }

    let mi = lp.ineq_lhs.nrows();
    let me = lp.eq_lhs.nrows();
    let m = mi + me;
    // Row data in shifted y-space.
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::with_capacity(m);
    let mut push_row = |lhs: &DMatrix<f64>, i: usize, b: f64, is_ineq: bool| {
        let mut a = vec![0.0; ny];
        let mut rhs = b;
        for (j, vm) in map.iter().enumerate() {
            let v = lhs[(i, j)];
            match *vm {
                VarMap::Shifted { col, lower } => {
                    a[col] = v;
                    rhs -= v * lower;
                }
                VarMap::Split { pos, neg } => {
                    a[pos] = v;
                    a[neg] = -v;
                }
            }
        }
        rows.push((a, rhs, is_ineq));
    };
    for i in 0..mi {
        push_row(&lp.ineq_lhs, i, lp.ineq_rhs[i], true);
    }
    for i in 0..me {
        push_row(&lp.eq_lhs, i, lp.eq_rhs[i], false);
    }

    let n_art = rows.iter().filter(|(_, b, ineq)| !*ineq || *b < 0.0).count();
    let artificial_start = ny + mi;
    let cols = artificial_start + n_art;
    let width = cols + 1;
    let mut data = vec![0.0; m * width];
    let mut basis = Vec::with_capacity(m);
    let mut identity = Vec::with_capacity(m);
    let mut next_art = artificial_start;
    for (r, (a, b, is_ineq)) in rows.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        let row = &mut data[r * width..(r + 1) * width];
        for (slot, v) in row.iter_mut().zip(a) {
            *slot = sign * v;
        }
        row[cols] = sign * b;
        if *is_ineq {
            row[ny + r] = sign;
        }
        if *is_ineq && sign > 0.0 {
            basis.push(ny + r);
            identity.push((ny + r, sign));
        } else {
            row[next_art] = 1.0;
            basis.push(next_art);
            identity.push((next_art, sign));
            next_art += 1;
        }
    }

    let mut costs = vec![0.0; cols];
    for (j, vm) in map.iter().enumerate() {
        match *vm {
            VarMap::Shifted { col, .. } => costs[col] = lp.objective[j],
            VarMap::Split { pos, neg } => {
                costs[pos] = lp.objective[j];
                costs[neg] = -lp.objective[j];
            }
        }
    }

    StandardForm {
        map,
        tableau: Tableau {
            width,
            data,
            obj: vec![0.0; width],
            basis,
            barred: vec![false; cols],
        },
        costs,
        identity,
        artificial_start,
    }
}

impl StandardForm {
    fn set_phase_one_costs(&mut self) {
        let t = &mut self.tableau;
        t.obj.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..t.basis.len() {
            if t.basis[r] >= self.artificial_start {
                for c in 0..t.width {
                    if c < self.artificial_start || c == t.width - 1 {
                        t.obj[c] -= t.data[r * t.width + c];
                    }
                }
            }
        }
    }

    fn set_phase_two_costs(&mut self) {
        let t = &mut self.tableau;
        t.obj[..t.width - 1].copy_from_slice(&self.costs);
        t.obj[t.width - 1] = 0.0;
        for r in 0..t.basis.len() {
            let cb = self.costs[t.basis[r]];
            if cb != 0.0 {
                for c in 0..t.width {
                    t.obj[c] -= cb * t.data[r * t.width + c];
                }
            }
        }
        for c in self.artificial_start..t.cols() {
            t.barred[c] = true;
        }
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn drive_out_artificials(&mut self, pivot_tol: f64) {
        let t = &mut self.tableau;
        for r in 0..t.rows() {
            if t.basis[r] < self.artificial_start {
                continue;
            }
            let replacement = (0..self.artificial_start).find(|&c| t.at(r, c).abs() > pivot_tol);
            if let Some(c) = replacement {
                t.pivot(r, c);
            }
        }
    }

    fn original_point(&self, y: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|vm| match *vm {
                VarMap::Shifted { col, lower } => lower + y[col],
                VarMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }

    /// Row multipliers of the original constraints, sign convention
    /// `c - A'pi = reduced costs`.
    fn duals(&self) -> Vec<f64> {
        self.identity
            .iter()
            .map(|&(col, sign)| -self.tableau.obj[col] * sign)
            .collect()
    }
}

#[allow(clippy::needless_range_loop)]
fn kkt_residual(lp: &LinearProgram, z: &[f64], pi: &[f64]) -> f64 {
    let mi = lp.ineq_lhs.nrows();
    let primal = lp.violation(z);
    let mut dual: f64 = pi[..mi].iter().fold(0.0, |acc, p| acc.max(*p));
    let mut gap = 0.0;
    for i in 0..mi {
        let slack = lp.ineq_rhs[i] - lp.ineq_lhs.row(i).iter().zip(z).map(|(a, v)| a * v).sum::<f64>();
        gap += -pi[i] * slack;
    }
    for j in 0..lp.n_vars() {
        let mut reduced = lp.objective[j];
        for i in 0..mi {
            reduced -= pi[i] * lp.ineq_lhs[(i, j)];
        }
        for i in 0..lp.eq_lhs.nrows() {
            reduced -= pi[mi + i] * lp.eq_lhs[(i, j)];
        }
        if lp.lower[j] == f64::NEG_INFINITY {
            dual = dual.max(reduced.abs());
        } else {
            dual = dual.max(-reduced);
            gap += reduced * (z[j] - lp.lower[j]);
        }
    }
    let value = lp.value_at(z);
    primal.max(dual).max(gap.abs() / (1.0 + value.abs()))
}

pub fn solve_lp(lp: &LinearProgram) -> Result<Solution> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<Solution> {
    lp.validate()?;
    let mut sf = standardize(lp);
    let mut iterations = 0;

    let has_artificials = sf.artificial_start < sf.tableau.cols();
    if has_artificials {
        sf.set_phase_one_costs();
        let status = sf.tableau.optimize(opts, true, &mut iterations);
        let infeasibility = -sf.tableau.obj[sf.tableau.width - 1];
        let scale = 1.0 + lp.eq_rhs.iter().chain(&lp.ineq_rhs).fold(0.0f64, |a, b| a.max(b.abs()));
        if status == SolveStatus::IterationLimit || infeasibility > opts.feasibility_tol * scale {
            let z = sf.original_point(&sf.tableau.basic_values());
            let status = if status == SolveStatus::IterationLimit {
                SolveStatus::IterationLimit
            } else {
                SolveStatus::Infeasible
            };
            return Ok(Solution {
                value: lp.value_at(&z),
                kkt_residual: lp.violation(&z),
                point: z,
                status,
                iterations,
            });
        }
        sf.drive_out_artificials(opts.pivot_tol);
    }

    sf.set_phase_two_costs();
    let status = sf.tableau.optimize(opts, false, &mut iterations);
    let z = sf.original_point(&sf.tableau.basic_values());
    let kkt_residual = if status == SolveStatus::Optimal {
        kkt_residual(lp, &z, &sf.duals())
    } else {
        lp.violation(&z)
    };
    if status == SolveStatus::Optimal && kkt_residual > 1e-7 {
        log::warn!("lp solved with KKT residual {kkt_residual:e}");
    }
    Ok(Solution {
        value: lp.value_at(&z),
        point: z,
        status,
        iterations,
        kkt_residual,
    })
}
