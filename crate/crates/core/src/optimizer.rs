//! Dense two-phase primal simplex for standard-form linear programs
//!
//! ```text
//! minimize  c.x   subject to  A x = b,  x >= 0
//! ```
//!
//! Pivoting follows Bland's rule (lowest entering index, lowest basic index on
//! ratio ties), so the solver terminates on degenerate problems and is fully
//! deterministic. The kernel programs built by [`crate::capability`] have at
//! most a few hundred variables, well inside what a dense tableau handles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest pivot accepted, relative to the largest entry of its column.
pub const PIVOT_TOL: f64 = 1e-9;
/// Primal feasibility tolerance (phase-1 optimum and reduced-cost sign).
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    cost: Vec<f64>,
    eq_matrix: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>, eq_matrix: Vec<Vec<f64>>, eq_rhs: Vec<f64>) -> Result<Self> {
        if eq_matrix.len() != eq_rhs.len() {
            return Err(Error::DimensionMismatch {
                context: "LinearProgram rows",
                expected: eq_rhs.len(),
                found: eq_matrix.len(),
            });
        }
        if let Some(row) = eq_matrix.iter().find(|row| row.len() != cost.len()) {
            return Err(Error::DimensionMismatch {
                context: "LinearProgram columns",
                expected: cost.len(),
                found: row.len(),
            });
        }
        let finite = cost.iter().chain(&eq_rhs).all(|x| x.is_finite())
            && eq_matrix.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("LinearProgram"));
        }
        Ok(Self {
            cost,
            eq_matrix,
            eq_rhs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn eq_matrix(&self) -> &[Vec<f64>] {
        &self.eq_matrix
    }

    pub fn eq_rhs(&self) -> &[f64] {
        &self.eq_rhs
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of `A x = b` and `x >= 0`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        let neg = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        eq.max(neg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// `c.x` of the returned point; infinite when no feasible point is known.
    pub objective: f64,
    /// Primal point; empty when no feasible point is known.
    pub x: Vec<f64>,
    /// Phase-2 reduced costs of the structural variables at termination.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    /// m rows of width `width + 1`; the last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// reduced-cost row (same width); last entry holds minus the objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    /// Sign-normalized original rows `[A | I | b]`, used to refactor.
    original: Vec<Vec<f64>>,
    /// Cost of the current phase over all `width` columns.
    cost: Vec<f64>,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= p;
        }
        self.rows[pr][pc] = 1.0;
        let pivot_row = self.rows[pr].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr {
                continue;
            }
            let f = row[pc];
            if f != 0.0 {
                for j in 0..=w {
                    row[j] -= f * pivot_row[j];
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for j in 0..=w {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn price(&mut self) {
        let w = self.width;
        let mut obj = self.cost.clone();
        obj.push(0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = self.cost[b];
            if cb != 0.0 {
                for j in 0..=w {
                    obj[j] -= cb * row[j];
                }
            }
        }
        for &b in &self.basis {
            obj[b] = 0.0;
        }
        self.obj = obj;
    }

    /// Rebuilds the tableau for the current basis directly from the original
    /// rows (Gauss-Jordan with partial pivoting), discarding accumulated
    /// round-off. Leaves the tableau untouched if the basis is numerically
    /// singular.
    fn refactor(&mut self) {
        let m = self.original.len();
        let w = self.width;
        let mut rows = self.original.clone();
        let mut order = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for &col in &self.basis {
            let Some(pr) = (0..m)
                .filter(|&r| !used[r])
                .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
            else {
                return;
            };
            if rows[pr][col].abs() < 1e-12 {
                return;
            }
            used[pr] = true;
            order[pr] = col;
            let p = rows[pr][col];
            for v in rows[pr].iter_mut() {
                *v /= p;
            }
            let pivot_row = rows[pr].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != pr && row[col] != 0.0 {
                    let f = row[col];
                    for j in 0..=w {
                        row[j] -= f * pivot_row[j];
                    }
                    row[col] = 0.0;
                }
            }
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row[order[r]] = 1.0;
            for &b in &self.basis {
                if b != order[r] {
                    row[b] = 0.0;
                }
            }
        }
        self.rows = rows;
        self.basis = order;
        self.price();
    }

    /// Bland's-rule iterations over columns `0..allowed`. Pivot elements must
    /// exceed `PIVOT_TOL` relative to the largest entry of the column. The
    /// tableau is refactored periodically and before optimality is declared.
    fn run(&mut self, allowed: usize, iters: &mut usize, max_iters: usize) -> PivotOutcome {
        let mut since_refactor = 0;
        loop {
            if since_refactor >= REFACTOR_INTERVAL {
                self.refactor();
                since_refactor = 0;
            }
            let entering = (0..allowed).find(|&j| self.obj[j] < -FEAS_TOL);
            let Some(pc) = entering else {
                if since_refactor > 0 {
                    self.refactor();
                    since_refactor = 0;
                    continue;
                }
                return PivotOutcome::Optimal;
            };
            if *iters >= max_iters {
                return PivotOutcome::IterationLimit;
            }
            let col_max = self.rows.iter().map(|r| r[pc].abs()).fold(1.0, f64::max);
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][pc];
                if a > PIVOT_TOL * col_max {
                    let ratio = self.rhs(r).max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = best else {
                return PivotOutcome::Unbounded;
            };
            self.pivot(pr, pc);
            *iters += 1;
            since_refactor += 1;
        }
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs(r).max(0.0);
            }
        }
        x
    }
}

/// Pivots between refactorizations of the tableau.
const REFACTOR_INTERVAL: usize = 25;

/// Two-phase primal simplex with Bland's rule.
///
/// Artificial variables stay in the tableau; after phase 1 they are driven
/// out where possible and barred from re-entering, so a basic artificial at
/// zero marks a redundant row.
pub fn simplex_solve(lp: &LinearProgram, max_iters: usize) -> Solution {
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let width = n + m;

    let mut rows = Vec::with_capacity(m);
    for (r, (a, &b)) in lp.eq_matrix.iter().zip(&lp.eq_rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for (j, &v) in a.iter().enumerate() {
            row[j] = sign * v;
        }
        row[n + r] = 1.0;
        row[width] = sign * b;
        rows.push(row);
    }
    // phase 1: minimize the sum of artificials
    let mut cost = vec![0.0; width];
    for c in &mut cost[n..] {
        *c = 1.0;
    }
    let mut tab = Tableau {
        original: rows.clone(),
        rows,
        obj: Vec::new(),
        basis: (n..n + m).collect(),
        width,
        cost,
    };
    tab.price();

    let mut iters = 0;
    match tab.run(n, &mut iters, max_iters) {
        PivotOutcome::IterationLimit => {
            return Solution {
                status: SolveStatus::IterationLimit,
                objective: f64::INFINITY,
                x: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: iters,
            }
        }
        // phase 1 is bounded below by zero
        PivotOutcome::Unbounded | PivotOutcome::Optimal => {}
    }
    let infeasibility = -tab.obj[width];
    if infeasibility > FEAS_TOL {
        return Solution {
            status: SolveStatus::Infeasible,
            objective: f64::INFINITY,
            x: Vec::new(),
            reduced_costs: Vec::new(),
            iterations: iters,
        };
    }

    // drive artificials out on the largest available entry
    for r in 0..tab.rows.len() {
        if tab.basis[r] >= n {
            let best = (0..n)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&a, &b| tab.rows[r][a].abs().total_cmp(&tab.rows[r][b].abs()));
            if let Some(pc) = best {
                if tab.rows[r][pc].abs() > 1e-9 {
                    tab.pivot(r, pc);
                }
            }
        }
    }

    // phase 2
    tab.cost = lp.cost.iter().copied().chain(std::iter::repeat(0.0).take(m)).collect();
    tab.refactor();
    tab.price();

    let outcome = tab.run(n, &mut iters, max_iters);
    let x = tab.primal(n);
    let status = match outcome {
        PivotOutcome::Optimal => SolveStatus::Optimal,
        PivotOutcome::Unbounded => SolveStatus::Unbounded,
        PivotOutcome::IterationLimit => SolveStatus::IterationLimit,
    };
    let objective = if status == SolveStatus::Unbounded {
        f64::NEG_INFINITY
    } else {
        lp.objective(&x)
    };
    Solution {
        status,
        objective,
        x,
        reduced_costs: tab.obj[..n].to_vec(),
        iterations: iters,
    }
}

/// Sparse affine expression `sum_j coef_j x_j + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        Self { terms, constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

/// `sum_j coef_j x_j = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Minimize `sum |expr_t(x)|` over `0 <= x_j <= upper_j` subject to equalities.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsSumProblem {
    pub n_vars: usize,
    pub abs_terms: Vec<AffineExpr>,
    pub equalities: Vec<LinearEquality>,
    /// One entry per variable; `None` leaves the variable unbounded above.
    pub upper_bounds: Vec<Option<f64>>,
}

/// Standard-form program together with its column layout:
/// `[x | s (one per |term|) | surplus+ | surplus- | bound slacks]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub lp: LinearProgram,
    pub n_original: usize,
    pub n_abs: usize,
}

impl StandardForm {
    pub fn original<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.n_original]
    }

    pub fn epigraph<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.n_original..self.n_original + self.n_abs]
    }
}

/// Epigraph reformulation: each `|e(x)|` becomes a slack `s` with
/// `s - e(x) - u = 0` and `s + e(x) - v = 0`, `u, v >= 0`; the objective is
/// `sum s`. Upper bounds become `x_j + w_j = ub_j`.
pub fn to_standard_form(problem: &AbsSumProblem) -> Result<StandardForm> {
    let n = problem.n_vars;
    if problem.upper_bounds.len() != n {
        return Err(Error::DimensionMismatch {
            context: "to_standard_form bounds",
            expected: n,
            found: problem.upper_bounds.len(),
        });
    }
    let check_terms = |terms: &[(usize, f64)]| -> Result<()> {
        match terms.iter().find(|&&(j, _)| j >= n) {
            Some(&(j, _)) => Err(Error::DimensionMismatch {
                context: "to_standard_form variable index",
                expected: n,
                found: j,
            }),
            None => Ok(()),
        }
    };
    for t in &problem.abs_terms {
        check_terms(&t.terms)?;
    }
    for e in &problem.equalities {
        check_terms(&e.terms)?;
    }

    let m_abs = problem.abs_terms.len();
    let bounded: Vec<(usize, f64)> = problem
        .upper_bounds
        .iter()
        .enumerate()
        .filter_map(|(j, ub)| ub.map(|u| (j, u)))
        .collect();
    let s0 = n;
    let u0 = s0 + m_abs;
    let v0 = u0 + m_abs;
    let w0 = v0 + m_abs;
    let total = w0 + bounded.len();

    let mut cost = vec![0.0; total];
    for c in &mut cost[s0..s0 + m_abs] {
        *c = 1.0;
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for e in &problem.equalities {
        let mut row = vec![0.0; total];
        for &(j, coef) in &e.terms {
            row[j] += coef;
        }
        a.push(row);
        b.push(e.rhs);
    }
    for (t, expr) in problem.abs_terms.iter().enumerate() {
        // s - (a.x + c) - u = 0  =>  s - a.x - u = c
        let mut row = vec![0.0; total];
        row[s0 + t] = 1.0;
        row[u0 + t] = -1.0;
        for &(j, coef) in &expr.terms {
            row[j] -= coef;
        }
        a.push(row);
        b.push(expr.constant);
        // s + (a.x + c) - v = 0  =>  s + a.x - v = -c
        let mut row = vec![0.0; total];
        row[s0 + t] = 1.0;
        row[v0 + t] = -1.0;
        for &(j, coef) in &expr.terms {
            row[j] += coef;
        }
        a.push(row);
        b.push(-expr.constant);
    }
    for (k, &(j, ub)) in bounded.iter().enumerate() {
        let mut row = vec![0.0; total];
        row[j] = 1.0;
        row[w0 + k] = 1.0;
        a.push(row);
        b.push(ub);
    }
    Ok(StandardForm {
        lp: LinearProgram::new(cost, a, b)?,
        n_original: n,
        n_abs: m_abs,
    })
}

/// Brute-force optimum by enumerating every basic feasible solution.
///
/// Independent of the simplex path: dependent rows are removed by Gaussian
/// elimination, then every choice of `rank` columns is solved directly.
/// Returns `None` when no feasible vertex exists. Exponential; only meant for
/// small programs (the self-test uses at most 12 variables).
pub fn enumerate_vertices(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let (a, b) = independent_rows(lp)?;
    let m = a.len();
    if m == 0 {
        let x = vec![0.0; n];
        return Some((lp.objective(&x), x));
    }
    if m > n {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut cols: Vec<usize> = (0..m).collect();
    loop {
        let sub: Vec<Vec<f64>> = a
            .iter()
            .map(|row| cols.iter().map(|&j| row[j]).collect())
            .collect();
        if let Some(xb) = solve_square(sub, b.clone()) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let mut x = vec![0.0; n];
                for (&j, &v) in cols.iter().zip(&xb) {
                    x[j] = v.max(0.0);
                }
                let obj = lp.objective(&x);
                if best.as_ref().is_none_or(|(bo, _)| obj < *bo) {
                    best = Some((obj, x));
                }
            }
        }
        // next combination in lexicographic order
        let mut i = m;
        while i > 0 && cols[i - 1] == i - 1 + n - m {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        cols[i - 1] += 1;
        for k in i..m {
            cols[k] = cols[k - 1] + 1;
        }
    }
}

/// Keeps a maximal set of independent rows of `[A | b]`; `None` if the system
/// is inconsistent.
fn independent_rows(lp: &LinearProgram) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = lp.num_vars();
    let mut aug: Vec<Vec<f64>> = lp
        .eq_matrix
        .iter()
        .zip(&lp.eq_rhs)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let mut keep = Vec::new();
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for (idx, row) in aug.iter_mut().enumerate() {
        for (p, basis_row) in pivots.iter().zip(&reduced) {
            let f = row[*p];
            if f != 0.0 {
                for j in 0..=n {
                    row[j] -= f * basis_row[j];
                }
            }
        }
        let scale = row[..n].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        match (0..n).max_by(|&i, &j| row[i].abs().total_cmp(&row[j].abs())) {
            Some(p) if row[p].abs() > 1e-9 * scale.max(1.0) => {
                let pv = row[p];
                let normalized: Vec<f64> = row.iter().map(|v| v / pv).collect();
                // eliminate from earlier reduced rows to keep the basis reduced
                for br in reduced.iter_mut() {
                    let f = br[p];
                    if f != 0.0 {
                        for j in 0..=n {
                            br[j] -= f * normalized[j];
                        }
                    }
                }
                reduced.push(normalized);
                pivots.push(p);
                keep.push(idx);
            }
            _ => {
                if row[n].abs() > 1e-9 {
                    return None;
                }
            }
        }
    }
    let a = keep.iter().map(|&i| lp.eq_matrix[i].clone()).collect();
    let b = keep.iter().map(|&i| lp.eq_rhs[i]).collect();
    Some((a, b))
}

/// Gaussian elimination with partial pivoting; `None` if (near) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let p = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for j in col..m {
                    a[r][j] -= f * a[col][j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Random feasible, bounded program for solver self-tests.
///
/// `n_vars - 1` structural variables take small integer coefficients around
/// a nonnegative integer point (so degenerate vertices are common); the last
/// variable is the slack of a budget row `sum x + s = 10` that keeps the
/// feasible set bounded.
pub fn random_feasible_lp<R: Rng + ?Sized>(rng: &mut R, n_vars: usize, n_rows: usize) -> LinearProgram {
    assert!(n_vars >= 2, "need at least one structural variable and the slack");
    let n = n_vars - 1;
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=2) as f64 / n as f64).collect();
    let mut a = Vec::with_capacity(n_rows + 1);
    let mut b = Vec::with_capacity(n_rows + 1);
    for _ in 0..n_rows {
        let mut row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
        b.push(row.iter().zip(&x0).map(|(r, x)| r * x).sum());
        row.push(0.0);
        a.push(row);
    }
    a.push(vec![1.0; n_vars]);
    b.push(10.0);
    let cost = (0..n_vars)
        .map(|j| if j == n { 0.0 } else { rng.gen_range(-5..=5) as f64 })
        .collect();
    LinearProgram::new(cost, a, b).expect("consistent shapes")
}
