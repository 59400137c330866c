//! Coherence-transfer criterion kernels.
//!
//! The kernel compares the checkpoint populations of each output state with
//! the best prediction of an incoherent process, which can only act on the
//! diagonal through a column-stochastic transfer matrix `T`:
//!
//! ```text
//! Q = min_T  sum_k sum_i | P_k(i) - sum_n w_k(n) T(i, n) |
//! ```
//!
//! This is solved exactly as a linear program. The temporal kernel reuses the
//! same program, and the triangle kernel minimizes over the classical
//! mixture model with a grid-seeded multi-start Nelder-Mead search.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::triangle::{triangle_classical_distribution, TriangularClassicalModel};
use crate::networks::ScenarioData;
use crate::optimizer::{
    simplex_solve, to_standard_form, AbsSumProblem, AffineExpr, LinearEquality, SolveStatus,
    StandardForm,
};

/// A kernel above this value certifies coherence transfer.
pub const CERT_THRESHOLD: f64 = 1e-6;
/// Pivot budget for the kernel programs.
pub const MAX_SIMPLEX_ITERS: usize = 100_000;
/// Column-sum tolerance of a transfer matrix.
const COLUMN_TOL: f64 = 1e-9;

/// Column-stochastic matrix; `t[i][n]` is the probability of moving from
/// basis state `n` to `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTransferMatrix {
    t: Vec<Vec<f64>>,
}

impl PopulationTransferMatrix {
    pub fn new(t: Vec<Vec<f64>>) -> Result<Self> {
        let d = t.len();
        if d == 0 || t.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidData("transfer matrix must be square and nonempty".into()));
        }
        if t.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidData("transfer matrix has a negative entry".into()));
        }
        for n in 0..d {
            let s: f64 = t.iter().map(|row| row[n]).sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(Error::InvalidData(format!("column {n} sums to {s}")));
            }
        }
        Ok(Self { t })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            t: (0..d)
                .map(|i| (0..d).map(|n| if i == n { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Builds a matrix from an LP solution in row-major order, clearing
    /// round-off below zero and renormalizing columns.
    fn from_solution(d: usize, x: &[f64]) -> Result<Self> {
        let mut t: Vec<Vec<f64>> = x[..d * d].chunks(d).map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect();
        for n in 0..d {
            let s: f64 = t.iter().map(|row| row[n]).sum();
            for row in &mut t {
                row[n] /= s;
            }
        }
        Self::new(t)
    }

    pub fn d(&self) -> usize {
        self.t.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.t
    }

    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.t[i][n]
    }

    /// `T w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.t.iter().map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    /// Kernel value, clamped at zero; NaN unless the solve was optimal.
    pub q_value: f64,
    /// Best transfer matrix; present only for optimal solves.
    pub minimizer: Option<PopulationTransferMatrix>,
    pub solver_status: SolveStatus,
    pub iterations: usize,
}

impl KernelResult {
    pub fn is_optimal(&self) -> bool {
        self.solver_status == SolveStatus::Optimal
    }

    /// True when the kernel is certified positive.
    pub fn certifies_transfer(&self) -> bool {
        self.is_optimal() && self.q_value > CERT_THRESHOLD
    }
}

/// Kernel objective of a given transfer matrix.
pub fn kernel_objective(targets: &[Vec<f64>], weights: &[Vec<f64>], t: &PopulationTransferMatrix) -> f64 {
    targets
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            t.apply(w)
                .iter()
                .zip(p)
                .map(|(pred, obs)| (obs - pred).abs())
                .sum::<f64>()
        })
        .sum()
}

fn validate_pair(targets: &[Vec<f64>], weights: &[Vec<f64>]) -> Result<(usize, usize)> {
    // ScenarioData::new checks shapes and normalization of both sets
    let data = ScenarioData::new(weights.to_vec(), targets.to_vec(), "kernel input")?;
    Ok((data.d(), data.n()))
}

fn kernel_program(targets: &[Vec<f64>], weights: &[Vec<f64>]) -> Result<StandardForm> {
    let (d, _) = validate_pair(targets, weights)?;
    let var = |i: usize, n: usize| i * d + n;
    let equalities = (0..d)
        .map(|n| LinearEquality {
            terms: (0..d).map(|i| (var(i, n), 1.0)).collect(),
            rhs: 1.0,
        })
        .collect();
    let mut abs_terms = Vec::new();
    for (p, w) in targets.iter().zip(weights) {
        for i in 0..d {
            let terms = (0..d)
                .filter(|&n| w[n] != 0.0)
                .map(|n| (var(i, n), -w[n]))
                .collect();
            abs_terms.push(AffineExpr::new(terms, p[i]));
        }
    }
    to_standard_form(&AbsSumProblem {
        n_vars: d * d,
        abs_terms,
        equalities,
        upper_bounds: vec![None; d * d],
    })
}

/// Standard-form program of the kernel. The first `d^2` variables hold the
/// transfer matrix in row-major order, followed by one epigraph variable per
/// absolute-value term and two surplus variables per term.
pub fn build_kernel_lp(data: &ScenarioData) -> Result<StandardForm> {
    kernel_program(data.checkpoint_populations(), data.diag_populations())
}

fn solve_kernel(targets: &[Vec<f64>], weights: &[Vec<f64>]) -> Result<KernelResult> {
    let (d, _) = validate_pair(targets, weights)?;
    let program = kernel_program(targets, weights)?;
    let sol = simplex_solve(&program.lp, MAX_SIMPLEX_ITERS);
    if sol.status != SolveStatus::Optimal {
        return Ok(KernelResult {
            q_value: f64::NAN,
            minimizer: None,
            solver_status: sol.status,
            iterations: sol.iterations,
        });
    }
    let minimizer = PopulationTransferMatrix::from_solution(d, program.original(&sol.x))?;
    Ok(KernelResult {
        q_value: sol.objective.max(0.0),
        minimizer: Some(minimizer),
        solver_status: SolveStatus::Optimal,
        iterations: sol.iterations,
    })
}

/// Coherence-transfer kernel of a scenario.
pub fn criterion_q(data: &ScenarioData) -> Result<KernelResult> {
    solve_kernel(data.checkpoint_populations(), data.diag_populations())
}

/// Temporal kernel: populations at time `t` against the diagonals at `t0`.
pub fn temporal_q(populations_t: &[Vec<f64>], diag_t0: &[Vec<f64>]) -> Result<KernelResult> {
    solve_kernel(populations_t, diag_t0)
}

/// Best classical fit found by [`triangle_q`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleFit {
    pub value: f64,
    pub model: TriangularClassicalModel,
    /// Index of the start that produced the incumbent (grid starts first).
    pub start_index: usize,
}

fn clamp_params(x: &[f64]) -> [f64; 7] {
    std::array::from_fn(|i| x[i].clamp(0.0, 1.0))
}

fn triangle_cost(p: &[f64; 8], x: &[f64]) -> f64 {
    let model = TriangularClassicalModel::from_params(&clamp_params(x)).expect("clamped");
    let q = triangle_classical_distribution(&model);
    p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum()
}

struct TriangleCost<'a> {
    p: &'a [f64; 8],
}

impl CostFunction for TriangleCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(triangle_cost(self.p, x))
    }
}

fn nelder_mead(p: &[f64; 8], start: [f64; 7]) -> (f64, [f64; 7]) {
    let mut simplex = vec![start.to_vec()];
    for i in 0..7 {
        let mut v = start.to_vec();
        // step inward so every vertex stays in the cube
        v[i] += if v[i] > 0.5 { -0.1 } else { 0.1 };
        simplex.push(v);
    }
    let fallback = (triangle_cost(p, &start), start);
    let solver = match NelderMead::new(simplex).with_sd_tolerance(1e-13) {
        Ok(s) => s,
        Err(_) => return fallback,
    };
    let run = Executor::new(TriangleCost { p }, solver)
        .configure(|s| s.max_iters(3000))
        .run();
    match run {
        Ok(res) => match res.state.best_param {
            Some(x) => {
                let x = clamp_params(&x);
                let v = triangle_cost(p, &x);
                if v <= fallback.0 {
                    (v, x)
                } else {
                    fallback
                }
            }
            None => fallback,
        },
        Err(_) => fallback,
    }
}

/// Minimum over the classical triangle model of the L1 distance to
/// `p_quantum`. Starts from a 5^3 grid over `(gamma, p, q)` with symmetric
/// marginals and from `restarts` random points; each restart draws from its
/// own ChaCha stream so the result does not depend on the thread count.
pub fn triangle_q(p_quantum: &[f64; 8], restarts: usize, seed: u64) -> Result<TriangleFit> {
    let total: f64 = p_quantum.iter().sum();
    if p_quantum.iter().any(|x| !x.is_finite() || *x < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidData("p_quantum is not a probability distribution".into()));
    }
    let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut starts: Vec<[f64; 7]> = Vec::with_capacity(125 + restarts);
    for &g in &levels {
        for &a in &levels {
            for &b in &levels {
                starts.push([g, a, a, a, b, b, b]);
            }
        }
    }
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        starts.push(std::array::from_fn(|_| rng.gen::<f64>()));
    }
    let (value, params, start_index) = starts
        .par_iter()
        .enumerate()
        .map(|(idx, &s)| {
            let (v, x) = nelder_mead(p_quantum, s);
            (v, x, idx)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)))
        .expect("at least the grid starts");
    Ok(TriangleFit {
        value,
        model: TriangularClassicalModel::from_params(&params)?,
        start_index,
    })
}

/// Uniformly random column-stochastic matrix (each column Dirichlet(1)).
pub fn random_stochastic<R: Rng>(d: usize, rng: &mut R) -> PopulationTransferMatrix {
    let mut t = vec![vec![0.0; d]; d];
    for n in 0..d {
        let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        for i in 0..d {
            t[i][n] = e[i] / s;
        }
    }
    PopulationTransferMatrix { t }
}

const SAMPLE_CHUNK: usize = 1024;

/// Monte-Carlo upper bound on the kernel: the smallest objective over
/// `trials` random transfer matrices.
pub fn sample_incapable_bound(data: &ScenarioData, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let targets = data.checkpoint_populations();
    let weights = data.diag_populations();
    let chunks = trials.div_ceil(SAMPLE_CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = SAMPLE_CHUNK.min(trials - c * SAMPLE_CHUNK);
            (0..count)
                .map(|_| kernel_objective(targets, weights, &random_stochastic(data.d(), &mut rng)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}
