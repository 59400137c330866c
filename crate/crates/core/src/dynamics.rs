//! Lindblad master equations, fixed-step RK4 integration, and the
//! `(t0, tau)` sweep of the temporal kernel for the double-quantum-dot
//! transport model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::temporal_q;
use crate::error::{Error, Result};
use crate::optimizer::SolveStatus;
use crate::qcore::{c, populations, ComplexMatrix, DensityMatrix};

const HAMILTONIAN_TOL: f64 = 1e-12;
/// Allowed trace drift per unit time.
const TRACE_DRIFT_PER_TIME: f64 = 1e-8;
const HERMITICITY_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = -1e-7;
/// Times closer than this are treated as the same snapshot.
const TIME_TOL: f64 = 1e-9;

/// `d rho/dt = -i[H, rho] + sum_a rate_a (L_a rho L_a^dagger - {L_a^dagger L_a, rho}/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    jumps: Vec<(ComplexMatrix, f64)>,
}

impl LindbladModel {
    pub fn new(hamiltonian: ComplexMatrix, jumps: Vec<(ComplexMatrix, f64)>) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::NotSquare(hamiltonian.rows(), hamiltonian.cols()));
        }
        let defect = hamiltonian.hermiticity_defect();
        if defect > HAMILTONIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let dim = hamiltonian.rows();
        for (op, rate) in &jumps {
            if op.rows() != dim || op.cols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "jump operator",
                    expected: dim,
                    found: op.rows(),
                });
            }
            if !(rate.is_finite() && *rate >= 0.0) {
                return Err(Error::OutOfRange {
                    name: "jump rate",
                    value: *rate,
                    range: "[0, inf)",
                });
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[(ComplexMatrix, f64)] {
        &self.jumps
    }
}

/// Double quantum dot in the basis `|0>, |L>, |R>` (indices 0, 1, 2):
/// `H = delta (|L><R| + |R><L|)`, loading `|L><0|` at `gamma_l` and
/// unloading `|0><R|` at `gamma_r`.
pub fn dqd_model(gamma_l: f64, gamma_r: f64, delta: f64) -> Result<LindbladModel> {
    for (name, v) in [("gamma_l", gamma_l), ("gamma_r", gamma_r)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                range: "[0, inf)",
            });
        }
    }
    if !delta.is_finite() {
        return Err(Error::NonFinite("delta"));
    }
    let unit = |r: usize, col: usize| {
        let mut m = ComplexMatrix::zeros(3, 3);
        m[(r, col)] = c(1.0, 0.0);
        m
    };
    let mut h = ComplexMatrix::zeros(3, 3);
    h[(1, 2)] = c(delta, 0.0);
    h[(2, 1)] = c(delta, 0.0);
    LindbladModel::new(h, vec![(unit(1, 0), gamma_l), (unit(0, 2), gamma_r)])
}

/// Generator applied to a state.
pub fn lindblad_derivative(model: &LindbladModel, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    derivative(model, rho.matrix())
}

fn derivative(model: &LindbladModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.rows() != model.dim() || rho.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            context: "lindblad_derivative",
            expected: model.dim(),
            found: rho.rows(),
        });
    }
    let mut out = model.hamiltonian.commutator(rho)?.scale(c(0.0, -1.0));
    for (l, rate) in &model.jumps {
        if *rate == 0.0 {
            continue;
        }
        let ld = l.adjoint();
        let sandwich = &(l * rho) * &ld;
        let anti = (&ld * l).anticommutator(rho)?;
        let term = &sandwich - &anti.scale_real(0.5);
        out = &out + &term.scale_real(*rate);
    }
    Ok(out)
}

fn rk4_step(model: &LindbladModel, rho: &ComplexMatrix, h: f64) -> Result<ComplexMatrix> {
    let k1 = derivative(model, rho)?;
    let k2 = derivative(model, &(rho + &k1.scale_real(h / 2.0)))?;
    let k3 = derivative(model, &(rho + &k2.scale_real(h / 2.0)))?;
    let k4 = derivative(model, &(rho + &k3.scale_real(h)))?;
    let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
    Ok(rho + &incr.scale_real(h / 6.0))
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::OutOfRange {
            name: "dt",
            value: dt,
            range: "(0, inf)",
        });
    }
    Ok(())
}

/// Integrates `rho` over `duration` with `ceil(duration/dt)` equal steps.
fn integrate(model: &LindbladModel, rho: ComplexMatrix, duration: f64, dt: f64) -> Result<ComplexMatrix> {
    if duration <= 0.0 {
        return Ok(rho);
    }
    let steps = (duration / dt - TIME_TOL).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let mut rho = rho;
    for _ in 0..steps {
        rho = rk4_step(model, &rho, h)?;
    }
    Ok(rho)
}

/// Verifies the state invariants after integrating up to `time`.
fn certify(rho: ComplexMatrix, initial_trace: f64, time: f64) -> Result<DensityMatrix> {
    let trace = rho.trace();
    let drift = (trace.re - initial_trace).abs() + trace.im.abs();
    if drift > TRACE_DRIFT_PER_TIME * time.max(1.0) {
        return Err(Error::Integration {
            time,
            detail: format!("trace drift {drift:e}"),
        });
    }
    let herm = rho.hermiticity_defect();
    if herm > HERMITICITY_TOL {
        return Err(Error::Integration {
            time,
            detail: format!("Hermiticity defect {herm:e}"),
        });
    }
    let min_eig = rho.min_eigenvalue()?;
    if min_eig < POSITIVITY_TOL {
        return Err(Error::Integration {
            time,
            detail: format!("minimum eigenvalue {min_eig:e}"),
        });
    }
    Ok(DensityMatrix::new_unchecked(rho, false))
}

/// State at time `t` by fixed-step RK4.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, t: f64, dt: f64) -> Result<DensityMatrix> {
    check_step(dt)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: "[0, inf)",
        });
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            context: "evolve",
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    let rho = integrate(model, rho0.matrix().clone(), t, dt)?;
    certify(rho, rho0.trace(), t)
}

/// Snapshots at the ascending `times`, integrating once from 0.
pub fn trajectory(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    check_step(dt)?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("trajectory times must be ascending and nonnegative".into()));
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            context: "trajectory",
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    let mut out = Vec::with_capacity(times.len());
    let mut current = rho0.matrix().clone();
    let mut now = 0.0;
    for &t in times {
        current = integrate(model, current, t - now, dt)?;
        now = t;
        out.push(certify(current.clone(), rho0.trace(), t)?);
    }
    Ok(out)
}

/// Populations at `t` and at `t0` for every initial state.
pub type PopulationPair = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Evolves each initial state to `t0` and `t >= t0` and returns
/// `(populations at t, populations at t0)`.
pub fn temporal_scenario(
    model: &LindbladModel,
    initial_states: &[DensityMatrix],
    t0: f64,
    t: f64,
    dt: f64,
) -> Result<PopulationPair> {
    if !(t0 >= 0.0 && t >= t0) {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= t0 <= t, got t0 = {t0}, t = {t}"
        )));
    }
    if initial_states.is_empty() {
        return Err(Error::InvalidConfig("no initial states".into()));
    }
    let mut at_t = Vec::with_capacity(initial_states.len());
    let mut at_t0 = Vec::with_capacity(initial_states.len());
    for rho in initial_states {
        let snaps = trajectory(model, rho, &[t0, t], dt)?;
        at_t0.push(populations(&snaps[0])?);
        at_t.push(populations(&snaps[1])?);
    }
    Ok((at_t, at_t0))
}

/// Basis-state initial conditions `|0><0|, |L><L|, |R><R|`.
pub fn basis_initial_states(dim: usize) -> Vec<DensityMatrix> {
    (0..dim).map(|k| DensityMatrix::basis(dim, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    t0_values: Vec<f64>,
    tau_values: Vec<f64>,
    dt: f64,
}

fn min_spacing(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

impl SweepGrid {
    pub fn new(t0_values: Vec<f64>, tau_values: Vec<f64>, dt: f64) -> Result<Self> {
        check_step(dt)?;
        for (name, v) in [("t0_values", &t0_values), ("tau_values", &tau_values)] {
            if v.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} is empty")));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and nonnegative")));
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig(format!("{name} must be strictly ascending")));
            }
        }
        let spacing = min_spacing(&t0_values).min(min_spacing(&tau_values));
        if spacing.is_finite() && dt > spacing / 10.0 + 1e-15 {
            return Err(Error::InvalidConfig(format!(
                "dt = {dt} exceeds a tenth of the grid spacing {spacing}"
            )));
        }
        Ok(Self {
            t0_values,
            tau_values,
            dt,
        })
    }

    /// `points` equally spaced values on `[0, t_max]` for both axes.
    pub fn uniform(t_max: f64, points: usize, dt: f64) -> Result<Self> {
        if points < 2 || !(t_max > 0.0) {
            return Err(Error::InvalidConfig("uniform grid needs t_max > 0 and at least 2 points".into()));
        }
        let axis: Vec<f64> = (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect();
        Self::new(axis.clone(), axis, dt)
    }

    /// 121 x 121 points on `[0, 6]^2` with `dt = 1e-3`.
    pub fn default_dqd() -> Self {
        Self::uniform(6.0, 121, 1e-3).expect("valid default grid")
    }

    pub fn t0_values(&self) -> &[f64] {
        &self.t0_values
    }

    pub fn tau_values(&self) -> &[f64] {
        &self.tau_values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Kernel values over a grid; `q[row][col]` belongs to `(t0_values[row],
/// tau_values[col])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub t0_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl SweepResult {
    pub fn max(&self) -> f64 {
        self.q.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Size of the largest 4-connected set of cells whose value exceeds
    /// `threshold`.
    pub fn largest_region(&self, threshold: f64) -> usize {
        let rows = self.q.len();
        let cols = self.q.first().map_or(0, Vec::len);
        let mut seen = vec![vec![false; cols]; rows];
        let mut best = 0;
        for r0 in 0..rows {
            for c0 in 0..cols {
                if seen[r0][c0] || self.q[r0][c0] <= threshold {
                    continue;
                }
                let mut size = 0;
                let mut stack = vec![(r0, c0)];
                seen[r0][c0] = true;
                while let Some((r, col)) = stack.pop() {
                    size += 1;
                    let neighbors = [
                        (r.wrapping_sub(1), col),
                        (r + 1, col),
                        (r, col.wrapping_sub(1)),
                        (r, col + 1),
                    ];
                    for (nr, nc) in neighbors {
                        if nr < rows && nc < cols && !seen[nr][nc] && self.q[nr][nc] > threshold {
                            seen[nr][nc] = true;
                            stack.push((nr, nc));
                        }
                    }
                }
                best = best.max(size);
            }
        }
        best
    }
}

fn sorted_union(times: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut all: Vec<f64> = times.collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|b, a| (*b - *a).abs() < TIME_TOL);
    all
}

fn lookup(times: &[f64], t: f64) -> usize {
    times.partition_point(|&x| x < t - TIME_TOL)
}

/// Temporal kernel at every `(t0, tau)` of the grid.
///
/// Each initial state is integrated once through the sorted union of all
/// required times; the cells are then evaluated in parallel and collected in
/// row-major order.
pub fn qt_sweep(model: &LindbladModel, initial_states: &[DensityMatrix], grid: &SweepGrid) -> Result<SweepResult> {
    if initial_states.is_empty() {
        return Err(Error::InvalidConfig("no initial states".into()));
    }
    let times = sorted_union(
        grid.t0_values
            .iter()
            .flat_map(|&t0| std::iter::once(t0).chain(grid.tau_values.iter().map(move |&tau| t0 + tau))),
    );
    let pops: Vec<Vec<Vec<f64>>> = initial_states
        .par_iter()
        .map(|rho| {
            trajectory(model, rho, &times, grid.dt)?
                .iter()
                .map(populations)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let cols = grid.tau_values.len();
    let cells: Vec<(usize, usize)> = (0..grid.t0_values.len())
        .flat_map(|r| (0..cols).map(move |col| (r, col)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(r, col)| {
            let t0 = grid.t0_values[r];
            let i0 = lookup(&times, t0);
            let i1 = lookup(&times, t0 + grid.tau_values[col]);
            let diag_t0: Vec<Vec<f64>> = pops.iter().map(|p| p[i0].clone()).collect();
            let at_t: Vec<Vec<f64>> = pops.iter().map(|p| p[i1].clone()).collect();
            let res = temporal_q(&at_t, &diag_t0)?;
            if res.solver_status != SolveStatus::Optimal {
                return Err(Error::Solver {
                    context: format!("temporal kernel at t0 = {t0}, tau = {}", grid.tau_values[col]),
                    status: format!("{:?}", res.solver_status),
                });
            }
            Ok(res.q_value)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        t0_values: grid.t0_values.clone(),
        tau_values: grid.tau_values.clone(),
        q: values.chunks(cols).map(<[f64]>::to_vec).collect(),
    })
}

/// Empirical convergence order of RK4 from three runs at steps `h`, `h/2`,
/// `h/4`: `log2(|x_h - x_{h/2}| / |x_{h/2} - x_{h/4}|)`.
pub fn rk4_convergence_order(model: &LindbladModel, rho0: &DensityMatrix, t: f64, h: f64) -> Result<f64> {
    let run = |step: f64| integrate(model, rho0.matrix().clone(), t, step);
    let a = run(h)?;
    let b = run(h / 2.0)?;
    let c4 = run(h / 4.0)?;
    let e1 = a.max_abs_diff(&b);
    let e2 = b.max_abs_diff(&c4);
    if e2 == 0.0 {
        return Err(Error::InvalidData("differences vanished; step too small to measure order".into()));
    }
    Ok((e1 / e2).log2())
}
