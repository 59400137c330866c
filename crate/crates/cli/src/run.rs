//! Dispatches a validated config to the library and collects the results.

use coherence_transfer::capability::{
    criterion_q, sample_incapable_bound, triangle_q, KernelResult, TriangleFit,
};
use coherence_transfer::dynamics::{basis_initial_states, dqd_model, qt_sweep, SweepGrid, SweepResult};
use coherence_transfer::networks::triangle::{
    triangle_classical_distribution, triangle_quantum_distribution,
    triangle_quantum_distribution_simulated,
};
use coherence_transfer::networks::{
    simulate_one_qubit, simulate_two_qubit, NetworkSize, OneQubitSpec, ScenarioData, TwoQubitSpec,
    TwoQubitVariant,
};
use coherence_transfer::optics::{WaveplateSetting, XOutcome};
use coherence_transfer::optimizer::{enumerate_vertices, random_feasible_lp, simplex_solve, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, Scenario, Variant, Waveplates};
use crate::error::{CliError, CliResult};

/// Where a result came from.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub data: ScenarioData,
    pub kernel: KernelResult,
    pub certified: bool,
    /// Monte-Carlo upper bound on the kernel, when requested.
    pub oracle_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleResult {
    pub p_quantum: [f64; 8],
    pub p_quantum_simulated: [f64; 8],
    pub fit: TriangleFit,
    pub p_classical: [f64; 8],
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub sweep: SweepResult,
    pub max_q: f64,
    /// Cells in the largest connected region with `Q_t > 1e-3`.
    pub largest_region: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpCase {
    pub n_vars: usize,
    pub n_rows: usize,
    pub simplex: f64,
    pub enumeration: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSelftestResult {
    pub cases: Vec<LpCase>,
    pub max_abs_diff: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Scenario(ScenarioResult),
    Triangle(TriangleResult),
    Sweep(SweepSummary),
    LpSelftest(LpSelftestResult),
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub outcome: Outcome,
    pub provenance: Provenance,
}

/// Tolerance of the LP self-test against vertex enumeration.
pub const LP_SELFTEST_TOL: f64 = 1e-8;
/// Region threshold reported for sweeps.
pub const REGION_THRESHOLD: f64 = 1e-3;

fn core(context: &str) -> impl Fn(coherence_transfer::Error) -> CliError + '_ {
    move |e| CliError::from_core(context, e)
}

fn size(network: u8) -> NetworkSize {
    if network == 6 {
        NetworkSize::N6
    } else {
        NetworkSize::N4
    }
}

fn setting(index: Option<usize>, plates: Option<Waveplates>) -> CliResult<WaveplateSetting> {
    match (index, plates) {
        (Some(i), _) => WaveplateSetting::indexed(i).map_err(core("setting")),
        (None, Some(w)) => WaveplateSetting::new(w.qwp, w.hwp).map_err(core("waveplates")),
        (None, None) => Err(CliError::Validation("missing waveplate setting".into())),
    }
}

fn branch(s: &str) -> XOutcome {
    if s == "-" {
        XOutcome::Minus
    } else {
        XOutcome::Plus
    }
}

fn kernel(data: ScenarioData, oracle_trials: usize, seed: Option<u64>) -> CliResult<ScenarioResult> {
    let kernel = criterion_q(&data).map_err(core("criterion kernel"))?;
    if !kernel.is_optimal() {
        return Err(CliError::Solver(format!(
            "criterion kernel ended with status {:?}",
            kernel.solver_status
        )));
    }
    let oracle_bound = if oracle_trials > 0 {
        let seed = seed.ok_or_else(|| CliError::Validation("seed is required for the sampling oracle".into()))?;
        Some(sample_incapable_bound(&data, oracle_trials, seed).map_err(core("sampling oracle"))?)
    } else {
        None
    };
    Ok(ScenarioResult {
        certified: kernel.certifies_transfer(),
        data,
        kernel,
        oracle_bound,
    })
}

fn require_seed(config: &RunConfig) -> CliResult<u64> {
    config
        .seed
        .ok_or_else(|| CliError::Validation(format!("seed is required for {}", config.scenario.name())))
}

/// Executes a validated config.
pub fn run(config: &RunConfig) -> CliResult<RunResult> {
    crate::config::validate(config)?;
    let outcome = match &config.scenario {
        Scenario::OneQubit(c) => {
            let size = size(c.network);
            let spec = OneQubitSpec {
                size,
                rsp: setting(c.rsp, c.rsp_waveplates)?,
                checkpoint: setting(c.checkpoint, c.checkpoint_waveplates)?,
                pair_visibilities: c.visibilities.clone().unwrap_or_else(|| vec![1.0; size.pairs()]),
                branches: match &c.branches {
                    Some(b) => b.iter().map(|[x, y]| (branch(x), branch(y))).collect(),
                    None => vec![(XOutcome::Plus, XOutcome::Plus); size.pairs() - 1],
                },
            };
            let sim = simulate_one_qubit(&spec).map_err(core("one-qubit scenario"))?;
            Outcome::Scenario(kernel(sim.data, c.oracle_trials, config.seed)?)
        }
        Scenario::TwoQubit(c) => {
            let size = size(c.network);
            let spec = TwoQubitSpec {
                size,
                variant: match c.variant {
                    Variant::Capable => TwoQubitVariant::Capable,
                    Variant::Control => TwoQubitVariant::Control,
                },
                checkpoint: setting(c.checkpoint, c.checkpoint_waveplates)?,
                pair_visibilities: c.visibilities.clone().unwrap_or_else(|| vec![1.0; size.pairs()]),
            };
            let sim = simulate_two_qubit(&spec).map_err(core("two-qubit scenario"))?;
            Outcome::Scenario(kernel(sim.data, c.oracle_trials, config.seed)?)
        }
        Scenario::Triangle(c) => {
            let seed = require_seed(config)?;
            let p_quantum = triangle_quantum_distribution();
            let fit = triangle_q(&p_quantum, c.restarts, seed).map_err(core("triangle kernel"))?;
            Outcome::Triangle(TriangleResult {
                p_quantum,
                p_quantum_simulated: triangle_quantum_distribution_simulated(),
                p_classical: triangle_classical_distribution(&fit.model),
                fit,
            })
        }
        Scenario::Dqd(c) => {
            let model = dqd_model(c.gamma_l, c.gamma_r, c.delta).map_err(core("dqd model"))?;
            let grid = SweepGrid::uniform(c.t_max, c.points, c.dt).map_err(core("sweep grid"))?;
            let sweep = qt_sweep(&model, &basis_initial_states(3), &grid).map_err(core("temporal sweep"))?;
            Outcome::Sweep(SweepSummary {
                max_q: sweep.max(),
                largest_region: sweep.largest_region(REGION_THRESHOLD),
                sweep,
            })
        }
        Scenario::LpSelftest(c) => Outcome::LpSelftest(lp_selftest(c.instances, c.max_vars, require_seed(config)?)?),
    };
    Ok(RunResult {
        outcome,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            config: config.clone(),
        },
    })
}

/// Compares the simplex solver with vertex enumeration on random programs.
pub fn lp_selftest(instances: usize, max_vars: usize, seed: u64) -> CliResult<LpSelftestResult> {
    let mut cases = Vec::with_capacity(instances);
    let mut max_abs_diff: f64 = 0.0;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let n_vars = rng.gen_range(2..=max_vars);
        let n_rows = rng.gen_range(1..=(n_vars - 1).min(6));
        let lp = random_feasible_lp(&mut rng, n_vars, n_rows);
        let sol = simplex_solve(&lp, 10_000);
        if sol.status != SolveStatus::Optimal {
            return Err(CliError::Solver(format!("self-test instance {i} ended with status {:?}", sol.status)));
        }
        let (enumeration, _) = enumerate_vertices(&lp)
            .ok_or_else(|| CliError::Solver(format!("self-test instance {i} has no vertex")))?;
        max_abs_diff = max_abs_diff.max((sol.objective - enumeration).abs());
        cases.push(LpCase {
            n_vars,
            n_rows,
            simplex: sol.objective,
            enumeration,
        });
    }
    Ok(LpSelftestResult {
        cases,
        passed: max_abs_diff <= LP_SELFTEST_TOL,
        max_abs_diff,
    })
}
