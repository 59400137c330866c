//! End-to-end simulations of the photonic networks: one-qubit and two-qubit
//! coherence transfer over four- and six-photon networks, the GHZ backbone
//! created by PBS fusion, and the triangular network distributions.
//!
//! Photons are numbered from 1 in documentation and from 0 in code. Pair `j`
//! occupies photons `2j+1, 2j+2` and is prepared in a Werner state of the
//! singlet with visibility `pair_visibilities[j]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{
    bell_state, bsm_detection_operator, checkpoint_unitary, fusion_operator, hwp, noisy_pair,
    polarizer, BellLabel, BellOutcome, BsmConfig, BsmFamily, WaveplateSetting, XOutcome,
};
use crate::qcore::{
    apply_operator, embed, kron, partial_trace, populations, ComplexMatrix, DensityMatrix,
};

pub mod triangle;

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkSize {
    N4,
    N6,
}

impl NetworkSize {
    pub fn photons(self) -> usize {
        match self {
            NetworkSize::N4 => 4,
            NetworkSize::N6 => 6,
        }
    }

    pub fn pairs(self) -> usize {
        self.photons() / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoQubitVariant {
    Capable,
    Control,
}

/// Population data of one transfer experiment: for each prepared input `k`,
/// the output populations in the laboratory basis and after the checkpoint
/// operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioData {
    d: usize,
    n: usize,
    diag_populations: Vec<Vec<f64>>,
    checkpoint_populations: Vec<Vec<f64>>,
    metadata: String,
}

fn check_distribution(v: &[f64], d: usize, what: &str) -> Result<()> {
    if v.len() != d {
        return Err(Error::InvalidData(format!(
            "{what} has length {} but d = {d}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidData(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidData(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

impl ScenarioData {
    pub fn new(
        diag_populations: Vec<Vec<f64>>,
        checkpoint_populations: Vec<Vec<f64>>,
        metadata: impl Into<String>,
    ) -> Result<Self> {
        let n = diag_populations.len();
        if n == 0 {
            return Err(Error::InvalidData("scenario needs at least one input".into()));
        }
        if checkpoint_populations.len() != n {
            return Err(Error::InvalidData(format!(
                "{n} diagonal vectors but {} checkpoint vectors",
                checkpoint_populations.len()
            )));
        }
        let d = diag_populations[0].len();
        if d < 2 {
            return Err(Error::InvalidData(format!("dimension {d} is below 2")));
        }
        for k in 0..n {
            check_distribution(&diag_populations[k], d, &format!("diag_populations[{k}]"))?;
            check_distribution(
                &checkpoint_populations[k],
                d,
                &format!("checkpoint_populations[{k}]"),
            )?;
        }
        Ok(Self {
            d,
            n,
            diag_populations,
            checkpoint_populations,
            metadata: metadata.into(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag_populations(&self) -> &[Vec<f64>] {
        &self.diag_populations
    }

    pub fn checkpoint_populations(&self) -> &[Vec<f64>] {
        &self.checkpoint_populations
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    /// Applies the basis relabeling `i -> perm[i]` to every stored vector.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.d];
        if perm.len() != self.d || perm.iter().any(|&p| p >= self.d || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidData("relabeling is not a permutation".into()));
        }
        let apply = |v: &Vec<f64>| {
            let mut out = vec![0.0; v.len()];
            for (i, &x) in v.iter().enumerate() {
                out[perm[i]] = x;
            }
            out
        };
        Self::new(
            self.diag_populations.iter().map(apply).collect(),
            self.checkpoint_populations.iter().map(apply).collect(),
            self.metadata.clone(),
        )
    }
}

/// Output states of a simulated network together with the population data.
#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub data: ScenarioData,
    /// Normalized output state for each input `k`.
    pub outputs: Vec<DensityMatrix>,
    /// Probability of the heralding events for each input `k`.
    pub success_probabilities: Vec<f64>,
}

/// Multi-qubit register evolved by local operations and post-selection.
struct Register {
    rho: DensityMatrix,
    n: usize,
}

impl Register {
    fn from_pairs(visibilities: &[f64]) -> Result<Self> {
        let mut rho = noisy_pair(visibilities[0])?;
        for &v in &visibilities[1..] {
            rho = rho.tensor(&noisy_pair(v)?);
        }
        Ok(Self {
            rho,
            n: 2 * visibilities.len(),
        })
    }

    fn apply(&mut self, op: &ComplexMatrix, targets: &[usize]) -> Result<()> {
        self.rho = apply_operator(&embed(op, targets, self.n)?, &self.rho)?;
        Ok(())
    }

    /// Sum over Kraus branches; each branch is `(operator, targets)`.
    fn apply_branches(&mut self, branches: &[(ComplexMatrix, [usize; 2])]) -> Result<()> {
        let mut acc = ComplexMatrix::zeros(self.rho.dim(), self.rho.dim());
        for (op, targets) in branches {
            let out = apply_operator(&embed(op, targets, self.n)?, &self.rho)?;
            acc = &acc + out.matrix();
        }
        self.rho = DensityMatrix::subnormalized(acc)?;
        Ok(())
    }

    fn probability(&self) -> f64 {
        self.rho.trace()
    }

    fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(&self.rho, &vec![2; self.n], keep)
    }
}

fn check_visibilities(size: NetworkSize, v: &[f64]) -> Result<()> {
    if v.len() != size.pairs() {
        return Err(Error::InvalidConfig(format!(
            "{size:?} uses {} pairs but {} visibilities were given",
            size.pairs(),
            v.len()
        )));
    }
    for &x in v {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange {
                name: "pair visibility",
                value: x,
                range: "[0, 1]",
            });
        }
    }
    Ok(())
}

/// PBS fusion of `a` and `b` followed by X measurements of both photons with
/// the given outcomes.
fn fuse_and_measure(
    reg: &mut Register,
    a: usize,
    b: usize,
    outcomes: (XOutcome, XOutcome),
) -> Result<()> {
    let proj = kron(&outcomes.0.projector(), &outcomes.1.projector());
    reg.apply(&(&proj * &fusion_operator()), &[a, b])
}

/// Sign parity of a fusion-transfer branch: 1 when both X outcomes agree,
/// 0 otherwise. The transferred state is
/// `[[r11, (-1)^k r10], [(-1)^k r01, r00]]`.
pub fn branch_parity(outcomes: (XOutcome, XOutcome)) -> u8 {
    u8::from(outcomes.0 == outcomes.1)
}

/// Closed-form output of one fusion transfer of `rho` through a singlet pair:
/// populations swapped and coherences conjugated with sign `(-1)^parity`.
pub fn fusion_transfer_closed_form(rho: &DensityMatrix, parity: u8) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "fusion_transfer_closed_form",
            expected: 2,
            found: rho.dim(),
        });
    }
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    let m = ComplexMatrix::from_rows(&[
        &[rho.get(1, 1), rho.get(1, 0) * sign],
        &[rho.get(0, 1) * sign, rho.get(0, 0)],
    ]);
    DensityMatrix::new(m)
}

/// Transfers a single-qubit state through the network's fusion units.
///
/// For `N4` the state enters on photon 1 and exits on photon 4; for `N6` it
/// enters on photon 5, passes fusion (5,2) and then (1,3), exiting on photon
/// 4. `branches` holds one X-outcome pair per fusion unit.
pub fn transfer_one_qubit(
    input: &DensityMatrix,
    size: NetworkSize,
    visibilities: &[f64],
    branches: &[(XOutcome, XOutcome)],
) -> Result<(DensityMatrix, f64)> {
    if input.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "transfer_one_qubit input",
            expected: 2,
            found: input.dim(),
        });
    }
    let fusions = size.pairs() - 1;
    if visibilities.len() != fusions {
        return Err(Error::InvalidConfig(format!(
            "{size:?} transfer uses {fusions} relay pairs but {} visibilities were given",
            visibilities.len()
        )));
    }
    check_branches(branches, fusions)?;
    // register: input qubit, then relay pairs (1,2)(3,4) shifted by one
    let pairs = Register::from_pairs(visibilities)?;
    let mut reg = Register {
        rho: input.tensor(&pairs.rho),
        n: 1 + pairs.n,
    };
    let out = match size {
        NetworkSize::N4 => {
            // input=0, pair (3,4) -> 1,2
            fuse_and_measure(&mut reg, 0, 1, branches[0])?;
            2
        }
        NetworkSize::N6 => {
            // input=0, pair (1,2) -> 1,2, pair (3,4) -> 3,4
            fuse_and_measure(&mut reg, 0, 2, branches[0])?;
            fuse_and_measure(&mut reg, 1, 3, branches[1])?;
            4
        }
    };
    let p = reg.probability();
    Ok((reg.reduce(&[out])?.renormalized()?, p))
}

fn check_branches(branches: &[(XOutcome, XOutcome)], fusions: usize) -> Result<()> {
    if branches.len() != fusions {
        return Err(Error::InvalidConfig(format!(
            "expected {fusions} X-outcome branches, got {}",
            branches.len()
        )));
    }
    Ok(())
}

/// Parameters of a one-qubit transfer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneQubitSpec {
    pub size: NetworkSize,
    pub rsp: WaveplateSetting,
    pub checkpoint: WaveplateSetting,
    pub pair_visibilities: Vec<f64>,
    /// X-outcome pair conditioned on at each fusion unit.
    pub branches: Vec<(XOutcome, XOutcome)>,
}

impl OneQubitSpec {
    /// Ideal-branch run description (`|+>|+>` at every fusion) from indexed
    /// waveplate settings.
    pub fn indexed(
        size: NetworkSize,
        rsp_setting: usize,
        checkpoint_setting: usize,
        pair_visibilities: Vec<f64>,
    ) -> Result<Self> {
        Ok(Self {
            size,
            rsp: WaveplateSetting::indexed(rsp_setting)?,
            checkpoint: WaveplateSetting::indexed(checkpoint_setting)?,
            pair_visibilities,
            branches: vec![(XOutcome::Plus, XOutcome::Plus); size.pairs() - 1],
        })
    }
}

/// Simulates the one-qubit transfer experiment from the entangled sources.
///
/// Alice applies `U^dagger` of the RSP setting to her photon and measures Z.
/// The singlet anticorrelation leaves Bob's photon in `U|k>` where `k` is the
/// complement of Alice's result; runs are indexed by this `k`.
pub fn simulate_one_qubit(spec: &OneQubitSpec) -> Result<NetworkRun> {
    let size = spec.size;
    check_visibilities(size, &spec.pair_visibilities)?;
    check_branches(&spec.branches, size.pairs() - 1)?;
    let u_rsp = checkpoint_unitary(&spec.rsp);
    let u_check = checkpoint_unitary(&spec.checkpoint);
    // (alice photon, fusion units, output photon)
    let (alice, fusions, out): (usize, Vec<(usize, usize)>, usize) = match size {
        NetworkSize::N4 => (1, vec![(0, 2)], 3),
        NetworkSize::N6 => (5, vec![(4, 1), (0, 2)], 3),
    };

    let mut outputs = Vec::with_capacity(2);
    let mut probs = Vec::with_capacity(2);
    let mut diag = Vec::with_capacity(2);
    let mut check = Vec::with_capacity(2);
    for k in 0..2 {
        let mut reg = Register::from_pairs(&spec.pair_visibilities)?;
        let alice_result = 1 - k;
        let z_proj = ComplexMatrix::diag_real(if alice_result == 0 { &[1.0, 0.0] } else { &[0.0, 1.0] });
        reg.apply(&(&z_proj * &u_rsp.adjoint()), &[alice])?;
        for (&(a, b), &branch) in fusions.iter().zip(&spec.branches) {
            fuse_and_measure(&mut reg, a, b, branch)?;
        }
        probs.push(reg.probability());
        let rho = reg.reduce(&[out])?.renormalized()?;
        diag.push(populations(&rho)?);
        check.push(populations(&apply_operator(&u_check, &rho)?)?);
        outputs.push(rho);
    }
    let metadata = format!(
        "one-qubit {size:?} rsp=(qwp {}, hwp {}) checkpoint=(qwp {}, hwp {}) visibilities={:?}",
        spec.rsp.qwp_angle,
        spec.rsp.hwp_angle,
        spec.checkpoint.qwp_angle,
        spec.checkpoint.hwp_angle,
        spec.pair_visibilities
    );
    Ok(NetworkRun {
        data: ScenarioData::new(diag, check, metadata)?,
        outputs,
        success_probabilities: probs,
    })
}

/// One-qubit transfer with indexed settings, conditioned on `|+>` outcomes.
pub fn run_one_qubit(
    size: NetworkSize,
    rsp_setting: usize,
    checkpoint_setting: usize,
    pair_visibilities: &[f64],
) -> Result<ScenarioData> {
    let spec = OneQubitSpec::indexed(size, rsp_setting, checkpoint_setting, pair_visibilities.to_vec())?;
    Ok(simulate_one_qubit(&spec)?.data)
}

/// Relay measurement of the six-photon swapping chain.
pub const RELAY_BSM: BsmConfig = BsmConfig {
    family: BsmFamily::PsiFamily,
    outcome: BellOutcome::Minus,
};

/// Polarizer angles (degrees) that project a Bell label onto its product
/// control state.
pub fn control_polarizers(label: BellLabel) -> (f64, f64) {
    match label {
        BellLabel::PsiPlus => (90.0, 0.0),
        BellLabel::PsiMinus => (0.0, 90.0),
        BellLabel::PhiPlus => (0.0, 0.0),
        BellLabel::PhiMinus => (90.0, 90.0),
    }
}

fn bsm_branches(config: BsmConfig, a: usize, b: usize) -> Vec<(ComplexMatrix, [usize; 2])> {
    config
        .patterns()
        .iter()
        .map(|&p| (bsm_detection_operator(config.family, p), [a, b]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitSpec {
    pub size: NetworkSize,
    pub variant: TwoQubitVariant,
    pub checkpoint: WaveplateSetting,
    pub pair_visibilities: Vec<f64>,
}

/// Simulates entanglement swapping onto the output photon pair for each
/// Bell label in the order psi+, psi-, phi+, phi-.
///
/// `N4`: BSM on photons (1,3), output (2,4). `N6`: BSM on (5,2) heralds the
/// label, a fixed psi- relay BSM on (1,3) completes the chain, output (4,6).
pub fn simulate_two_qubit(spec: &TwoQubitSpec) -> Result<NetworkRun> {
    let size = spec.size;
    check_visibilities(size, &spec.pair_visibilities)?;
    let u = checkpoint_unitary(&spec.checkpoint);
    let u2 = kron(&u, &u);

    let mut outputs = Vec::with_capacity(4);
    let mut probs = Vec::with_capacity(4);
    let mut diag = Vec::with_capacity(4);
    let mut check = Vec::with_capacity(4);
    for label in BellLabel::ALL {
        let config = BsmConfig::for_label(label);
        let mut reg = Register::from_pairs(&spec.pair_visibilities)?;
        let out: [usize; 2] = match size {
            NetworkSize::N4 => {
                reg.apply_branches(&bsm_branches(config, 0, 2))?;
                [1, 3]
            }
            NetworkSize::N6 => {
                reg.apply_branches(&bsm_branches(config, 4, 1))?;
                reg.apply_branches(&bsm_branches(RELAY_BSM, 0, 2))?;
                [3, 5]
            }
        };
        if spec.variant == TwoQubitVariant::Control {
            let (a, b) = control_polarizers(label);
            reg.apply(&kron(&polarizer(a), &polarizer(b)), &out)?;
        }
        probs.push(reg.probability());
        let rho = reg.reduce(&out)?.renormalized()?;
        diag.push(populations(&rho)?);
        check.push(populations(&apply_operator(&u2, &rho)?)?);
        outputs.push(rho);
    }
    let metadata = format!(
        "two-qubit {size:?} {:?} checkpoint=(qwp {}, hwp {}) visibilities={:?}",
        spec.variant, spec.checkpoint.qwp_angle, spec.checkpoint.hwp_angle, spec.pair_visibilities
    );
    Ok(NetworkRun {
        data: ScenarioData::new(diag, check, metadata)?,
        outputs,
        success_probabilities: probs,
    })
}

pub fn run_two_qubit(
    size: NetworkSize,
    variant: TwoQubitVariant,
    checkpoint_setting: usize,
    pair_visibilities: &[f64],
) -> Result<ScenarioData> {
    let spec = TwoQubitSpec {
        size,
        variant,
        checkpoint: WaveplateSetting::indexed(checkpoint_setting)?,
        pair_visibilities: pair_visibilities.to_vec(),
    };
    Ok(simulate_two_qubit(&spec)?.data)
}

/// Multi-photon state produced by the fusion units without X measurements.
///
/// `N4`: fusion (1,3) of two singlets gives `(|HVHV> + |VHVH>)/sqrt 2`.
/// `N6`: a further fusion (2,5) with the third singlet, and a Z correction
/// (HWP at 0 degrees) on photon 6, gives `(|HVHVVH> + |VHVHHV>)/sqrt 2` up to a
/// global phase. Returns the normalized state and the fusion success
/// probability.
pub fn ghz_backbone(size: NetworkSize, pair_visibilities: &[f64]) -> Result<(DensityMatrix, f64)> {
    check_visibilities(size, pair_visibilities)?;
    let mut reg = Register::from_pairs(pair_visibilities)?;
    reg.apply(&fusion_operator(), &[0, 2])?;
    if size == NetworkSize::N6 {
        reg.apply(&fusion_operator(), &[1, 4])?;
        reg.apply(&hwp(0.0), &[5])?;
    }
    let p = reg.probability();
    Ok((reg.rho.renormalized()?, p))
}

/// Ideal Bell output density matrix for a label.
pub fn bell_density(label: BellLabel) -> DensityMatrix {
    bell_state(label)
        .to_density()
        .expect("Bell states are normalized")
}
