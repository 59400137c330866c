//! Polarization optics: waveplates, polarizers, PBS fusion and Bell-state
//! measurement operators, entangled-state factories, and the fidelity and
//! witness estimators used to characterize the sources.
//!
//! Jones conventions (angles of the fast axis from horizontal):
//!
//! ```text
//! HWP(t) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
//! QWP(t) = e^{-i pi/4} [[cos^2 t + i sin^2 t, (1-i) sin t cos t],
//!                       [(1-i) sin t cos t,   sin^2 t + i cos^2 t]]
//! ```
//!
//! A waveplate set is traversed HWP first, then QWP: `U = QWP * HWP`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, kron, ComplexMatrix, DensityMatrix, PureState, I, ONE, ZERO};

/// Fast-axis angles (degrees) of the QWP and HWP in one analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSetting {
    pub qwp_angle: f64,
    pub hwp_angle: f64,
}

impl WaveplateSetting {
    pub fn new(qwp_angle: f64, hwp_angle: f64) -> Result<Self> {
        for (name, v) in [("qwp_angle", qwp_angle), ("hwp_angle", hwp_angle)] {
            if !(0.0..180.0).contains(&v) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, 180) degrees",
                });
            }
        }
        Ok(Self {
            qwp_angle,
            hwp_angle,
        })
    }

    /// The three analyzer settings used for the RSP inputs and the
    /// checkpoint: QWP at 45, 30 and 0 degrees with the HWP at 0 degrees
    /// (maximal, intermediate and no coherence creation).
    pub fn indexed(index: usize) -> Result<Self> {
        let qwp = match index {
            1 => 45.0,
            2 => 30.0,
            3 => 0.0,
            _ => {
                return Err(Error::OutOfRange {
                    name: "setting index",
                    value: index as f64,
                    range: "{1, 2, 3}",
                })
            }
        };
        Self::new(qwp, 0.0)
    }

    pub fn unitary(&self) -> ComplexMatrix {
        checkpoint_unitary(self)
    }
}

/// Half-wave plate Jones matrix.
pub fn hwp(theta_deg: f64) -> ComplexMatrix {
    let t = 2.0 * theta_deg.to_radians();
    let (s, co) = t.sin_cos();
    ComplexMatrix::from_real_rows(&[&[co, s], &[s, -co]])
}

/// Quarter-wave plate Jones matrix.
pub fn qwp(theta_deg: f64) -> ComplexMatrix {
    let t = theta_deg.to_radians();
    let (s, co) = t.sin_cos();
    let off = c(1.0, -1.0) * (s * co);
    let m = ComplexMatrix::from_rows(&[
        &[c(co * co, s * s), off],
        &[off, c(s * s, co * co)],
    ]);
    m.scale(c(0.0, -FRAC_PI_4).exp())
}

/// `QWP(q) * HWP(h)` for one analyzer.
pub fn checkpoint_unitary(setting: &WaveplateSetting) -> ComplexMatrix {
    &qwp(setting.qwp_angle) * &hwp(setting.hwp_angle)
}

/// Linear polarizer transmitting `cos t |H> + sin t |V>`.
pub fn polarizer(theta_deg: f64) -> ComplexMatrix {
    let (s, co) = theta_deg.to_radians().sin_cos();
    ComplexMatrix::outer(&[c(co, 0.0), c(s, 0.0)], &[c(co, 0.0), c(s, 0.0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellLabel {
    /// Input ordering of the two-qubit transfer experiments.
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
    ];
}

pub fn bell_state(label: BellLabel) -> PureState {
    let h = FRAC_1_SQRT_2;
    let amps = match label {
        BellLabel::PhiPlus => [h, 0.0, 0.0, h],
        BellLabel::PhiMinus => [h, 0.0, 0.0, -h],
        BellLabel::PsiPlus => [0.0, h, h, 0.0],
        BellLabel::PsiMinus => [0.0, h, -h, 0.0],
    };
    PureState::new(amps.iter().map(|&x| c(x, 0.0)).collect()).expect("Bell states are normalized")
}

fn parse_pattern(pattern: &str) -> Result<Vec<u8>> {
    pattern
        .chars()
        .map(|ch| match ch {
            'H' | 'h' | '0' => Ok(0),
            'V' | 'v' | '1' => Ok(1),
            other => Err(Error::InvalidConfig(format!(
                "pattern character {other:?} is not H/V/0/1"
            ))),
        })
        .collect()
}

fn pattern_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Equal superposition of two complementary basis states, e.g.
/// `ghz_state("HVHV", "VHVH")`. Between 2 and 6 qubits.
pub fn ghz_state(first: &str, second: &str) -> Result<PureState> {
    let a = parse_pattern(first)?;
    let b = parse_pattern(second)?;
    if a.len() != b.len() || !(2..=6).contains(&a.len()) {
        return Err(Error::InvalidConfig(format!(
            "GHZ patterns must have equal length between 2 and 6 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().zip(&b).any(|(x, y)| x == y) {
        return Err(Error::InvalidConfig(format!(
            "GHZ patterns {first} and {second} are not bitwise complements"
        )));
    }
    let mut amps = vec![ZERO; 1 << a.len()];
    amps[pattern_index(&a)] = c(FRAC_1_SQRT_2, 0.0);
    amps[pattern_index(&b)] = c(FRAC_1_SQRT_2, 0.0);
    PureState::new(amps)
}

/// Six-photon GHZ pattern of the star network, photons 1..6.
pub const G6_PATTERN: (&str, &str) = ("HVHVVH", "VHVHHV");

/// Werner state `v |psi-><psi-| + (1 - v) I/4`.
pub fn noisy_pair(visibility: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::OutOfRange {
            name: "visibility",
            value: visibility,
            range: "[0, 1]",
        });
    }
    bell_state(BellLabel::PsiMinus)
        .to_density()?
        .mix(&DensityMatrix::maximally_mixed(4), visibility)
}

/// Visibility whose Werner state has the given singlet fidelity.
pub fn visibility_for_fidelity(fidelity: f64) -> Result<f64> {
    if !(0.25..=1.0).contains(&fidelity) {
        return Err(Error::OutOfRange {
            name: "fidelity",
            value: fidelity,
            range: "[1/4, 1]",
        });
    }
    Ok((4.0 * fidelity - 1.0) / 3.0)
}

/// PBS fusion operator `|HH><HH| + |VV><VV|` (output modes relabeled to the
/// input ordering).
pub fn fusion_operator() -> ComplexMatrix {
    ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 1.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BsmFamily {
    /// Bare PBS: distinguishes phi+ from phi-.
    PhiFamily,
    /// PBS sandwiched by `I (x) sigma_X` on inputs and outputs: psi+ / psi-.
    PsiFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellOutcome {
    Plus,
    Minus,
}

/// Outcome of a diagonal-basis (X) polarization measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XOutcome {
    Plus,
    Minus,
}

impl XOutcome {
    pub fn ket(self) -> [num_complex::Complex64; 2] {
        let h = c(FRAC_1_SQRT_2, 0.0);
        match self {
            XOutcome::Plus => [h, h],
            XOutcome::Minus => [h, -h],
        }
    }

    pub fn projector(self) -> ComplexMatrix {
        let k = self.ket();
        ComplexMatrix::outer(&k, &k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BsmConfig {
    pub family: BsmFamily,
    pub outcome: BellOutcome,
}

impl BsmConfig {
    pub fn for_label(label: BellLabel) -> Self {
        let (family, outcome) = match label {
            BellLabel::PhiPlus => (BsmFamily::PhiFamily, BellOutcome::Plus),
            BellLabel::PhiMinus => (BsmFamily::PhiFamily, BellOutcome::Minus),
            BellLabel::PsiPlus => (BsmFamily::PsiFamily, BellOutcome::Plus),
            BellLabel::PsiMinus => (BsmFamily::PsiFamily, BellOutcome::Minus),
        };
        Self { family, outcome }
    }

    pub fn label(&self) -> BellLabel {
        match (self.family, self.outcome) {
            (BsmFamily::PhiFamily, BellOutcome::Plus) => BellLabel::PhiPlus,
            (BsmFamily::PhiFamily, BellOutcome::Minus) => BellLabel::PhiMinus,
            (BsmFamily::PsiFamily, BellOutcome::Plus) => BellLabel::PsiPlus,
            (BsmFamily::PsiFamily, BellOutcome::Minus) => BellLabel::PsiMinus,
        }
    }

    /// Detector patterns heralding this outcome: equal X results for `Plus`,
    /// opposite results for `Minus`.
    pub fn patterns(&self) -> [(XOutcome, XOutcome); 2] {
        match self.outcome {
            BellOutcome::Plus => [
                (XOutcome::Plus, XOutcome::Plus),
                (XOutcome::Minus, XOutcome::Minus),
            ],
            BellOutcome::Minus => [
                (XOutcome::Plus, XOutcome::Minus),
                (XOutcome::Minus, XOutcome::Plus),
            ],
        }
    }
}

/// PBS operator of the given family, including the local `sigma_X` plates
/// (HWP at 45 degrees) on mode b and mode d for the psi family.
pub fn pbs_operator(family: BsmFamily) -> ComplexMatrix {
    let m = fusion_operator();
    match family {
        BsmFamily::PhiFamily => m,
        BsmFamily::PsiFamily => {
            let flip = kron(&ComplexMatrix::identity(2), &hwp(45.0));
            &(&flip * &m) * &flip
        }
    }
}

/// Kraus operator `|p_cd><p_cd| M` for a single detection pattern.
pub fn bsm_detection_operator(family: BsmFamily, pattern: (XOutcome, XOutcome)) -> ComplexMatrix {
    let p = kron(&pattern.0.projector(), &pattern.1.projector());
    &p * &pbs_operator(family)
}

/// Effective POVM element of a BSM outcome on the input modes: the sum of
/// `K^dagger K` over the heralding detection patterns, which equals the Bell
/// projector `|B><B|`.
pub fn bsm_operator(config: BsmConfig) -> ComplexMatrix {
    config
        .patterns()
        .iter()
        .map(|&p| {
            let k = bsm_detection_operator(config.family, p);
            &k.adjoint() * &k
        })
        .fold(ComplexMatrix::zeros(4, 4), |acc, m| &acc + &m)
}

/// Singlet fidelity from the three correlators: `(1 - xx - yy - zz) / 4`.
pub fn pair_fidelity_from_correlations(xx: f64, yy: f64, zz: f64) -> Result<f64> {
    for (name, v) in [("xx", xx), ("yy", yy), ("zz", zz)] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                range: "[-1, 1]",
            });
        }
    }
    Ok((1.0 - xx - yy - zz) / 4.0)
}

/// GHZ witness `3 - 2 [ (<X^n> + 1)/2 + Pi ]` where `Pi` is the Z-basis
/// population of the two GHZ patterns.
pub fn ghz_witness(pattern: (&str, &str), x_expect: f64, z_populations: &[f64]) -> Result<f64> {
    let a = parse_pattern(pattern.0)?;
    let b = parse_pattern(pattern.1)?;
    if a.len() != b.len() || z_populations.len() != 1 << a.len() {
        return Err(Error::DimensionMismatch {
            context: "ghz_witness populations",
            expected: 1 << a.len(),
            found: z_populations.len(),
        });
    }
    let total: f64 = z_populations.iter().sum();
    if z_populations.iter().any(|&p| p < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidData(
            "Z-basis populations are not a probability distribution".into(),
        ));
    }
    // expectation values computed from states carry rounding at the boundary
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&x_expect) {
        return Err(Error::OutOfRange {
            name: "x_expect",
            value: x_expect,
            range: "[-1, 1]",
        });
    }
    let x_expect = x_expect.clamp(-1.0, 1.0);
    let p_pattern = z_populations[pattern_index(&a)] + z_populations[pattern_index(&b)];
    Ok(3.0 - 2.0 * ((x_expect + 1.0) / 2.0 + p_pattern))
}

/// Six-photon witness for the star-network GHZ state.
pub fn ghz6_witness(x_expect: f64, z_populations: &[f64]) -> Result<f64> {
    ghz_witness(G6_PATTERN, x_expect, z_populations)
}

/// The same witness with the projector term replaced by `(<Z^6> + 1)/2`.
/// Only an approximation: the two-pattern projector is not a function of
/// `<Z^6>` alone.
pub fn ghz6_witness_from_parity(x_expect: f64, z_expect: f64) -> f64 {
    3.0 - 2.0 * ((x_expect + 1.0) / 2.0 + (z_expect + 1.0) / 2.0)
}

/// Circular polarization states, used in tests and examples.
pub fn circular(right: bool) -> PureState {
    let h = FRAC_1_SQRT_2;
    let v = if right { I * h } else { -I * h };
    PureState::new(vec![ONE * h, v]).expect("normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{apply_operator, expectation, fidelity_pure, pauli, populations};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        // find a reference entry to fix the phase
        let (idx, _) = b
            .as_slice()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
            .unwrap();
        let phase = a.as_slice()[idx] / b.as_slice()[idx];
        if (phase.norm() - 1.0).abs() > tol {
            return false;
        }
        a.max_abs_diff(&b.scale(phase)) < tol
    }

    fn basis_h() -> Vec<num_complex::Complex64> {
        vec![ONE, ZERO]
    }

    #[test]
    fn hwp_examples() {
        assert!(equal_up_to_phase(&hwp(0.0), &pauli::z(), 1e-15));
        let out = hwp(22.5).apply(&basis_h()).unwrap();
        assert!((out[0].re - FRAC_1_SQRT_2).abs() < 1e-15 && (out[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let out = hwp(45.0).apply(&basis_h()).unwrap();
        assert!(out[0].norm() < 1e-15 && (out[1].re - 1.0).abs() < 1e-15);
        for deg in [0.0, 13.0, 22.5, 45.0, 100.0] {
            let h = hwp(deg);
            assert!((&h * &h).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn qwp_examples() {
        assert!(equal_up_to_phase(
            &qwp(0.0),
            &ComplexMatrix::diag(&[ONE, I]),
            1e-15
        ));
        let rho = PureState::new(qwp(45.0).apply(&basis_h()).unwrap()).unwrap().to_density().unwrap();
        let p = populations(&rho).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        // |H> through QWP(30): V population sin^2(60)/2 = 3/8
        let rho = PureState::new(qwp(30.0).apply(&basis_h()).unwrap()).unwrap().to_density().unwrap();
        let p = populations(&rho).unwrap();
        assert!((p[0] - 0.625).abs() < 1e-15 && (p[1] - 0.375).abs() < 1e-15);
        for deg in [0.0, 30.0, 45.0, 71.0] {
            let q = qwp(deg);
            let q4 = &(&q * &q) * &(&q * &q);
            assert!(equal_up_to_phase(&q4, &ComplexMatrix::identity(2), 1e-14));
        }
    }

    #[test]
    fn waveplates_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t: f64 = rng.gen_range(0.0..180.0);
            assert!(hwp(t).unitarity_defect() < 1e-12);
            assert!(qwp(t).unitarity_defect() < 1e-12);
            assert!(hwp(t).is_hermitian(1e-12));
        }
    }

    #[test]
    fn checkpoint_settings() {
        let none = WaveplateSetting::indexed(3).unwrap().unitary();
        assert!(none.max_off_diagonal() < 1e-15);
        let max = WaveplateSetting::indexed(1).unwrap().unitary();
        for z in max.as_slice() {
            assert!((z.norm_sqr() - 0.5).abs() < 1e-15);
        }
        assert!(WaveplateSetting::indexed(0).is_err());
        assert!(WaveplateSetting::indexed(4).is_err());
        assert!(WaveplateSetting::new(180.0, 0.0).is_err());
        assert!(WaveplateSetting::new(0.0, -1.0).is_err());
    }

    #[test]
    fn diagonal_checkpoint_preserves_populations() {
        let u = WaveplateSetting::indexed(3).unwrap().unitary();
        let u2 = kron(&u, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let v: Vec<_> = (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let rho = PureState::normalize(v).unwrap().to_density().unwrap();
            let out = apply_operator(&u2, &rho).unwrap();
            let a = populations(&rho).unwrap();
            let b = populations(&out).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn polarizer_examples() {
        assert!(polarizer(0.0).max_abs_diff(&ComplexMatrix::diag_real(&[1.0, 0.0])) < 1e-15);
        assert!(polarizer(90.0).max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 1.0])) < 1e-15);
        let p = polarizer(33.0);
        assert!((&p * &p).max_abs_diff(&p) < 1e-15);
        assert!((p.trace().re - 1.0).abs() < 1e-15);
        let rho = bell_state(BellLabel::PsiMinus).to_density().unwrap();
        let out = apply_operator(&kron(&polarizer(0.0), &polarizer(90.0)), &rho).unwrap();
        assert!((out.trace() - 0.5).abs() < 1e-15);
        let p = populations(&out).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12 && p[0] + p[2] + p[3] < 1e-12);
    }

    #[test]
    fn bell_examples_and_orthonormality() {
        let pm = bell_state(BellLabel::PsiMinus);
        let expected = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
        for (a, e) in pm.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
        let pp = bell_state(BellLabel::PhiPlus).to_density().unwrap();
        assert_eq!(populations(&pp).unwrap().iter().map(|p| (p * 1e12).round() / 1e12).collect::<Vec<_>>(), vec![0.5, 0.0, 0.0, 0.5]);
        let xx = kron(&pauli::x(), &pauli::x());
        assert!((expectation(&pp, &xx).unwrap() - 1.0).abs() < 1e-15);
        for a in BellLabel::ALL {
            for b in BellLabel::ALL {
                let g = bell_state(a).inner(&bell_state(b));
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((g - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_examples() {
        let g4 = ghz_state("HVHV", "VHVH").unwrap();
        assert!((g4.amplitudes()[0b0101].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g4.amplitudes()[0b1010].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let g6 = ghz_state(G6_PATTERN.0, G6_PATTERN.1).unwrap();
        let rho = g6.to_density().unwrap();
        let p = populations(&rho).unwrap();
        for (i, pi) in p.iter().enumerate() {
            let e = if i == 0b010110 || i == 0b101001 { 0.5 } else { 0.0 };
            assert!((pi - e).abs() < 1e-15);
        }
        assert!((fidelity_pure(&rho, &g6).unwrap() - 1.0).abs() < 1e-12);
        assert!((expectation(&rho, &pauli::x().kron_power(6)).unwrap() - 1.0).abs() < 1e-12);
        assert!(ghz_state("HVH", "VHH").is_err());
        assert!(ghz_state("H", "V").is_err());
        assert!(ghz_state("HVHVHVH", "VHVHVHV").is_err());
        assert!(ghz_state("HX", "VH").is_err());
    }

    #[test]
    fn noisy_pair_examples() {
        let psi = bell_state(BellLabel::PsiMinus);
        assert!(noisy_pair(1.0).unwrap().matrix().max_abs_diff(psi.to_density().unwrap().matrix()) < 1e-15);
        assert!(noisy_pair(0.0).unwrap().matrix().max_abs_diff(DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
        let v = visibility_for_fidelity(0.9303).unwrap();
        assert!((v - (4.0 * 0.9303 - 1.0) / 3.0).abs() < 1e-15);
        assert!((fidelity_pure(&noisy_pair(v).unwrap(), &psi).unwrap() - 0.9303).abs() < 1e-12);
        assert!(noisy_pair(1.1).is_err());
        assert!(noisy_pair(-0.1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v: f64 = rng.gen();
            let f = fidelity_pure(&noisy_pair(v).unwrap(), &psi).unwrap();
            assert!((f - (v + (1.0 - v) / 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_examples() {
        let m = fusion_operator();
        assert_eq!(m.apply(&[ONE, ZERO, ZERO, ZERO]).unwrap(), vec![ONE, ZERO, ZERO, ZERO]);
        assert_eq!(m.apply(&[ZERO, ONE, ZERO, ZERO]).unwrap(), vec![ZERO; 4]);
        let phi = bell_state(BellLabel::PhiPlus);
        assert_eq!(m.apply(phi.amplitudes()).unwrap(), phi.amplitudes().to_vec());
        assert_eq!(&m.adjoint() * &m, ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 1.0]));
        let sum = &bell_state(BellLabel::PhiPlus).projector() + &bell_state(BellLabel::PhiMinus).projector();
        assert!(m.max_abs_diff(&sum) < 1e-12);
    }

    #[test]
    fn bsm_projects_onto_bell_states() {
        for label in BellLabel::ALL {
            let op = bsm_operator(BsmConfig::for_label(label));
            assert!(op.max_abs_diff(&bell_state(label).projector()) < 1e-12, "{label:?}");
            assert_eq!(BsmConfig::for_label(label).label(), label);
        }
    }

    #[test]
    fn bsm_examples() {
        // phi+ input, ++ detection: probability 1/2
        let k = bsm_detection_operator(BsmFamily::PhiFamily, (XOutcome::Plus, XOutcome::Plus));
        let rho = bell_state(BellLabel::PhiPlus).to_density().unwrap();
        assert!((apply_operator(&k, &rho).unwrap().trace() - 0.5).abs() < 1e-12);
        // psi+ never heralds a phi-family outcome
        let rho = bell_state(BellLabel::PsiPlus).to_density().unwrap();
        for outcome in [BellOutcome::Plus, BellOutcome::Minus] {
            let cfg = BsmConfig {
                family: BsmFamily::PhiFamily,
                outcome,
            };
            for p in cfg.patterns() {
                let k = bsm_detection_operator(cfg.family, p);
                assert!(apply_operator(&k, &rho).unwrap().trace().abs() < 1e-12);
            }
        }
        // psi family, +- detection, heralds psi-
        let k = bsm_detection_operator(BsmFamily::PsiFamily, (XOutcome::Plus, XOutcome::Minus));
        let effective = &k.adjoint() * &k;
        let target = bell_state(BellLabel::PsiMinus).projector().scale_real(0.5);
        assert!(effective.max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn correlation_fidelity() {
        assert_eq!(pair_fidelity_from_correlations(-1.0, -1.0, -1.0).unwrap(), 1.0);
        assert_eq!(pair_fidelity_from_correlations(0.0, 0.0, 0.0).unwrap(), 0.25);
        assert!((pair_fidelity_from_correlations(-0.9, -0.9, -0.9).unwrap() - 0.925).abs() < 1e-15);
        assert!(pair_fidelity_from_correlations(-1.2, 0.0, 0.0).is_err());
        // the estimator agrees with the direct fidelity on Werner states
        let rho = noisy_pair(0.8).unwrap();
        let corr = |p: ComplexMatrix| expectation(&rho, &kron(&p, &p)).unwrap();
        let f = pair_fidelity_from_correlations(corr(pauli::x()), corr(pauli::y()), corr(pauli::z())).unwrap();
        assert!((f - fidelity_pure(&rho, &bell_state(BellLabel::PsiMinus)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn witness_examples() {
        let mut p = vec![0.0; 64];
        p[0b010110] = 0.5;
        p[0b101001] = 0.5;
        assert!((ghz6_witness(1.0, &p).unwrap() + 1.0).abs() < 1e-12);
        let uniform = vec![1.0 / 64.0; 64];
        assert!((ghz6_witness(0.0, &uniform).unwrap() - 1.9375).abs() < 1e-12);
        assert!(ghz6_witness(0.0, &[0.5; 2]).is_err());
        assert!(ghz6_witness(2.0, &uniform).is_err());
        assert!((ghz6_witness_from_parity(1.0, 1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn circular_through_qwp45() {
        let u = qwp(45.0);
        for right in [true, false] {
            let out = PureState::new(u.apply(circular(right).amplitudes()).unwrap()).unwrap();
            let p = populations(&out.to_density().unwrap()).unwrap();
            assert!((p[0] - 1.0).abs() < 1e-12 || (p[1] - 1.0).abs() < 1e-12);
        }
    }
}
