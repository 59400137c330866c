use coherence_transfer::capability::{
    criterion_q, kernel_objective, random_stochastic, PopulationTransferMatrix,
};
use coherence_transfer::networks::{run_one_qubit, run_two_qubit, NetworkSize, ScenarioData, TwoQubitVariant};
use coherence_transfer::qcore::{apply_operator, c, populations, ComplexMatrix, DensityMatrix, PureState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_distribution(rng: &mut ChaCha8Rng, d: usize, strictly_positive: bool) -> Vec<f64> {
    loop {
        let t = random_stochastic(d, rng);
        let v: Vec<f64> = (0..d).map(|i| t.get(i, 0)).collect();
        if !strictly_positive || v.iter().all(|&x| x > 1e-6) {
            return v;
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> DensityMatrix {
    let amps = (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let pure = PureState::normalize(amps).unwrap().to_density().unwrap();
    pure.mix(&DensityMatrix::maximally_mixed(d), rng.gen_range(0.0..0.5)).unwrap()
}

#[test]
fn single_input_kernel_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let d = rng.gen_range(2..=4);
        let data = ScenarioData::new(
            vec![random_distribution(&mut rng, d, true)],
            vec![random_distribution(&mut rng, d, false)],
            "n=1",
        )
        .unwrap();
        assert!(criterion_q(&data).unwrap().q_value < 1e-7);
    }
}

#[test]
fn stochastic_data_has_zero_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let d = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=d);
        let t0 = random_stochastic(d, &mut rng);
        let w: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(&mut rng, d, false)).collect();
        let p = w.iter().map(|x| t0.apply(x)).collect();
        let data = ScenarioData::new(w, p, "stochastic").unwrap();
        assert!(criterion_q(&data).unwrap().q_value < 1e-7);
    }
}

#[test]
fn diagonal_checkpoint_gives_zero_for_every_network() {
    for size in [NetworkSize::N4, NetworkSize::N6] {
        let v = vec![0.95; size.pairs()];
        for rsp in 1..=3 {
            let q = criterion_q(&run_one_qubit(size, rsp, 3, &v).unwrap()).unwrap();
            assert!(q.q_value < 1e-6);
        }
        for variant in [TwoQubitVariant::Capable, TwoQubitVariant::Control] {
            let q = criterion_q(&run_two_qubit(size, variant, 3, &v).unwrap()).unwrap();
            assert!(q.q_value < 1e-6);
        }
    }
}

#[test]
fn kernel_is_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let d = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=d);
        let w = (0..n).map(|_| random_distribution(&mut rng, d, false)).collect();
        let p = (0..n).map(|_| random_distribution(&mut rng, d, false)).collect();
        let data = ScenarioData::new(w, p, "perm").unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let a = criterion_q(&data).unwrap().q_value;
        let b = criterion_q(&data.relabeled(&perm).unwrap()).unwrap().q_value;
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn minimizer_is_feasible_and_attains_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let d = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=d);
        let w = (0..n).map(|_| random_distribution(&mut rng, d, false)).collect();
        let p = (0..n).map(|_| random_distribution(&mut rng, d, false)).collect();
        let data = ScenarioData::new(w, p, "feasible").unwrap();
        let res = criterion_q(&data).unwrap();
        let t = res.minimizer.unwrap();
        for row in t.rows() {
            assert!(row.iter().all(|&x| x >= 0.0));
        }
        for col in 0..d {
            let s: f64 = t.rows().iter().map(|r| r[col]).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        let obj = kernel_objective(data.checkpoint_populations(), data.diag_populations(), &t);
        assert!((obj - res.q_value).abs() < 1e-8);
    }
}

/// Incoherent channel with Kraus operators `sqrt(T(i,n)) e^{i phi} |i><n|`.
fn incoherent_kraus(t: &PopulationTransferMatrix, rng: &mut ChaCha8Rng) -> Vec<ComplexMatrix> {
    let d = t.d();
    let mut ops = Vec::new();
    for i in 0..d {
        for n in 0..d {
            let mut k = ComplexMatrix::zeros(d, d);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            k[(i, n)] = c(t.get(i, n).sqrt() * phase.cos(), t.get(i, n).sqrt() * phase.sin());
            ops.push(k);
        }
    }
    ops
}

fn apply_channel(ops: &[ComplexMatrix], rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    let sum = ops
        .iter()
        .map(|k| apply_operator(k, rho).unwrap().into_matrix())
        .fold(ComplexMatrix::zeros(d, d), |acc, m| &acc + &m);
    DensityMatrix::new(sum).unwrap()
}

#[test]
fn incoherent_channels_act_through_their_transfer_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let t = random_stochastic(2, &mut rng);
        let ops = incoherent_kraus(&t, &mut rng);
        let inputs: Vec<DensityMatrix> = (0..2).map(|_| random_state(&mut rng, 2)).collect();
        let w: Vec<Vec<f64>> = inputs.iter().map(|r| populations(r).unwrap()).collect();
        let p: Vec<Vec<f64>> = inputs.iter().map(|r| populations(&apply_channel(&ops, r)).unwrap()).collect();
        for (pk, wk) in p.iter().zip(&w) {
            for (a, b) in pk.iter().zip(t.apply(wk)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // diagonal inputs stay diagonal
        let out = apply_channel(&ops, &DensityMatrix::from_populations(&w[0]).unwrap());
        assert!(out.matrix().max_off_diagonal() < 1e-14);
        // so the kernel of channel-generated data vanishes
        let data = ScenarioData::new(w, p, "incoherent channel").unwrap();
        assert!(criterion_q(&data).unwrap().q_value < 1e-7);
    }
}
