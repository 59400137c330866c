use coherence_transfer::capability::{criterion_q, random_stochastic, sample_incapable_bound};
use coherence_transfer::networks::ScenarioData;
use coherence_transfer::optimizer::{
    enumerate_vertices, random_feasible_lp, simplex_solve, SolveStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(1..=(n - 1).min(6));
        let lp = random_feasible_lp(&mut rng, n, m);
        let sol = simplex_solve(&lp, 10_000);
        assert_eq!(sol.status, SolveStatus::Optimal, "case {case}");
        assert!(lp.max_violation(&sol.x) < 1e-9, "case {case}");
        let (best, _) = enumerate_vertices(&lp).expect("feasible by construction");
        assert!(
            (sol.objective - best).abs() < 1e-8,
            "case {case}: simplex {} vs enumeration {best}",
            sol.objective
        );
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let t = random_stochastic(d, rng);
    (0..d).map(|i| t.get(i, 0)).collect()
}

#[test]
fn kernel_never_exceeds_sampling_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..100 {
        let d = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=d);
        let w = (0..n).map(|_| random_distribution(&mut rng, d)).collect();
        let p = (0..n).map(|_| random_distribution(&mut rng, d)).collect();
        let data = ScenarioData::new(w, p, "random").unwrap();
        let q = criterion_q(&data).unwrap();
        assert!(q.is_optimal());
        let bound = sample_incapable_bound(&data, 500, case).unwrap();
        assert!(q.q_value <= bound + 1e-7, "case {case}: {} > {bound}", q.q_value);
    }
}
