use coherence_transfer::capability::temporal_q;
use coherence_transfer::dynamics::{
    basis_initial_states, dqd_model, lindblad_derivative, qt_sweep, temporal_scenario, trajectory,
    LindbladModel, SweepGrid,
};
use coherence_transfer::qcore::{kron, ComplexMatrix, DensityMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Row-major vectorized generator: `vec(A rho B) = (A (x) B^T) vec(rho)`.
fn superoperator(model: &LindbladModel) -> ComplexMatrix {
    let d = model.dim();
    let id = ComplexMatrix::identity(d);
    let h = model.hamiltonian();
    let mut l = &kron(h, &id).scale(Complex64::new(0.0, -1.0)) + &kron(&id, &h.transpose()).scale(Complex64::new(0.0, 1.0));
    for (op, rate) in model.jumps() {
        let ld = op.adjoint();
        let n = &ld * op;
        let term = &(&kron(op, &ld.transpose()) - &kron(&n, &id).scale_real(0.5)) - &kron(&id, &n.transpose()).scale_real(0.5);
        l = &l + &term.scale_real(*rate);
    }
    l
}

fn stationary_state(model: &LindbladModel) -> DensityMatrix {
    let l = superoperator(model);
    let n = l.rows();
    let m = DMatrix::from_fn(n, n, |r, c| l[(r, c)]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let d = model.dim();
    let vec: Vec<Complex64> = (0..n).map(|j| v_t[(idx, j)].conj()).collect();
    let mut rho = ComplexMatrix::from_vec(d, d, vec).unwrap();
    let tr = rho.trace();
    rho = rho.scale(Complex64::new(1.0, 0.0) / tr);
    DensityMatrix::new(rho).unwrap()
}

#[test]
fn stationary_state_has_vanishing_derivative() {
    for (gl, gr, delta) in [(4.0, 0.1, 1.0), (1.0, 1.0, 0.5), (0.3, 2.0, 2.0)] {
        let model = dqd_model(gl, gr, delta).unwrap();
        let rho = stationary_state(&model);
        let der = lindblad_derivative(&model, &rho).unwrap();
        assert!(der.max_abs() < 1e-10, "{}", der.max_abs());
    }
}

#[test]
fn trajectories_stay_physical() {
    let model = dqd_model(4.0, 0.1, 1.0).unwrap();
    let times: Vec<f64> = (1..=60).map(|i| i as f64 * 0.2).collect();
    for rho0 in basis_initial_states(3) {
        for (t, rho) in times.iter().zip(trajectory(&model, &rho0, &times, 1e-3).unwrap()) {
            assert!((rho.trace() - 1.0).abs() < 1e-8 * t.max(1.0));
            assert!(rho.matrix().hermiticity_defect() < 1e-12);
            assert!(rho.matrix().min_eigenvalue().unwrap() >= -1e-7);
        }
    }
}

#[test]
fn classical_dynamics_never_certifies() {
    let model = dqd_model(4.0, 0.1, 0.0).unwrap();
    let grid = SweepGrid::uniform(6.0, 13, 1e-3).unwrap();
    let res = qt_sweep(&model, &basis_initial_states(3), &grid).unwrap();
    assert!(res.max() < 1e-6);
    // also for a mixed, non-basis initial set
    let init = vec![
        DensityMatrix::from_populations(&[0.5, 0.5, 0.0]).unwrap(),
        DensityMatrix::from_populations(&[0.1, 0.2, 0.7]).unwrap(),
    ];
    let (pt, p0) = temporal_scenario(&model, &init, 0.7, 2.9, 1e-3).unwrap();
    assert!(temporal_q(&pt, &p0).unwrap().q_value < 1e-6);
}

#[test]
fn detuned_parameters_show_a_region() {
    let model = dqd_model(4.0, 0.1, 1.0).unwrap();
    let grid = SweepGrid::uniform(6.0, 25, 1e-3).unwrap();
    let res = qt_sweep(&model, &basis_initial_states(3), &grid).unwrap();
    assert!(res.largest_region(1e-3) >= 2);
    for row in &res.q {
        assert!(row[0] < 1e-9);
    }
}
