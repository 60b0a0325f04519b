use std::f64::consts::PI;

use dicke::device::SystemConfig;
use dicke::dynamics::{
    evolve_lindblad, evolve_lindblad_converged, evolve_unitary, excitation_number,
    single_excitation_amplitudes, single_excitation_oracle, tavis_cummings, CollapseOperator,
    Propagator, DEFAULT_DT,
};
use dicke::hilbert::{
    embed_qubit_operator, expectation_real, number_operator, pauli, HilbertSpec, OperatorMatrix,
    Populations, QuantumState,
};
use dicke::protocols::{collective_w_schedule, execute, sequential_w_schedule, NoiseModel, RunOptions};
use dicke::{Complex, State};
use nalgebra::DVector;
use proptest::prelude::*;

fn paper_couplings() -> Vec<f64> {
    SystemConfig::paper_default().couplings()
}

fn random_state(spec: HilbertSpec, v: &[(f64, f64)]) -> Option<State> {
    let amps = DVector::from_iterator(spec.dim(), v.iter().map(|(r, i)| Complex::new(*r, *i)));
    QuantumState::normalized(spec, amps).ok()
}

#[test]
fn oracle_equivalence_n123() {
    let g = paper_couplings();
    for n in 1..=3 {
        let spec = HilbertSpec::new(n, 2).unwrap();
        for detunings in [vec![0.0; n], vec![3e8, -2e8, 1.1e8][..n].to_vec()] {
            let h = tavis_cummings(spec, &g[..n], &detunings).unwrap();
            let prop = Propagator::new(&h).unwrap();
            let psi0 = State::product(spec, &[], 1).unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..50 {
                let t = k as f64 * 30e-9 / 49.0;
                let full = single_excitation_amplitudes(&prop.evolve(&psi0, t).unwrap());
                let oracle = single_excitation_oracle(&g[..n], &detunings, t).unwrap();
                worst = worst.max((full - oracle).camax());
            }
            assert!(worst < 1e-8, "N={n}: {worst}");
        }
    }
}

#[test]
fn single_qubit_full_swap() {
    let g = paper_couplings()[0];
    let spec = HilbertSpec::new(1, 1).unwrap();
    let h = tavis_cummings(spec, &[g], &[0.0]).unwrap();
    let t = PI / (2.0 * g.abs());
    let out = evolve_unitary(&State::product(spec, &[0], 0).unwrap(), &h, t).unwrap();
    assert!((out.amplitude(spec.index(0, 1)).norm() - 1.0).abs() < 1e-12);
    let back = evolve_unitary(&State::product(spec, &[0], 0).unwrap(), &h, 2.0 * t).unwrap();
    assert!((back.excited_population(0) - 1.0).abs() < 1e-12);
}

#[test]
fn detuned_rabi_frequency() {
    let g = paper_couplings()[1];
    let delta = 1.5 * g;
    let omega = (4.0 * g * g + delta * delta).sqrt();
    let spec = HilbertSpec::new(1, 1).unwrap();
    let h = tavis_cummings(spec, &[g], &[delta]).unwrap();
    let prop = Propagator::new(&h).unwrap();
    let psi = State::product(spec, &[0], 0).unwrap();
    for k in 0..40 {
        let t = k as f64 * 0.25e-9;
        let p = prop.evolve(&psi, t).unwrap().excited_population(0);
        let expected = 1.0 - 4.0 * g * g / (omega * omega) * (omega * t / 2.0).sin().powi(2);
        assert!((p - expected).abs() < 1e-10);
    }
}

#[test]
fn collective_block_spectrum() {
    let g = paper_couplings();
    let big_g = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let spec = HilbertSpec::new(3, 1).unwrap();
    let h = tavis_cummings(spec, &g, &[0.0; 3]).unwrap();
    let idx = [1usize, 2, 4, spec.index(0, 1)];
    let block = nalgebra::DMatrix::from_fn(4, 4, |i, j| h.entries()[(idx[i], idx[j])].re);
    let mut ev: Vec<f64> = block.symmetric_eigen().eigenvalues.iter().map(|e| e / big_g).collect();
    ev.sort_by(f64::total_cmp);
    for (a, b) in ev.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn frame_shift_is_a_gauge() {
    let g = paper_couplings();
    let spec = HilbertSpec::new(3, 2).unwrap();
    let det = [0.0, 2e8, -5e8];
    let shift = 2.0 * PI * 7.023e9;
    let h = tavis_cummings(spec, &g, &det).unwrap();
    let shifted: Vec<f64> = det.iter().map(|d| d + shift).collect();
    let hs = tavis_cummings(spec, &g, &shifted)
        .unwrap()
        .add(&number_operator(spec).unwrap().scale(shift))
        .unwrap();
    let psi = State::product(spec, &[2], 0).unwrap();
    for t in [0.3e-9, 1.7e-9, 9.1e-9] {
        let a = evolve_unitary(&psi, &h, t).unwrap().probabilities();
        let b = evolve_unitary(&psi, &hs, t).unwrap().probabilities();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn excitation_is_conserved(
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24),
        det in prop::collection::vec(-1e9f64..1e9, 3),
        t in 0.0f64..40e-9,
    ) {
        let spec = HilbertSpec::new(3, 2).unwrap();
        let Some(psi) = random_state(spec, &amps) else { return Ok(()) };
        let h = tavis_cummings(spec, &paper_couplings(), &det).unwrap();
        let n_exc = excitation_number::<f64>(spec).unwrap();
        prop_assert_eq!(h.commutator(&n_exc).unwrap().entries().camax(), 0.0);
        let before = expectation_real(&n_exc, &psi.to_density()).unwrap();
        let after = expectation_real(&n_exc, &evolve_unitary(&psi, &h, t).unwrap().to_density()).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
    }
}

#[test]
fn t1_decay_oracle() {
    let spec = HilbertSpec::new(1, 1).unwrap();
    let t1 = 2.1e-6;
    let h = OperatorMatrix::zeros(spec);
    let decay = CollapseOperator::new(embed_qubit_operator(&pauli::sigma_minus(), 0, spec).unwrap(), 1.0 / t1).unwrap();
    let rho = State::product(spec, &[0], 0).unwrap().to_density();
    for t in [0.1e-6, 1e-6, 3e-6] {
        let out = evolve_lindblad(&rho, &h, std::slice::from_ref(&decay), t, DEFAULT_DT).unwrap();
        assert!((out.excited_population(0) - (-t / t1).exp()).abs() < 1e-6);
    }
}

#[test]
fn lindblad_converges_and_stays_positive() {
    let cfg = SystemConfig::paper_default();
    let h = tavis_cummings(cfg.spec(), &cfg.couplings(), &[0.0; 3]).unwrap();
    let collapse = dicke::dynamics::collapse_operators(&cfg).unwrap();
    let rho = State::product(cfg.spec(), &[0], 0).unwrap().to_density();
    let run = evolve_lindblad_converged(&rho, &h, &collapse, 10e-9, 1e-8).unwrap();
    assert!(run.change < 1e-8);
    assert!(run.rho.min_eigenvalue() >= -1e-7);

    for schedule in [collective_w_schedule(&cfg).unwrap(), sequential_w_schedule(&cfg).unwrap()] {
        let out = execute(&cfg, &schedule, &RunOptions::from(NoiseModel::Lindblad)).unwrap();
        let rho = out.to_density();
        assert!(rho.min_eigenvalue() >= -1e-7);
        assert!((rho.trace().re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn single_precision_unitary() {
    let spec = HilbertSpec::new(2, 1).unwrap();
    let g: Vec<f32> = paper_couplings()[..2].iter().map(|x| *x as f32).collect();
    let h = tavis_cummings(spec, &g, &[0.0f32, 0.0]).unwrap();
    let psi = QuantumState::<f32>::product(spec, &[], 1).unwrap();
    let out = evolve_unitary(&psi, &h, 2e-9f32).unwrap();
    let full: f32 = out.probabilities().iter().sum();
    assert!((full - 1.0).abs() < 1e-4);
    let oracle = single_excitation_oracle(&g, &[0.0f32, 0.0], 2e-9f32).unwrap();
    assert!((single_excitation_amplitudes(&out) - oracle).camax() < 1e-3);
}
