use std::f64::consts::{PI, TAU};

use dicke::analysis::{fit_damped_sinusoid, sqrtn_regression};
use dicke::device::{SystemConfig, PAPER_CROSSTALK_PRESET};
use dicke::entanglement::{fidelity, three_qubit_state, TargetState};
use dicke::hilbert::{rotation, Axis, DensityMatrix, HilbertSpec, Populations};
use dicke::protocols::*;
use dicke::{Complex, State};

fn grid(n: usize, span: f64) -> Vec<f64> {
    (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect()
}

fn w() -> State {
    TargetState::<f64>::w_paper().state().clone()
}

#[test]
fn swap_and_w_times() {
    let cfg = SystemConfig::paper_default();
    assert!((swap_time(&cfg, 0).unwrap() * 1e9 - 4.744).abs() < 5e-3);
    assert!((collective_w_time(&cfg).unwrap() * 1e9 - 2.64).abs() < 5e-3);
    let seq = sequential_w_times(&cfg).unwrap();
    for (t, e) in seq.iter().zip([2.72, 2.26, 4.74]) {
        assert!((t * 1e9 - e).abs() < 5e-3, "{t} vs {e}");
    }
}

#[test]
fn double_swap_returns_excitation() {
    let cfg = SystemConfig::paper_default();
    let t = 2.0 * swap_time(&cfg, 0).unwrap();
    let schedule = PulseSchedule::new(
        vec![ScheduleSegment::resonant(&cfg, &[0], t).unwrap()],
        State::product(cfg.spec(), &[0], 0).unwrap(),
    )
    .unwrap();
    let out = execute(&cfg, &schedule, &RunOptions::default()).unwrap();
    assert!((out.excited_population(0) - 1.0).abs() < 1e-6);
}

#[test]
fn vacuum_rabi_single_qubit() {
    let cfg = SystemConfig::paper_default();
    let t = grid(201, 40e-9);
    let trace = rabi_scan(&cfg, &[0], &t, NoiseModel::Off).unwrap();
    let fit = fit_damped_sinusoid(&t, &trace.cavity_population).unwrap();
    assert!((fit.frequency / 105.4e6 - 1.0).abs() < 5e-3);
    for (k, &tk) in t.iter().enumerate() {
        let g = cfg.couplings()[0];
        assert!((trace.cavity_population[k] - (g * tk).cos().powi(2)).abs() < 1e-9);
    }
}

#[test]
fn collective_frequencies_unequal_couplings() {
    let cfg = SystemConfig::paper_default();
    let t = grid(301, 40e-9);
    let g = cfg.couplings();
    for part in [vec![0], vec![0, 1], vec![0, 2], vec![0, 1, 2]] {
        let trace = rabi_scan(&cfg, &part, &t, NoiseModel::Off).unwrap();
        let fit = fit_damped_sinusoid(&t, &trace.cavity_population).unwrap();
        let expected = 2.0 * part.iter().map(|&j| g[j] * g[j]).sum::<f64>().sqrt() / TAU;
        assert!((fit.frequency / expected - 1.0).abs() < 0.01, "{part:?}");
        if part.len() == 3 {
            assert!((fit.frequency / 189.3e6 - 1.0).abs() < 0.01);
        }
    }
}

#[test]
fn sqrt_n_law_equal_couplings() {
    let cfg = SystemConfig::paper_default().with_equal_couplings(110.0);
    let t = grid(301, 40e-9);
    let mut fits = Vec::new();
    for n in 1..=3 {
        let part: Vec<usize> = (0..n).collect();
        let trace = rabi_scan(&cfg, &part, &t, NoiseModel::Off).unwrap();
        fits.push((n, fit_damped_sinusoid(&t, &trace.cavity_population).unwrap()));
    }
    let f1 = fits[0].1.frequency;
    for (n, fit) in &fits {
        assert!((fit.frequency / f1 / (*n as f64).sqrt() - 1.0).abs() < 5e-3);
    }
    let reg = sqrtn_regression(&fits).unwrap();
    assert!(reg.intercept.abs() / reg.slope < 0.01);
    assert!((reg.slope.sqrt() / 110e6 - 1.0).abs() < 5e-3);
}

#[test]
fn amplitude_law_at_tau_w() {
    let cfg = SystemConfig::paper_default();
    let g = cfg.couplings();
    let big_g2: f64 = g.iter().map(|x| x * x).sum();
    let tau = collective_w_time(&cfg).unwrap();
    let trace = rabi_scan(&cfg, &[0, 1, 2], &[tau], NoiseModel::Off).unwrap();
    for j in 0..3 {
        assert!((trace.qubit_populations[j][0] - g[j] * g[j] / big_g2).abs() < 1e-3);
    }
    assert!(trace.cavity_population[0] < 1e-12);
}

#[test]
fn closed_traces_conserve_excitation() {
    let cfg = SystemConfig::paper_default();
    let t = grid(120, 30e-9);
    for part in [vec![2], vec![1, 2], vec![0, 1, 2]] {
        let trace = rabi_scan(&cfg, &part, &t, NoiseModel::Off).unwrap();
        for (k, total) in trace.total_excitation().iter().enumerate() {
            assert!((total - 1.0).abs() < 1e-9);
            assert!((trace.ground_population[k] - trace.cavity_population[k]).abs() < 1e-9);
            for p in &trace.qubit_populations {
                assert!(p[k] >= -1e-9 && p[k] <= 1.0 + 1e-9);
            }
        }
    }
}

#[test]
fn lindblad_trace_never_gains_excitation() {
    let cfg = SystemConfig::paper_default();
    let t = grid(41, 20e-9);
    let trace = rabi_scan(&cfg, &[0, 1, 2], &t, NoiseModel::Lindblad).unwrap();
    let total = trace.total_excitation();
    assert!(total.iter().all(|x| *x <= 1.0 + 1e-9));
    assert!(total.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn sequential_first_segment_split() {
    let cfg = SystemConfig::paper_default();
    let full = sequential_w_schedule(&cfg).unwrap();
    let first = PulseSchedule::new(full.segments()[..1].to_vec(), full.initial_state().clone()).unwrap();
    let out = execute(&cfg, &first, &RunOptions::default()).unwrap();
    assert!((cavity_population(&out) - 2.0 / 3.0).abs() < 1e-6);
    assert!((out.excited_population(2) - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn ideal_w_preparation() {
    let cfg = SystemConfig::paper_default();
    let col = prepare_w_collective(&cfg, NoiseModel::Off).unwrap();
    let seq = prepare_w_sequential(&cfg, NoiseModel::Off).unwrap();
    for rho in [&col, &seq] {
        let fixed = apply_phase_correction(rho, &w()).unwrap();
        assert!(fixed.fidelity_after > 0.999);
        assert!(fixed.fidelity_after >= fixed.fidelity_before);
    }
    let out = execute(&cfg, &sequential_w_schedule(&cfg).unwrap(), &RunOptions::default()).unwrap();
    assert!(cavity_population(&out) < 1e-6);
}

#[test]
fn protocols_agree_up_to_local_phases() {
    let cfg = SystemConfig::paper_default();
    let out = execute(&cfg, &sequential_w_schedule(&cfg).unwrap(), &RunOptions::default()).unwrap();
    let psi = out.as_pure().unwrap();
    let amps: Vec<Complex<f64>> = (0..8).map(|b| psi.amplitude(psi.spec().index(b, 0))).collect();
    let seq = three_qubit_state(&amps).unwrap();
    let col = prepare_w_collective(&cfg, NoiseModel::Off).unwrap();
    assert!(apply_phase_correction(&col, &seq).unwrap().fidelity_after > 0.999);
}

#[test]
fn decoherence_ceilings() {
    let cfg = SystemConfig::paper_default();
    let col = prepare_w_collective(&cfg, NoiseModel::Lindblad).unwrap();
    let seq = prepare_w_sequential(&cfg, NoiseModel::Lindblad).unwrap();
    let fc = apply_phase_correction(&col, &w()).unwrap().fidelity_after;
    let fs = apply_phase_correction(&seq, &w()).unwrap().fidelity_after;
    assert!((fc - 0.97).abs() <= 0.03, "{fc}");
    assert!((fs - 0.93).abs() <= 0.03, "{fs}");
}

#[test]
fn crosstalk_hurts_collective_more() {
    let cfg = SystemConfig::preset(PAPER_CROSSTALK_PRESET).unwrap();
    for noise in [NoiseModel::Off, NoiseModel::Lindblad] {
        let fc = apply_phase_correction(&prepare_w_collective(&cfg, noise).unwrap(), &w()).unwrap().fidelity_after;
        let fs = apply_phase_correction(&prepare_w_sequential(&cfg, noise).unwrap(), &w()).unwrap().fidelity_after;
        assert!(fc < fs, "{noise:?}: {fc} vs {fs}");
    }
}

#[test]
fn phase_correction_examples() {
    let target = w();
    let pure = target.to_density();
    let same = apply_phase_correction(&pure, &target).unwrap();
    assert!(same.angles.iter().all(|a| a.abs() < 1e-6));
    assert!((same.fidelity_after - 1.0).abs() < 1e-12);

    for phi in [-2.9, -0.4, 0.3, 1.0, PI] {
        let rotated = pure.apply_qubit_gate(&rotation(Axis::Z, phi), 0).unwrap();
        let fixed = apply_phase_correction(&rotated, &target).unwrap();
        assert!((fixed.fidelity_after - 1.0).abs() < 1e-8, "{phi}");
    }

    let mixed = DensityMatrix::maximally_mixed(HilbertSpec::qubits(3).unwrap());
    let fixed = apply_phase_correction(&mixed, &target).unwrap();
    assert!((fixed.fidelity_after - 0.125).abs() < 1e-12);
    assert!((fidelity(&fixed.rho, &TargetState::w_paper()).unwrap() - 0.125).abs() < 1e-12);
}

#[test]
fn cavity_population_examples() {
    let spec = HilbertSpec::new(3, 2).unwrap();
    assert_eq!(cavity_population(&State::ground(spec)), 0.0);
    assert!((cavity_population(&State::product(spec, &[], 1).unwrap()) - 1.0).abs() < 1e-15);
    let mut amps = nalgebra::DVector::zeros(spec.dim());
    amps[spec.index(0, 0)] = Complex::new(1.0, 0.0);
    amps[spec.index(0, 1)] = Complex::new(1.0, 0.0);
    let half = State::normalized(spec, amps).unwrap();
    assert!((cavity_population(&half) - 0.5).abs() < 1e-15);
}
