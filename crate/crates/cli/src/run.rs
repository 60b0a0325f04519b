//! Subcommand implementations.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use dicke::analysis::{fit_damped_sinusoid, sqrtn_regression, FitReport};
use dicke::device::SystemConfig;
use dicke::entanglement::{
    certify, fidelity, CertificationReport, CertifyOptions, RoofOptions, TargetState, Thresholds,
};
use dicke::protocols::{
    apply_phase_correction, collective_coupling, collective_w_time, prepare_w_collective_with,
    prepare_w_sequential_with, rabi_scan_with, sequential_w_times,
};
use dicke::tomography::{
    linear_inversion, pauli_set, reconstruct, simulate_measurements, tomography_set, ReadoutOperator,
    DEFAULT_READOUT,
};
use dicke::Density;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, Resolved, StateSource};
use crate::error::{CliError, CliResult};
use crate::formats::{json, pauli_csv, parse_records, records_csv, scaling_csv, trace_csv, DensityFile};
use crate::manifest::{Output, RunManifest};

/// Outcome of a subcommand: the manifest and human-readable summary lines.
pub struct Completed {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
    pub summary: Vec<String>,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

/// `run --config PATH [--out DIR] [--seed N]`.
pub fn run(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<Completed> {
    let bytes = read(config_path)?;
    let mut config = ExperimentConfig::from_json(&bytes)?;
    if seed.is_some() {
        config.seed = seed;
    }
    let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let resolved = config.resolve(&base)?;
    let out_dir = match (out, &resolved.config.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => resolved.resolve_path(o),
        (None, None) => return Err(CliError::config("no output directory: set output_dir or pass --out")),
    };
    // inputs that live in files are read before anything is written
    let state = match resolved.config.experiment {
        Experiment::Tomography | Experiment::Certify => Some(PendingState::load(&resolved)?),
        _ => None,
    };

    let mut output = Output::create(&out_dir)?;
    let experiment = resolved.config.experiment;
    let summary = match experiment {
        Experiment::RabiScan => rabi(&resolved, &mut output)?,
        Experiment::WCollective | Experiment::WSequential => w_preparation(&resolved, &mut output)?,
        Experiment::Tomography => tomography(&resolved, state.expect("loaded"), &mut output)?,
        Experiment::Certify => certification(&resolved, state.expect("loaded"), &mut output)?,
    };
    let manifest = output.finish(&format!("run {}", experiment.name()), &bytes)?;
    Ok(Completed {
        manifest,
        out_dir,
        summary,
    })
}

#[derive(Serialize)]
struct RabiFit {
    participating: Vec<String>,
    expected_frequency_hz: f64,
    cavity_fit: FitReport,
}

fn names(device: &SystemConfig, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| device.qubits[j].name.clone()).collect()
}

fn rabi(r: &Resolved, out: &mut Output) -> CliResult<Vec<String>> {
    let device = &r.device;
    let grid = r.config.tau_grid.expect("validated").times();
    let opts = r.run_options();
    let all: Vec<usize> = (0..device.num_qubits()).collect();

    let scan = |part: &[usize]| -> CliResult<(dicke::protocols::PopulationTrace, RabiFit)> {
        let trace = rabi_scan_with(device, part, &grid, &opts)?;
        let fit = fit_damped_sinusoid(&grid, &trace.cavity_population)?;
        let expected = 2.0 * collective_coupling(device, part)? / TAU;
        Ok((
            trace,
            RabiFit {
                participating: names(device, part),
                expected_frequency_hz: expected,
                cavity_fit: fit,
            },
        ))
    };

    let (trace, fit) = scan(&r.participating)?;
    out.write("trace.csv", &trace_csv(&trace, &names(device, &all)))?;
    out.write("fit.json", &json(&fit))?;
    let mut summary = vec![format!(
        "cavity frequency {:.4} MHz (expected {:.4} MHz)",
        fit.cavity_fit.frequency * 1e-6,
        fit.expected_frequency_hz * 1e-6
    )];

    if r.config.scaling {
        let mut fits = Vec::new();
        for n in 1..=r.participating.len() {
            let (_, f) = scan(&r.participating[..n])?;
            fits.push((n, f.cavity_fit));
        }
        let report = sqrtn_regression(&fits)?;
        out.write("scaling.csv", &scaling_csv(&report))?;
        out.write("scaling.json", &json(&report))?;
        summary.push(format!(
            "f^2 vs N: slope {:.6e} Hz^2, intercept/slope {:.3e}, R^2 {:.9}",
            report.slope,
            report.intercept / report.slope,
            report.r_squared
        ));
    }
    Ok(summary)
}

#[derive(Serialize)]
struct Preparation {
    protocol: &'static str,
    noise: bool,
    segment_times_ns: Vec<f64>,
    fidelity_before: f64,
    fidelity_after: f64,
    phase_angles_rad: Vec<f64>,
}

fn prepare(r: &Resolved, experiment: Experiment) -> CliResult<Density> {
    let opts = r.run_options();
    Ok(match experiment {
        Experiment::WCollective => prepare_w_collective_with(&r.device, &opts)?,
        _ => prepare_w_sequential_with(&r.device, &opts)?,
    })
}

fn w_preparation(r: &Resolved, out: &mut Output) -> CliResult<Vec<String>> {
    let experiment = r.config.experiment;
    let rho = prepare(r, experiment)?;
    let target = TargetState::<f64>::w_paper();
    let before = fidelity(&rho, &target)?;
    let (fixed, angles) = if r.config.phase_correction {
        let pc = apply_phase_correction(&rho, target.state())?;
        (pc.rho, pc.angles)
    } else {
        (rho.clone(), vec![0.0; 3])
    };
    let after = fidelity(&fixed, &target)?;
    let times = match experiment {
        Experiment::WCollective => vec![collective_w_time(&r.device)?],
        _ => sequential_w_times(&r.device)?,
    };
    let report = Preparation {
        protocol: experiment.name(),
        noise: r.config.noise,
        segment_times_ns: times.iter().map(|t| t * 1e9).collect(),
        fidelity_before: before,
        fidelity_after: after,
        phase_angles_rad: angles,
    };
    out.write("rho_uncorrected.json", DensityFile::from_density(&rho).to_json().as_bytes())?;
    out.write("rho.json", DensityFile::from_density(&fixed).to_json().as_bytes())?;
    out.write("preparation.json", &json(&report))?;
    Ok(vec![format!(
        "{}: fidelity to W {:.5} (before phase correction {:.5})",
        experiment.name(),
        after,
        before
    )])
}

/// State input resolved before the output directory exists.
pub enum PendingState {
    Ready(Density),
    Prepare(Experiment),
}

impl PendingState {
    fn load(r: &Resolved) -> CliResult<Self> {
        Ok(match r.state() {
            StateSource::WPaper => Self::Ready(TargetState::<f64>::w_paper().state().to_density()),
            StateSource::Ghz => Self::Ready(TargetState::<f64>::ghz().state().to_density()),
            StateSource::WCollective => Self::Prepare(Experiment::WCollective),
            StateSource::WSequential => Self::Prepare(Experiment::WSequential),
            StateSource::DensityFile(p) => Self::Ready(load_three_qubit(&r.resolve_path(&p))?),
        })
    }

    fn resolve(self, r: &Resolved) -> CliResult<Density> {
        match self {
            Self::Ready(rho) => Ok(rho),
            Self::Prepare(e) => {
                let rho = prepare(r, e)?;
                if r.config.phase_correction {
                    let w = TargetState::<f64>::w_paper();
                    Ok(apply_phase_correction(&rho, w.state())?.rho)
                } else {
                    Ok(rho)
                }
            }
        }
    }
}

fn load_three_qubit(path: &Path) -> CliResult<Density> {
    let rho = DensityFile::from_json(&read(path)?)?.to_density()?;
    if rho.dim() != 8 {
        return Err(CliError::config(format!(
            "{}: expected a 3-qubit density matrix, got dimension {}",
            path.display(),
            rho.dim()
        )));
    }
    Ok(rho)
}

fn certify_options(r: &Resolved) -> CertifyOptions {
    CertifyOptions {
        roof: RoofOptions {
            restarts: r.restarts(),
            budget: r.budget(),
            seed: r.seed(),
        },
        thresholds: Thresholds::default(),
    }
}

fn certification_line(c: &CertificationReport) -> String {
    format!(
        "fidelity {:.5}, witness {:.5}, tangle bound {:.3e}, {}",
        c.fidelity,
        c.witness,
        c.tangle_bound,
        serde_json::to_value(c.classification).expect("serializable").as_str().unwrap_or("")
    )
}

#[derive(Serialize)]
struct TomographySummary {
    sigma: f64,
    seed: u64,
    design_rank: usize,
    linear_min_eigenvalue: f64,
    likelihood_iterations: usize,
    fidelity_to_truth: f64,
    fidelity_to_w: f64,
}

fn tomography(r: &Resolved, state: PendingState, out: &mut Output) -> CliResult<Vec<String>> {
    let truth = state.resolve(r)?;
    let set = tomography_set(&r.readout()?)?;
    let records = simulate_measurements(&truth, &set, r.config.sigma, r.seed())?;
    let linear = linear_inversion(&records, &set)?;
    let result = reconstruct(&records, &set)?;
    let report = certify(&result.rho, &certify_options(r))?;
    let summary = TomographySummary {
        sigma: r.config.sigma,
        seed: r.seed(),
        design_rank: set.rank(),
        linear_min_eigenvalue: linear.estimate.entries().clone().symmetric_eigen().eigenvalues.min(),
        likelihood_iterations: result.likelihood_iterations,
        fidelity_to_truth: result.rho.fidelity(&truth)?,
        fidelity_to_w: report.fidelity,
    };
    out.write("truth.json", DensityFile::from_density(&truth).to_json().as_bytes())?;
    out.write("records.csv", &records_csv(&records))?;
    out.write("rho.json", DensityFile::from_density(&result.rho).to_json().as_bytes())?;
    out.write("pauli.csv", &pauli_csv(&pauli_set(&result.rho)?))?;
    out.write("certification.json", &json(&report))?;
    out.write("tomography.json", &json(&summary))?;
    Ok(vec![
        format!("reconstruction fidelity to truth {:.6}", summary.fidelity_to_truth),
        certification_line(&report),
    ])
}

fn certification(r: &Resolved, state: PendingState, out: &mut Output) -> CliResult<Vec<String>> {
    let rho = state.resolve(r)?;
    let report = certify(&rho, &certify_options(r))?;
    out.write("rho.json", DensityFile::from_density(&rho).to_json().as_bytes())?;
    out.write("certification.json", &json(&report))?;
    Ok(vec![certification_line(&report)])
}

/// `reconstruct --records PATH [--readout PATH] --out DIR`.
pub fn reconstruct_records(
    records_path: &Path,
    readout_path: Option<&Path>,
    out_dir: &Path,
    roof: RoofOptions,
) -> CliResult<Completed> {
    let bytes = read(records_path)?;
    let coefficients = match readout_path {
        Some(p) => serde_json::from_slice::<[f64; 8]>(&read(p)?)
            .map_err(|e| CliError::config(format!("readout file must hold 8 coefficients: {e}")))?,
        None => DEFAULT_READOUT,
    };
    let readout = ReadoutOperator::new(coefficients).map_err(|e| CliError::config(e.to_string()))?;
    let set = tomography_set(&readout).map_err(|e| CliError::config(e.to_string()))?;
    let records = parse_records(&bytes, &set)?;

    let mut out = Output::create(out_dir)?;
    let result = reconstruct(&records, &set)?;
    let report = certify(
        &result.rho,
        &CertifyOptions {
            roof,
            thresholds: Thresholds::default(),
        },
    )?;
    out.write("rho.json", DensityFile::from_density(&result.rho).to_json().as_bytes())?;
    out.write("pauli.csv", &pauli_csv(&pauli_set(&result.rho)?))?;
    out.write("certification.json", &json(&report))?;
    let manifest = out.finish("reconstruct", &bytes)?;
    Ok(Completed {
        manifest,
        out_dir: out_dir.to_path_buf(),
        summary: vec![certification_line(&report)],
    })
}

/// `certify --density PATH --out DIR`.
pub fn certify_file(density_path: &Path, out_dir: &Path, roof: RoofOptions) -> CliResult<Completed> {
    let bytes = read(density_path)?;
    let rho = load_three_qubit(density_path)?;
    let mut out = Output::create(out_dir)?;
    let report = certify(
        &rho,
        &CertifyOptions {
            roof,
            thresholds: Thresholds::default(),
        },
    )?;
    out.write("certification.json", &json(&report))?;
    let manifest = out.finish("certify", &bytes)?;
    Ok(Completed {
        manifest,
        out_dir: out_dir.to_path_buf(),
        summary: vec![certification_line(&report)],
    })
}

/// Device description of a preset as pretty JSON.
pub fn export_preset(name: &str) -> CliResult<String> {
    let cfg = SystemConfig::preset(name).map_err(|_| {
        CliError::config(format!(
            "unknown preset '{name}' (known: {})",
            SystemConfig::preset_names().join(", ")
        ))
    })?;
    let mut s = serde_json::to_string_pretty(&cfg).expect("device serializes");
    s.push('\n');
    Ok(s)
}
