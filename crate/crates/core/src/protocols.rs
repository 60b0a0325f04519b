//! Pulse schedules for vacuum Rabi scans and W-state preparation, and their
//! execution under closed-system or Lindblad dynamics.
//!
//! Schedules are sequences of piecewise-constant segments. A segment fixes the
//! detuning of every qubit; qubits pulsed to resonance are "participating" and
//! couple to the cavity, the rest stay parked at their bias point.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::device::{apply_crosstalk, SystemConfig};
use crate::dynamics::{
    collapse_operators, evolve_lindblad_converged, tavis_cummings, CollapseOperator, Propagator,
    DEFAULT_LINDBLAD_TOL,
};
use crate::hilbert::{cis, rotation, Axis, HilbertSpec, Populations, Subsystem};
use crate::optim::nelder_mead;
use crate::{hilbert, Density, Error, Operator, Result, State};

/// Instantaneous single-qubit rotation `exp(−iθσ/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub qubit: usize,
    pub axis: Axis,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSegment {
    /// Seconds.
    pub duration: f64,
    /// Realized detunings in rad/s, crosstalk already applied.
    pub detunings: Vec<f64>,
    /// Which qubits exchange energy with the cavity during the segment.
    pub coupled: Vec<bool>,
    /// Applied before the segment starts.
    pub boundary_rotations: Vec<Rotation>,
}

impl ScheduleSegment {
    /// Segment with the `resonant` qubits pulsed onto the cavity and the others
    /// left at their bias detuning.
    pub fn resonant(config: &SystemConfig, resonant: &[usize], duration: f64) -> Result<Self> {
        Ok(Self {
            duration,
            detunings: resonance_detunings(config, resonant)?,
            coupled: (0..config.num_qubits()).map(|j| resonant.contains(&j)).collect(),
            boundary_rotations: Vec::new(),
        })
    }

    pub fn with_rotation(mut self, rotation: Rotation) -> Self {
        self.boundary_rotations.push(rotation);
        self
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "segment duration must be non-negative, got {}",
                self.duration
            )));
        }
        for len in [self.detunings.len(), self.coupled.len()] {
            if len != num_qubits {
                return Err(Error::DimensionMismatch {
                    expected: num_qubits,
                    found: len,
                });
            }
        }
        for r in &self.boundary_rotations {
            if r.qubit >= num_qubits {
                return Err(Error::QubitIndex {
                    index: r.qubit,
                    num_qubits,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<ScheduleSegment>,
    initial_state: State,
}

impl PulseSchedule {
    pub fn new(segments: Vec<ScheduleSegment>, initial_state: State) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("schedule has no segments".into()));
        }
        let n = initial_state.spec().num_qubits();
        for s in &segments {
            s.validate(n)?;
        }
        Ok(Self {
            segments,
            initial_state,
        })
    }

    /// Starts from `|g…g,0⟩`.
    pub fn from_ground(config: &SystemConfig, segments: Vec<ScheduleSegment>) -> Result<Self> {
        Self::new(segments, State::ground(config.spec()))
    }

    pub fn segments(&self) -> &[ScheduleSegment] {
        &self.segments
    }

    pub fn initial_state(&self) -> &State {
        &self.initial_state
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Appends a segment.
    pub fn then(mut self, segment: ScheduleSegment) -> Result<Self> {
        segment.validate(self.initial_state.spec().num_qubits())?;
        self.segments.push(segment);
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseModel {
    /// Closed-system unitary evolution.
    #[default]
    Off,
    /// Lindblad evolution with the device `T1`, `T2` and cavity loss.
    Lindblad,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub noise: NoiseModel,
    /// Keep the cavity coupling of parked qubits (off-resonant exchange).
    pub couple_parked: bool,
    /// Step-halving convergence target for Lindblad segments.
    pub lindblad_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            noise: NoiseModel::Off,
            couple_parked: false,
            lindblad_tol: DEFAULT_LINDBLAD_TOL,
        }
    }
}

impl From<NoiseModel> for RunOptions {
    fn from(noise: NoiseModel) -> Self {
        Self {
            noise,
            ..Self::default()
        }
    }
}

/// Result of executing a schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum Evolved {
    Pure(State),
    Mixed(Density),
}

impl Evolved {
    pub fn to_density(&self) -> Density {
        match self {
            Evolved::Pure(s) => s.to_density(),
            Evolved::Mixed(r) => r.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&State> {
        match self {
            Evolved::Pure(s) => Some(s),
            Evolved::Mixed(_) => None,
        }
    }

    /// Qubit state with the cavity traced out.
    pub fn reduced_qubits(&self) -> Result<Density> {
        let spec = self.spec();
        let keep: Vec<Subsystem> = (0..spec.num_qubits()).map(Subsystem::Qubit).collect();
        hilbert::partial_trace(&self.to_density(), &keep)
    }

    fn spec(&self) -> HilbertSpec {
        match self {
            Evolved::Pure(s) => s.spec(),
            Evolved::Mixed(r) => r.spec(),
        }
    }

    fn probabilities(&self) -> Vec<f64> {
        match self {
            Evolved::Pure(s) => s.probabilities(),
            Evolved::Mixed(r) => r.probabilities(),
        }
    }

    fn rotate(&self, r: &Rotation) -> Result<Self> {
        let gate = rotation(r.axis, r.angle);
        Ok(match self {
            Evolved::Pure(s) => Evolved::Pure(s.apply_qubit_gate(&gate, r.qubit)?),
            Evolved::Mixed(rho) => Evolved::Mixed(rho.apply_qubit_gate(&gate, r.qubit)?),
        })
    }
}

impl Populations<f64> for Evolved {
    fn spec(&self) -> HilbertSpec {
        Evolved::spec(self)
    }

    fn probabilities(&self) -> Vec<f64> {
        Evolved::probabilities(self)
    }
}

/// Realized detunings when `resonant` qubits are pulsed onto the cavity
/// frequency. The commanded change `−Δ_bias` of each pulsed qubit passes
/// through the crosstalk matrix, so neighbours shift as well.
pub fn resonance_detunings(config: &SystemConfig, resonant: &[usize]) -> Result<Vec<f64>> {
    let n = config.num_qubits();
    let bias = config.bias_detunings();
    let mut commanded = vec![0.0; n];
    for &j in resonant {
        if j >= n {
            return Err(Error::QubitIndex {
                index: j,
                num_qubits: n,
            });
        }
        commanded[j] = -bias[j];
    }
    let shift = apply_crosstalk(&commanded, &config.crosstalk)?;
    Ok(bias.iter().zip(shift).map(|(b, s)| b + s).collect())
}

fn segment_hamiltonian(config: &SystemConfig, seg: &ScheduleSegment, couple_parked: bool) -> Result<Operator> {
    let g: Vec<f64> = config
        .couplings()
        .into_iter()
        .zip(&seg.coupled)
        .map(|(g, &c)| if c || couple_parked { g } else { 0.0 })
        .collect();
    tavis_cummings(config.spec(), &g, &seg.detunings)
}

fn evolve_segment(
    state: Evolved,
    h: &Operator,
    collapse: &[CollapseOperator<f64>],
    duration: f64,
    options: &RunOptions,
) -> Result<Evolved> {
    Ok(match state {
        Evolved::Pure(psi) => Evolved::Pure(Propagator::new(h)?.evolve(&psi, duration)?),
        Evolved::Mixed(rho) => Evolved::Mixed(
            evolve_lindblad_converged(&rho, h, collapse, duration, options.lindblad_tol)?.rho,
        ),
    })
}

fn initial(state: &State, options: &RunOptions) -> Evolved {
    match options.noise {
        NoiseModel::Off => Evolved::Pure(state.clone()),
        NoiseModel::Lindblad => Evolved::Mixed(state.to_density()),
    }
}

fn collapse_for(config: &SystemConfig, options: &RunOptions) -> Result<Vec<CollapseOperator<f64>>> {
    match options.noise {
        NoiseModel::Off => Ok(Vec::new()),
        NoiseModel::Lindblad => collapse_operators(config),
    }
}

/// Runs every segment of `schedule` in order.
pub fn execute(config: &SystemConfig, schedule: &PulseSchedule, options: &RunOptions) -> Result<Evolved> {
    config.validate()?;
    if schedule.initial_state().spec() != config.spec() {
        return Err(Error::DimensionMismatch {
            expected: config.spec().dim(),
            found: schedule.initial_state().dim(),
        });
    }
    let collapse = collapse_for(config, options)?;
    let mut state = initial(schedule.initial_state(), options);
    for seg in schedule.segments() {
        for r in &seg.boundary_rotations {
            state = state.rotate(r)?;
        }
        let h = segment_hamiltonian(config, seg, options.couple_parked)?;
        state = evolve_segment(state, &h, &collapse, seg.duration, options)?;
    }
    Ok(state)
}

/// `π/(2|g|)`: time for a full qubit-to-cavity swap.
pub fn swap_time(config: &SystemConfig, qubit: usize) -> Result<f64> {
    let g = coupling_of(config, qubit)?;
    Ok(PI / (2.0 * g.abs()))
}

fn coupling_of(config: &SystemConfig, qubit: usize) -> Result<f64> {
    config.spec().check_qubit(qubit)?;
    let g = config.couplings()[qubit];
    if g == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "qubit {qubit} has zero coupling"
        )));
    }
    Ok(g)
}

/// `π` pulse on the detuned source qubit, then a swap into the cavity.
pub fn prepare_single_photon(config: &SystemConfig, source_qubit: usize) -> Result<PulseSchedule> {
    let tau0 = swap_time(config, source_qubit)?;
    let seg = ScheduleSegment::resonant(config, &[source_qubit], tau0)?.with_rotation(Rotation {
        qubit: source_qubit,
        axis: Axis::X,
        angle: PI,
    });
    PulseSchedule::from_ground(config, vec![seg])
}

/// Populations versus collective interaction time.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrace {
    /// Seconds.
    pub times: Vec<f64>,
    /// `qubit_populations[j][k]`: excited population of qubit `j` at `times[k]`.
    pub qubit_populations: Vec<Vec<f64>>,
    /// Probability of `|g…g⟩` (any photon number).
    pub ground_population: Vec<f64>,
    /// `⟨â†â⟩`.
    pub cavity_population: Vec<f64>,
}

impl PopulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Total excitation `⟨â†â⟩ + Σ_j P_j` at each point.
    pub fn total_excitation(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                self.cavity_population[k]
                    + self.qubit_populations.iter().map(|p| p[k]).sum::<f64>()
            })
            .collect()
    }

    fn push(&mut self, t: f64, state: &Evolved) {
        let probs = state.probabilities();
        let spec = state.spec();
        self.times.push(t);
        for (j, series) in self.qubit_populations.iter_mut().enumerate() {
            series.push(
                probs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (i >> j) & 1 == 1)
                    .map(|(_, p)| p)
                    .sum(),
            );
        }
        self.ground_population.push(
            probs
                .iter()
                .enumerate()
                .filter(|(i, _)| spec.qubit_bits_of(*i) == 0)
                .map(|(_, p)| p)
                .sum(),
        );
        self.cavity_population.push(
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| spec.photons_of(i) as f64 * p)
                .sum(),
        );
    }
}

/// Vacuum Rabi scan: a photon is prepared from the first participating qubit,
/// then all participating qubits sit on resonance for each `τ` of the grid.
pub fn rabi_scan(
    config: &SystemConfig,
    participating: &[usize],
    tau_grid: &[f64],
    noise: NoiseModel,
) -> Result<PopulationTrace> {
    rabi_scan_with(config, participating, tau_grid, &RunOptions::from(noise))
}

pub fn rabi_scan_with(
    config: &SystemConfig,
    participating: &[usize],
    tau_grid: &[f64],
    options: &RunOptions,
) -> Result<PopulationTrace> {
    if participating.is_empty() {
        return Err(Error::EmptySelection);
    }
    if tau_grid.is_empty() {
        return Err(Error::InsufficientData("empty interaction-time grid".into()));
    }
    if tau_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("interaction times must be non-negative".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("interaction-time grid must be ascending".into()));
    }
    for (k, q) in participating.iter().enumerate() {
        if participating[..k].contains(q) {
            return Err(Error::InvalidParameter(format!("qubit {q} listed twice")));
        }
    }

    let source = participating[0];
    let photon = execute(config, &prepare_single_photon(config, source)?, options)?;
    let seg = ScheduleSegment::resonant(config, participating, 0.0)?;
    let h = segment_hamiltonian(config, &seg, options.couple_parked)?;

    let n = config.num_qubits();
    let mut trace = PopulationTrace {
        times: Vec::with_capacity(tau_grid.len()),
        qubit_populations: vec![Vec::with_capacity(tau_grid.len()); n],
        ground_population: Vec::with_capacity(tau_grid.len()),
        cavity_population: Vec::with_capacity(tau_grid.len()),
    };

    match &photon {
        Evolved::Pure(psi) => {
            let prop = Propagator::new(&h)?;
            let states: Vec<Evolved> = tau_grid
                .par_iter()
                .map(|&t| prop.evolve(psi, t).map(Evolved::Pure))
                .collect::<Result<_>>()?;
            for (&t, s) in tau_grid.iter().zip(&states) {
                trace.push(t, s);
            }
        }
        Evolved::Mixed(_) => {
            let collapse = collapse_for(config, options)?;
            let mut state = photon.clone();
            let mut now = 0.0;
            for &t in tau_grid {
                if t > now {
                    state = evolve_segment(state, &h, &collapse, t - now, options)?;
                    now = t;
                }
                trace.push(t, &state);
            }
        }
    }
    Ok(trace)
}

/// Total coupling `G = √(Σ_j g_j²)` in rad/s.
pub fn collective_coupling(config: &SystemConfig, participating: &[usize]) -> Result<f64> {
    let g = config.couplings();
    let mut sum = 0.0;
    for &j in participating {
        config.spec().check_qubit(j)?;
        sum += g[j] * g[j];
    }
    Ok(sum.sqrt())
}

/// `τ_W = π/(2G)` over all qubits.
pub fn collective_w_time(config: &SystemConfig) -> Result<f64> {
    let all: Vec<usize> = (0..config.num_qubits()).collect();
    let g = collective_coupling(config, &all)?;
    if g == 0.0 {
        return Err(Error::InvalidParameter("all couplings are zero".into()));
    }
    Ok(PI / (2.0 * g))
}

/// Swap times `(τ₁, τ₂, τ₃)` for qubits C, B, A: the `k`-th qubit from the end
/// hands over, or picks up, the share that leaves each qubit with `1/N`.
pub fn sequential_w_times(config: &SystemConfig) -> Result<Vec<f64>> {
    let n = config.num_qubits();
    let mut times = Vec::with_capacity(n);
    for (step, qubit) in (0..n).rev().enumerate() {
        let g = coupling_of(config, qubit)?.abs();
        let remaining = (n - step) as f64;
        // first step leaves 1/n on the source; later steps take 1/remaining of the photon
        let fraction = if step == 0 {
            (remaining - 1.0) / remaining
        } else {
            1.0 / remaining
        };
        times.push(fraction.sqrt().asin() / g);
    }
    Ok(times)
}

fn require_three(config: &SystemConfig) -> Result<()> {
    if config.num_qubits() != 3 {
        return Err(Error::InvalidParameter(format!(
            "W-state preparation needs 3 qubits, configured {}",
            config.num_qubits()
        )));
    }
    Ok(())
}

/// Photon from qubit A, then all qubits on resonance for `τ_W`.
pub fn collective_w_schedule(config: &SystemConfig) -> Result<PulseSchedule> {
    require_three(config)?;
    let all: Vec<usize> = (0..config.num_qubits()).collect();
    prepare_single_photon(config, 0)?.then(ScheduleSegment::resonant(
        config,
        &all,
        collective_w_time(config)?,
    )?)
}

/// Excite C and swap 2/3 into the cavity, then B takes half, then A takes the rest.
pub fn sequential_w_schedule(config: &SystemConfig) -> Result<PulseSchedule> {
    require_three(config)?;
    let times = sequential_w_times(config)?;
    let n = config.num_qubits();
    let mut segments = Vec::with_capacity(n);
    for (step, qubit) in (0..n).rev().enumerate() {
        let mut seg = ScheduleSegment::resonant(config, &[qubit], times[step])?;
        if step == 0 {
            seg = seg.with_rotation(Rotation {
                qubit,
                axis: Axis::X,
                angle: PI,
            });
        }
        segments.push(seg);
    }
    PulseSchedule::from_ground(config, segments)
}

/// Reduced three-qubit state after the collective protocol.
pub fn prepare_w_collective(config: &SystemConfig, noise: NoiseModel) -> Result<Density> {
    prepare_w_collective_with(config, &RunOptions::from(noise))
}

pub fn prepare_w_collective_with(config: &SystemConfig, options: &RunOptions) -> Result<Density> {
    execute(config, &collective_w_schedule(config)?, options)?.reduced_qubits()
}

/// Reduced three-qubit state after the sequential protocol.
pub fn prepare_w_sequential(config: &SystemConfig, noise: NoiseModel) -> Result<Density> {
    prepare_w_sequential_with(config, &RunOptions::from(noise))
}

pub fn prepare_w_sequential_with(config: &SystemConfig, options: &RunOptions) -> Result<Density> {
    execute(config, &sequential_w_schedule(config)?, options)?.reduced_qubits()
}

/// `⟨â†â⟩`.
pub fn cavity_population<P: Populations<f64>>(state: &P) -> f64 {
    state.mean_photons()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCorrection {
    pub rho: Density,
    /// Per-qubit `R_z` angles in `(−π, π]`.
    pub angles: Vec<f64>,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

/// Finds local `R_z(φ_j) = exp(−iφ_jσ_z/2)` maximizing `⟨ψ|RρR†|ψ⟩`: a grid
/// seed followed by simplex refinement. Never lowers the fidelity.
pub fn apply_phase_correction(rho: &Density, target: &State) -> Result<PhaseCorrection> {
    let spec = rho.spec();
    if spec.has_cavity() {
        return Err(Error::InvalidSpace("phase correction acts on qubit-only states".into()));
    }
    if target.spec() != spec {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: target.dim(),
        });
    }
    let n = spec.num_qubits();
    let d = spec.dim();
    let e = rho.entries();
    let psi = target.amplitudes();
    // signs[i][j] = ±1 for qubit j in |e⟩/|g⟩ in basis state i
    let signs: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..n).map(|j| if (i >> j) & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect();
    let fidelity = |phi: &[f64]| -> f64 {
        let r: Vec<_> = (0..d)
            .map(|i| {
                let a: f64 = signs[i].iter().zip(phi).map(|(s, p)| s * p).sum();
                cis(-a / 2.0)
            })
            .collect();
        let w: Vec<_> = (0..d).map(|i| psi[i].conj() * r[i]).collect();
        let mut acc = nalgebra::Complex::new(0.0, 0.0);
        for i in 0..d {
            if w[i].norm() == 0.0 {
                continue;
            }
            for k in 0..d {
                acc += w[i] * e[(i, k)] * w[k].conj();
            }
        }
        acc.re
    };

    let zero = vec![0.0; n];
    let before = fidelity(&zero);
    let per_axis: usize = if n <= 3 { 8 } else { 4 };
    let total = per_axis.pow(n as u32);
    let mut best = (zero.clone(), before);
    for k in 0..total {
        let mut rem = k;
        let mut phi = Vec::with_capacity(n);
        for _ in 0..n {
            phi.push(2.0 * PI * (rem % per_axis) as f64 / per_axis as f64);
            rem /= per_axis;
        }
        let f = fidelity(&phi);
        if f > best.1 {
            best = (phi, f);
        }
    }
    let (refined, neg) = nelder_mead(|p| -fidelity(p), &best.0, 0.3, 1e-15, 4000);
    let (mut angles, after) = if -neg >= before { (refined, -neg) } else { (zero, before) };
    for a in &mut angles {
        *a = wrap_angle(*a);
    }

    let mut out = rho.clone();
    for (j, &a) in angles.iter().enumerate() {
        if a != 0.0 {
            out = out.apply_qubit_gate(&rotation(Axis::Z, a), j)?;
        }
    }
    let after = after.max(before);
    Ok(PhaseCorrection {
        rho: out,
        angles,
        fidelity_before: before,
        fidelity_after: after,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> SystemConfig {
        SystemConfig::paper_default()
    }

    #[test]
    fn photon_schedule_timing() {
        let s = prepare_single_photon(&paper(), 0).unwrap();
        assert_eq!(s.segments().len(), 1);
        assert!((s.total_duration() - 4.7438e-9).abs() < 1e-12);
        assert!(prepare_single_photon(&paper(), 3).is_err());
    }

    #[test]
    fn photon_fills_cavity() {
        let cfg = paper();
        for q in 0..3 {
            let out = execute(&cfg, &prepare_single_photon(&cfg, q).unwrap(), &RunOptions::default()).unwrap();
            assert!((cavity_population(&out) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn resonance_with_identity_crosstalk() {
        let cfg = paper();
        let det = resonance_detunings(&cfg, &[1]).unwrap();
        let bias = cfg.bias_detunings();
        assert_eq!(det[1], 0.0);
        assert_eq!(det[0], bias[0]);
        assert_eq!(det[2], bias[2]);
    }

    #[test]
    fn crosstalk_shifts_neighbours() {
        let cfg = SystemConfig::preset(crate::device::PAPER_CROSSTALK_PRESET).unwrap();
        let det = resonance_detunings(&cfg, &[2]).unwrap();
        let bias = cfg.bias_detunings();
        assert!(det[2].abs() < 1e-3);
        assert!((det[0] - (bias[0] - 0.02 * bias[2])).abs() < 1e-3);
    }

    #[test]
    fn scan_rejects_bad_grids() {
        let cfg = paper();
        assert!(rabi_scan(&cfg, &[0], &[], NoiseModel::Off).is_err());
        assert!(rabi_scan(&cfg, &[0], &[2e-9, 1e-9], NoiseModel::Off).is_err());
        assert!(rabi_scan(&cfg, &[], &[1e-9], NoiseModel::Off).is_err());
        assert!(rabi_scan(&cfg, &[0, 0], &[1e-9], NoiseModel::Off).is_err());
    }

    #[test]
    fn sequential_times() {
        let t = sequential_w_times(&paper()).unwrap();
        assert!((t[0] - 2.72e-9).abs() < 0.01e-9);
        assert!((t[1] - 2.26e-9).abs() < 0.01e-9);
        assert!((t[2] - 4.74e-9).abs() < 0.01e-9);
        assert!((collective_w_time(&paper()).unwrap() - 2.64e-9).abs() < 0.01e-9);
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(-0.1) + 0.1).abs() < 1e-15);
    }
}
