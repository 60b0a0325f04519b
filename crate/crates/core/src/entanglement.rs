//! Fidelity to target states, the W witness, the three-tangle of pure states,
//! and an upper bound on its convex roof for mixed states.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{creal, cis, CMatrix, CVector, DensityMatrix, HilbertSpec, OperatorMatrix, QuantumState};
use crate::{Complex, Error, Real, Result};

pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_BUDGET: usize = 2000;
pub const DEFAULT_TANGLE_THRESHOLD: f64 = 0.1;
pub const DEFAULT_GHZ_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetLabel {
    WPaper,
    WPlus,
    Ghz,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetState<R: Real> {
    state: QuantumState<R>,
    label: TargetLabel,
}

fn three_qubits() -> HilbertSpec {
    HilbertSpec::qubits(3).expect("three qubits")
}

impl<R: Real> TargetState<R> {
    /// `(|g,g,e⟩ + |g,e,g⟩ − |e,g,g⟩)/√3` with the sign on qubit A, whose
    /// coupling is negative.
    pub fn w_paper() -> Self {
        Self::w_with_signs([-1.0, 1.0, 1.0], TargetLabel::WPaper)
    }

    /// Symmetric W state.
    pub fn w_plus() -> Self {
        Self::w_with_signs([1.0, 1.0, 1.0], TargetLabel::WPlus)
    }

    /// `(|ggg⟩ + |eee⟩)/√2`.
    pub fn ghz() -> Self {
        let mut a = CVector::zeros(8);
        let s = creal(R::lit(0.5).sqrt());
        a[0] = s;
        a[7] = s;
        Self {
            state: QuantumState::new(three_qubits(), a).expect("normalized"),
            label: TargetLabel::Ghz,
        }
    }

    /// Any normalized qubit-only state.
    pub fn custom(state: QuantumState<R>) -> Result<Self> {
        if state.spec().has_cavity() {
            return Err(Error::InvalidSpace("target must be a qubit-only state".into()));
        }
        Ok(Self {
            state,
            label: TargetLabel::Custom,
        })
    }

    fn w_with_signs(signs: [f64; 3], label: TargetLabel) -> Self {
        let mut a = CVector::zeros(8);
        let s = R::one() / R::lit(3.0).sqrt();
        for (j, sign) in signs.iter().enumerate() {
            a[1 << j] = creal(s * R::lit(*sign));
        }
        Self {
            state: QuantumState::new(three_qubits(), a).expect("normalized"),
            label,
        }
    }

    pub fn state(&self) -> &QuantumState<R> {
        &self.state
    }

    pub fn label(&self) -> TargetLabel {
        self.label
    }
}

/// `⟨ψ_t|ρ|ψ_t⟩`.
pub fn fidelity<R: Real>(rho: &DensityMatrix<R>, target: &TargetState<R>) -> Result<R> {
    if rho.spec() != target.state.spec() {
        return Err(Error::DimensionMismatch {
            expected: target.state.dim(),
            found: rho.dim(),
        });
    }
    let psi = target.state.amplitudes();
    let v = rho.entries() * psi;
    Ok(psi.dotc(&v).re)
}

/// `2/3·I − |W⟩⟨W|` for the reference W state `w_paper`.
pub fn witness_operator<R: Real>() -> OperatorMatrix<R> {
    let w = TargetState::<R>::w_paper();
    let id = OperatorMatrix::identity(three_qubits()).scale(R::lit(2.0) / R::lit(3.0));
    id.add(&OperatorMatrix::projector(w.state()).scale(-R::one()))
        .expect("same space")
}

/// `Tr(Mρ) = 2/3 − F(ρ, Ψ_W)`; negative values certify tripartite entanglement.
pub fn witness_value<R: Real>(rho: &DensityMatrix<R>) -> Result<R> {
    Ok(R::lit(2.0) / R::lit(3.0) - fidelity(rho, &TargetState::w_paper())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangleKind {
    PureExact,
    MixedUpperBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangleEstimate<R: Real> {
    pub value: R,
    pub kind: TangleKind,
    pub decomposition_size: usize,
    pub iterations: usize,
}

/// Unnormalized hyperdeterminant form `4|d₁ − 2d₂ + 4d₃|`; scales as `‖ψ‖⁴`.
fn tangle_raw<R: Real>(a: &[Complex<R>]) -> R {
    let x = |i: usize, j: usize, k: usize| a[4 * i + 2 * j + k];
    let d1 = x(0, 0, 0).powi(2) * x(1, 1, 1).powi(2)
        + x(0, 0, 1).powi(2) * x(1, 1, 0).powi(2)
        + x(0, 1, 0).powi(2) * x(1, 0, 1).powi(2)
        + x(1, 0, 0).powi(2) * x(0, 1, 1).powi(2);
    let d2 = x(0, 0, 0) * x(1, 1, 1) * x(0, 1, 1) * x(1, 0, 0)
        + x(0, 0, 0) * x(1, 1, 1) * x(1, 0, 1) * x(0, 1, 0)
        + x(0, 0, 0) * x(1, 1, 1) * x(1, 1, 0) * x(0, 0, 1)
        + x(0, 1, 1) * x(1, 0, 0) * x(1, 0, 1) * x(0, 1, 0)
        + x(0, 1, 1) * x(1, 0, 0) * x(1, 1, 0) * x(0, 0, 1)
        + x(1, 0, 1) * x(0, 1, 0) * x(1, 1, 0) * x(0, 0, 1);
    let d3 = x(0, 0, 0) * x(1, 1, 0) * x(1, 0, 1) * x(0, 1, 1)
        + x(1, 1, 1) * x(0, 0, 1) * x(0, 1, 0) * x(1, 0, 0);
    let two = creal(R::lit(2.0));
    let four = creal(R::lit(4.0));
    R::lit(4.0) * (d1 - two * d2 + four * d3).norm_sqr().sqrt()
}

fn require_three_qubit(spec: HilbertSpec) -> Result<()> {
    if spec != three_qubits() {
        return Err(Error::InvalidSpace(format!(
            "three-qubit state without cavity required, got dimension {}",
            spec.dim()
        )));
    }
    Ok(())
}

pub fn three_tangle_pure<R: Real>(psi: &QuantumState<R>) -> Result<TangleEstimate<R>> {
    require_three_qubit(psi.spec())?;
    let n2 = psi.amplitudes().norm_squared();
    let value = tangle_raw(psi.amplitudes().as_slice()) / (n2 * n2);
    Ok(TangleEstimate {
        value: value.min(R::one()).max(R::zero()),
        kind: TangleKind::PureExact,
        decomposition_size: 1,
        iterations: 0,
    })
}

/// Average tangle `Σ_i p_i τ(ψ_i/√p_i) = Σ_i τ_raw(ψ_i)/‖ψ_i‖²` of a
/// subnormalized ensemble.
fn ensemble_term<R: Real>(v: &CVector<R>) -> R {
    let p = v.norm_squared();
    if p <= R::lit(1e-300) {
        R::zero()
    } else {
        tangle_raw(v.as_slice()) / p
    }
}

/// Convex-roof search settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoofOptions {
    pub restarts: usize,
    /// Proposals per restart.
    pub budget: usize,
    pub seed: u64,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            budget: DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

/// Upper bound on the convex-roof three-tangle using defaults.
pub fn three_tangle_mixed<R: Real>(
    rho: &DensityMatrix<R>,
    restarts: usize,
    budget: usize,
) -> Result<TangleEstimate<R>> {
    three_tangle_mixed_with(
        rho,
        &RoofOptions {
            restarts,
            budget,
            ..RoofOptions::default()
        },
    )
}

/// Searches decompositions `ψ_i = Σ_k U_ik √λ_k |v_k⟩` of size `2r` (isometric
/// mixing of the eigen-ensemble) by random two-element unitary mixing moves,
/// keeping only improvements. Restart 0 starts from the eigen-ensemble itself.
pub fn three_tangle_mixed_with<R: Real>(
    rho: &DensityMatrix<R>,
    options: &RoofOptions,
) -> Result<TangleEstimate<R>> {
    require_three_qubit(rho.spec())?;
    let eig = rho.entries().clone().symmetric_eigen();
    let cutoff = R::lit(1e-12);
    let mut ensemble: Vec<CVector<R>> = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            ensemble.push(eig.eigenvectors.column(k) * creal(lambda.sqrt()));
        }
    }
    if ensemble.is_empty() {
        return Err(Error::InvalidState("density matrix has no positive eigenvalue".into()));
    }
    let rank = ensemble.len();
    if rank == 1 {
        // a rank-one state has a single decomposition; the bound is exact
        let psi = QuantumState::normalized(rho.spec(), ensemble[0].clone())?;
        return Ok(TangleEstimate {
            kind: TangleKind::MixedUpperBound,
            ..three_tangle_pure(&psi)?
        });
    }
    let size = 2 * rank;
    ensemble.resize(size, CVector::zeros(8));

    let restarts = options.restarts.max(1);
    let results: Vec<(R, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(r as u64));
            let mut members = ensemble.clone();
            if r > 0 {
                scramble(&mut members, &mut rng);
            }
            local_search(members, options.budget, &mut rng)
        })
        .collect();
    let (value, iterations) = results
        .iter()
        .fold((R::max_value().unwrap(), 0), |(best, it), &(v, i)| {
            (if v < best { v } else { best }, it + i)
        });
    Ok(TangleEstimate {
        value: value.min(R::one()).max(R::zero()),
        kind: TangleKind::MixedUpperBound,
        decomposition_size: size,
        iterations,
    })
}

fn mix_pair<R: Real>(a: &CVector<R>, b: &CVector<R>, theta: R, phi: R) -> (CVector<R>, CVector<R>) {
    let (s, c) = theta.sin_cos();
    let ph = cis(phi);
    let na = a * creal(c) - b * (ph.conj() * creal(s));
    let nb = a * (ph * creal(s)) + b * creal(c);
    (na, nb)
}

fn scramble<R: Real>(members: &mut [CVector<R>], rng: &mut ChaCha8Rng) {
    let m = members.len();
    for _ in 0..4 * m * m {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let theta = R::lit(rng.random_range(0.0..std::f64::consts::PI));
        let phi = R::lit(rng.random_range(0.0..std::f64::consts::TAU));
        let (a, b) = mix_pair(&members[i], &members[j], theta, phi);
        members[i] = a;
        members[j] = b;
    }
}

fn local_search<R: Real>(mut members: Vec<CVector<R>>, budget: usize, rng: &mut ChaCha8Rng) -> (R, usize) {
    let m = members.len();
    let mut terms: Vec<R> = members.iter().map(ensemble_term).collect();
    let mut total = terms.iter().fold(R::zero(), |a, b| a + *b);
    let mut step = 0.5f64;
    let mut iterations = 0;
    for _ in 0..budget {
        if total <= R::lit(1e-14) {
            break;
        }
        iterations += 1;
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let theta = R::lit(step * z);
        let phi = R::lit(rng.random_range(0.0..std::f64::consts::TAU));
        let (a, b) = mix_pair(&members[i], &members[j], theta, phi);
        let (ta, tb) = (ensemble_term(&a), ensemble_term(&b));
        let candidate = total - terms[i] - terms[j] + ta + tb;
        if candidate < total {
            members[i] = a;
            members[j] = b;
            terms[i] = ta;
            terms[j] = tb;
            total = candidate;
            step = (step * 1.3).min(std::f64::consts::FRAC_PI_2);
        } else {
            step = (step * 0.97).max(1e-4);
        }
    }
    // recompute from scratch to drop accumulated rounding
    let exact = members.iter().map(ensemble_term).fold(R::zero(), |a, b| a + b);
    (exact, iterations)
}

/// Average three-tangle of an explicit ensemble `{(p_i, ψ_i)}`.
pub fn ensemble_tangle<R: Real>(ensemble: &[(R, QuantumState<R>)]) -> Result<R> {
    let mut acc = R::zero();
    for (p, psi) in ensemble {
        acc += *p * three_tangle_pure(psi)?.value;
    }
    Ok(acc)
}

/// `Σ_i p_i |ψ_i⟩⟨ψ_i|`.
pub fn ensemble_density<R: Real>(ensemble: &[(R, QuantumState<R>)]) -> Result<DensityMatrix<R>> {
    let first = ensemble.first().ok_or(Error::EmptySelection)?;
    let spec = first.1.spec();
    let d = spec.dim();
    let mut m = CMatrix::zeros(d, d);
    for (p, psi) in ensemble {
        let a = psi.amplitudes();
        m += a * a.adjoint() * creal(*p);
    }
    DensityMatrix::new(spec, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "W_class")]
    WClass,
    #[serde(rename = "GHZ_class")]
    GhzClass,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tangle: f64,
    pub ghz: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tangle: DEFAULT_TANGLE_THRESHOLD,
            ghz: DEFAULT_GHZ_THRESHOLD,
        }
    }
}

/// W class needs a small tangle and a negative witness; GHZ class a large tangle.
pub fn classify(witness: f64, tangle_bound: f64, thresholds: &Thresholds) -> Classification {
    if tangle_bound < thresholds.tangle && witness < 0.0 {
        Classification::WClass
    } else if tangle_bound > thresholds.ghz {
        Classification::GhzClass
    } else {
        Classification::Inconclusive
    }
}

pub fn classify_w_vs_ghz<R: Real>(rho: &DensityMatrix<R>, thresholds: &Thresholds) -> Result<Classification> {
    let w = witness_value(rho)?.f64();
    let t = three_tangle_mixed_with(rho, &RoofOptions::default())?.value.f64();
    Ok(classify(w, t, thresholds))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStats {
    pub kind: TangleKind,
    pub restarts: usize,
    pub budget: usize,
    pub decomposition_size: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub fidelity: f64,
    pub witness: f64,
    pub tangle_bound: f64,
    pub classification: Classification,
    pub optimizer_stats: OptimizerStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CertifyOptions {
    pub roof: RoofOptions,
    pub thresholds: Thresholds,
}

/// Fidelity to `Ψ_W`, witness, tangle bound and classification.
pub fn certify<R: Real>(rho: &DensityMatrix<R>, options: &CertifyOptions) -> Result<CertificationReport> {
    let fid = fidelity(rho, &TargetState::w_paper())?;
    let witness = witness_value(rho)?;
    let tangle = three_tangle_mixed_with(rho, &options.roof)?;
    Ok(CertificationReport {
        fidelity: fid.f64(),
        witness: witness.f64(),
        tangle_bound: tangle.value.f64(),
        classification: classify(witness.f64(), tangle.value.f64(), &options.thresholds),
        optimizer_stats: OptimizerStats {
            kind: tangle.kind,
            restarts: options.roof.restarts,
            budget: options.roof.budget,
            decomposition_size: tangle.decomposition_size,
            iterations: tangle.iterations,
        },
    })
}

/// Reads a three-qubit state from amplitudes indexed `4c + 2b + a`.
pub fn three_qubit_state<R: Real>(amplitudes: &[Complex<R>]) -> Result<QuantumState<R>> {
    QuantumState::normalized(three_qubits(), DVector::from_column_slice(amplitudes))
}
