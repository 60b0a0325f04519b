//! Tavis-Cummings Hamiltonian in the frame rotating at the cavity frequency,
//! exact unitary propagation, Lindblad propagation, and an independent
//! single-excitation propagator used as an oracle.
//!
//! All Hamiltonians are `H/ħ` in rad/s; times are in seconds.

use nalgebra::{ComplexField, DVector};

use crate::device::{decoherence_rates, SystemConfig};
use crate::hilbert::{
    cavity_annihilation, cis, cplx, creal, embed_qubit_operator, hermitize, pauli, trace, CMatrix,
    CVector, DensityMatrix, HilbertSpec, OperatorMatrix, QuantumState,
};
use crate::{Error, Real, Result};

/// Default Lindblad step (10 ps).
pub const DEFAULT_DT: f64 = 10e-12;
/// Convergence target between successive step halvings.
pub const DEFAULT_LINDBLAD_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermLabel {
    /// `(Δ_j/2)·σ_z^j`
    QubitDetuning(usize),
    /// `g_j(â†σ⁻_j + σ⁺_j â)`
    Coupling(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm<R: Real> {
    pub matrix: OperatorMatrix<R>,
    pub label: TermLabel,
}

/// The individual summands of the rotating-frame Hamiltonian.
pub fn hamiltonian_terms<R: Real>(
    spec: HilbertSpec,
    couplings: &[R],
    detunings: &[R],
) -> Result<Vec<HamiltonianTerm<R>>> {
    let n = spec.num_qubits();
    for len in [couplings.len(), detunings.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let a = cavity_annihilation::<R>(spec)?;
    let a_dag = a.adjoint();
    let mut terms = Vec::with_capacity(2 * n);
    for j in 0..n {
        let sz = embed_qubit_operator(&pauli::sigma_z(), j, spec)?;
        terms.push(HamiltonianTerm {
            matrix: sz.scale(detunings[j] / R::lit(2.0)),
            label: TermLabel::QubitDetuning(j),
        });
        let sm = embed_qubit_operator(&pauli::sigma_minus(), j, spec)?;
        let hop = a_dag.compose(&sm)?;
        let exchange = hop.add(&hop.adjoint())?;
        terms.push(HamiltonianTerm {
            matrix: exchange.scale(couplings[j]),
            label: TermLabel::Coupling(j),
        });
    }
    Ok(terms)
}

/// `H/ħ = Σ_j [(Δ_j/2)σ_z^j + g_j(â†σ⁻_j + σ⁺_j â)]`.
pub fn tavis_cummings<R: Real>(
    spec: HilbertSpec,
    couplings: &[R],
    detunings: &[R],
) -> Result<OperatorMatrix<R>> {
    let terms = hamiltonian_terms(spec, couplings, detunings)?;
    let sum = terms
        .iter()
        .fold(CMatrix::zeros(spec.dim(), spec.dim()), |acc, t| acc + t.matrix.entries());
    OperatorMatrix::new(spec, hermitize(&sum))
}

/// Hamiltonian of a configured device for the given detunings (rad/s).
pub fn build_hamiltonian<R: Real>(config: &SystemConfig, detunings: &[R]) -> Result<OperatorMatrix<R>> {
    let g: Vec<R> = config.couplings().into_iter().map(R::lit).collect();
    tavis_cummings(config.spec(), &g, detunings)
}

/// `N_exc = â†â + Σ_j (σ_z^j + 1)/2`.
pub fn excitation_number<R: Real>(spec: HilbertSpec) -> Result<OperatorMatrix<R>> {
    let d = spec.dim();
    let diag = DVector::from_fn(d, |i, _| {
        let bits = spec.qubit_bits_of(i).count_ones() as usize;
        creal(R::from_usize(bits + spec.photons_of(i)).unwrap())
    });
    OperatorMatrix::new(spec, CMatrix::from_diagonal(&diag))
}

/// Cached eigendecomposition of a time-independent Hamiltonian.
#[derive(Clone, Debug)]
pub struct Propagator<R: Real> {
    spec: HilbertSpec,
    eigenvalues: DVector<R>,
    eigenvectors: CMatrix<R>,
}

impl<R: Real> Propagator<R> {
    pub fn new(h: &OperatorMatrix<R>) -> Result<Self> {
        let dev = h.hermitian_deviation();
        if dev > R::tol(1e-10) * (R::one() + h.entries().norm()) {
            return Err(Error::NotHermitian(dev.f64()));
        }
        let eig = hermitize(h.entries()).symmetric_eigen();
        Ok(Self {
            spec: h.spec(),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<R> {
        &self.eigenvalues
    }

    /// `exp(−iHt)`.
    pub fn unitary(&self, t: R) -> CMatrix<R> {
        let phases = self
            .eigenvalues
            .map(|e| cis(-e * t));
        let v = &self.eigenvectors;
        v * CMatrix::from_diagonal(&phases) * v.adjoint()
    }

    pub fn evolve(&self, state: &QuantumState<R>, t: R) -> Result<QuantumState<R>> {
        if state.spec() != self.spec {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                found: state.dim(),
            });
        }
        let v = &self.eigenvectors;
        let mut coeffs = v.adjoint() * state.amplitudes();
        for (c, e) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= cis(-*e * t);
        }
        let out = v * coeffs;
        // renormalize away rounding drift
        QuantumState::normalized(self.spec, out)
    }
}

/// `exp(−iHt)|ψ⟩` via eigendecomposition.
pub fn evolve_unitary<R: Real>(
    state: &QuantumState<R>,
    h: &OperatorMatrix<R>,
    t: R,
) -> Result<QuantumState<R>> {
    Propagator::new(h)?.evolve(state, t)
}

/// Jump operator with its rate.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseOperator<R: Real> {
    pub matrix: OperatorMatrix<R>,
    pub rate: R,
}

impl<R: Real> CollapseOperator<R> {
    pub fn new(matrix: OperatorMatrix<R>, rate: R) -> Result<Self> {
        if !(rate >= R::zero()) {
            return Err(Error::InvalidParameter(format!("negative collapse rate {rate}")));
        }
        Ok(Self { matrix, rate })
    }
}

/// Standard channels: `σ⁻_j` at `1/T1`, `σ_z^j` at `γ_φ/2`, `â` at `κ`.
pub fn collapse_operators<R: Real>(config: &SystemConfig) -> Result<Vec<CollapseOperator<R>>> {
    let spec = config.spec();
    let mut ops = Vec::new();
    for (j, q) in config.qubits.iter().enumerate() {
        let rates = decoherence_rates(q, &config.resonator);
        ops.push(CollapseOperator::new(
            embed_qubit_operator(&pauli::sigma_minus(), j, spec)?,
            R::lit(rates.gamma1),
        )?);
        if rates.gamma_phi > 0.0 {
            ops.push(CollapseOperator::new(
                embed_qubit_operator(&pauli::sigma_z(), j, spec)?,
                R::lit(rates.gamma_phi / 2.0),
            )?);
        }
    }
    ops.push(CollapseOperator::new(
        cavity_annihilation(spec)?,
        R::lit(config.resonator.kappa()),
    )?);
    Ok(ops)
}

/// Smallest set of basis indices containing the support of `rho` that is closed
/// under `H`, every `L_k` and every `L_k†L_k`. The master equation never leaves it.
fn invariant_support<R: Real>(
    rho: &CMatrix<R>,
    h: &CMatrix<R>,
    collapse: &[CollapseOperator<R>],
) -> Vec<usize> {
    let d = rho.nrows();
    let cutoff = R::lit(1e-14);
    let mut in_set = vec![false; d];
    let mut queue = Vec::new();
    for i in 0..d {
        if (0..d).any(|j| rho[(i, j)].modulus() > cutoff) {
            in_set[i] = true;
            queue.push(i);
        }
    }
    let zero = creal(R::zero());
    let mut maps: Vec<CMatrix<R>> = vec![h.clone()];
    for c in collapse.iter().filter(|c| c.rate > R::zero()) {
        let l = c.matrix.entries();
        maps.push(l.adjoint() * l);
        maps.push(l.clone());
    }
    while let Some(i) = queue.pop() {
        for m in &maps {
            for j in 0..d {
                if !in_set[j] && m[(j, i)] != zero {
                    in_set[j] = true;
                    queue.push(j);
                }
            }
        }
    }
    (0..d).filter(|&i| in_set[i]).collect()
}

fn restrict<R: Real>(m: &CMatrix<R>, idx: &[usize]) -> CMatrix<R> {
    CMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Master equation on the invariant support, written in the eigenbasis of `H`.
struct LindbladSystem<R: Real> {
    support: Vec<usize>,
    eigenvectors: CMatrix<R>,
    eigenvalues: DVector<R>,
    /// `√γ_k · V†L_kV`
    jumps: Vec<CMatrix<R>>,
    jumps_adj: Vec<CMatrix<R>>,
    /// `½ Σ_k γ_k V†L_k†L_kV`
    half_loss: CMatrix<R>,
    /// Upper bound on the dissipator's norm, used for the stability check.
    stiffness: R,
}

impl<R: Real> LindbladSystem<R> {
    fn new(rho: &CMatrix<R>, h: &OperatorMatrix<R>, collapse: &[CollapseOperator<R>]) -> Self {
        let support = invariant_support(rho, h.entries(), collapse);
        let eig = hermitize(&restrict(h.entries(), &support)).symmetric_eigen();
        let v = eig.eigenvectors;
        let n = support.len();
        let mut jumps = Vec::new();
        let mut half_loss = CMatrix::zeros(n, n);
        let mut stiffness = R::zero();
        for c in collapse.iter().filter(|c| c.rate > R::zero()) {
            let l = restrict(c.matrix.entries(), &support) * creal(c.rate.sqrt());
            let le = v.adjoint() * l * &v;
            half_loss += le.adjoint() * &le * creal(R::lit(0.5));
            stiffness += R::lit(2.0) * le.norm_squared();
            jumps.push(le);
        }
        let jumps_adj = jumps.iter().map(|l| l.adjoint()).collect();
        Self {
            support,
            eigenvectors: v,
            eigenvalues: eig.eigenvalues,
            jumps,
            jumps_adj,
            half_loss,
            stiffness,
        }
    }

    fn to_eigenbasis(&self, rho: &CMatrix<R>) -> CMatrix<R> {
        let sub = restrict(rho, &self.support);
        self.eigenvectors.adjoint() * sub * &self.eigenvectors
    }

    fn lab_frame(&self, rho_e: &CMatrix<R>, d: usize) -> CMatrix<R> {
        let sub = &self.eigenvectors * rho_e * self.eigenvectors.adjoint();
        let mut full = CMatrix::zeros(d, d);
        for (a, &i) in self.support.iter().enumerate() {
            for (b, &j) in self.support.iter().enumerate() {
                full[(i, j)] = sub[(a, b)];
            }
        }
        full
    }

    fn dissipator(&self, rho: &CMatrix<R>) -> CMatrix<R> {
        let mut out = -(&self.half_loss * rho + rho * &self.half_loss);
        for (l, l_adj) in self.jumps.iter().zip(&self.jumps_adj) {
            out += l * rho * l_adj;
        }
        out
    }

    /// Free evolution factors `exp(−i(λ_a − λ_b)s)`.
    fn phases(&self, s: R) -> CMatrix<R> {
        let n = self.eigenvalues.len();
        CMatrix::from_fn(n, n, |a, b| {
            cis(-(self.eigenvalues[a] - self.eigenvalues[b]) * s)
        })
    }

    /// Fourth-order Runge-Kutta in the interaction picture of `H`
    /// (integrating-factor form); exact when there is no dissipation.
    fn integrate(&self, mut rho: CMatrix<R>, steps: usize, h: R) -> CMatrix<R> {
        let half = h / R::lit(2.0);
        let p_half = self.phases(half);
        let p_full = self.phases(h);
        let free = |m: &CMatrix<R>, p: &CMatrix<R>| m.component_mul(p);
        let c_half = creal(half);
        let c_h = creal(h);
        let sixth = creal(h / R::lit(6.0));
        let two = creal(R::lit(2.0));
        for _ in 0..steps {
            if self.jumps.is_empty() {
                rho = free(&rho, &p_full);
                continue;
            }
            let k1 = self.dissipator(&rho);
            let base_half = free(&rho, &p_half);
            let k2 = self.dissipator(&(&base_half + free(&k1, &p_half) * c_half));
            let k3 = self.dissipator(&(&base_half + &k2 * c_half));
            let k4 = self.dissipator(&(free(&rho, &p_full) + free(&k3, &p_half) * c_h));
            let mid = (&k2 + &k3) * two;
            rho = free(&rho, &p_full)
                + (free(&k1, &p_full) + free(&mid, &p_half) + k4) * sixth;
        }
        rho
    }
}

/// Integrates `dρ/dt = −i[H,ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})` for time `t`
/// with a fixed step no larger than `dt`.
pub fn evolve_lindblad<R: Real>(
    rho: &DensityMatrix<R>,
    h: &OperatorMatrix<R>,
    collapse: &[CollapseOperator<R>],
    t: R,
    dt: R,
) -> Result<DensityMatrix<R>> {
    if !(dt > R::zero()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
    }
    if !(t >= R::zero()) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let spec = rho.spec();
    if h.spec() != spec || collapse.iter().any(|c| c.matrix.spec() != spec) {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: h.spec().dim(),
        });
    }
    let dev = h.hermitian_deviation();
    if dev > R::tol(1e-10) * (R::one() + h.entries().norm()) {
        return Err(Error::NotHermitian(dev.f64()));
    }
    if t == R::zero() {
        return Ok(rho.clone());
    }

    let system = LindbladSystem::new(rho.entries(), h, collapse);
    let steps = (t / dt).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    let step = t / R::from_usize(steps).unwrap();
    if step * system.stiffness > R::lit(2.5) {
        return Err(Error::StepTooLarge {
            dt: dt.f64(),
            suggested_dt: 2.0 / system.stiffness.f64(),
        });
    }

    let tr0 = trace(rho.entries());
    let rho_e = system.integrate(system.to_eigenbasis(rho.entries()), steps, step);
    let full = hermitize(&system.lab_frame(&rho_e, spec.dim()));
    let drift = (trace(&full) - tr0).modulus();
    if !drift.is_finite() || drift > R::lit(1e-6) || full.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::StepTooLarge {
            dt: dt.f64(),
            suggested_dt: dt.f64() / 2.0,
        });
    }
    DensityMatrix::new(spec, full)
}

/// Result of [`evolve_lindblad_converged`].
#[derive(Clone, Debug)]
pub struct LindbladRun<R: Real> {
    pub rho: DensityMatrix<R>,
    /// Step used for the returned state.
    pub dt: R,
    pub halvings: usize,
    /// Max-entry change between the last two step sizes.
    pub change: R,
}

/// Starts at [`DEFAULT_DT`] and halves the step until two successive results
/// differ by less than `tol` in every entry.
pub fn evolve_lindblad_converged<R: Real>(
    rho: &DensityMatrix<R>,
    h: &OperatorMatrix<R>,
    collapse: &[CollapseOperator<R>],
    t: R,
    tol: R,
) -> Result<LindbladRun<R>> {
    let mut dt = R::lit(DEFAULT_DT);
    let mut coarse = evolve_lindblad(rho, h, collapse, t, dt)?;
    for halvings in 1..=MAX_HALVINGS {
        dt /= R::lit(2.0);
        let fine = evolve_lindblad(rho, h, collapse, t, dt)?;
        let change = (coarse.entries() - fine.entries()).camax();
        if change < tol {
            return Ok(LindbladRun {
                rho: fine,
                dt,
                halvings,
                change,
            });
        }
        coarse = fine;
    }
    Err(Error::NoConvergence(format!(
        "Lindblad integration not converged to {tol} after {MAX_HALVINGS} step halvings"
    )))
}

/// Evolves `|g…g,1⟩` inside the single-excitation block spanned by
/// `{|e_j,0⟩}_j ∪ {|g…g,1⟩}` using a Padé matrix exponential of the small block.
///
/// Returns the amplitudes ordered as qubits `0..N` followed by the cavity. The
/// block carries the same diagonal energies as the full rotating-frame
/// Hamiltonian, so amplitudes agree including global phase.
pub fn single_excitation_oracle<R: Real>(
    couplings: &[R],
    detunings: &[R],
    t: R,
) -> Result<CVector<R>> {
    let n = couplings.len();
    if detunings.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: detunings.len(),
        });
    }
    let offset = detunings.iter().fold(R::zero(), |a, d| a + *d) / R::lit(2.0);
    let mut block = CMatrix::zeros(n + 1, n + 1);
    for j in 0..n {
        block[(j, j)] = creal(detunings[j] - offset);
        block[(j, n)] = creal(couplings[j]);
        block[(n, j)] = creal(couplings[j]);
    }
    block[(n, n)] = creal(-offset);
    let generator = block * cplx(R::zero(), -t);
    let u = generator.exp();
    Ok(u.column(n).into_owned())
}

/// Amplitudes of a full-space state on the single-excitation oracle basis.
pub fn single_excitation_amplitudes<R: Real>(state: &QuantumState<R>) -> CVector<R> {
    let spec = state.spec();
    let n = spec.num_qubits();
    CVector::from_fn(n + 1, |j, _| {
        if j < n {
            state.amplitude(spec.index(1 << j, 0))
        } else {
            state.amplitude(spec.index(0, 1))
        }
    })
}
