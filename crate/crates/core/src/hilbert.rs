//! Dense linear algebra on `N` two-level systems ⊗ one truncated bosonic mode.
//!
//! Basis ordering: index `i = n·2^N + Σ_j b_j·2^j`, with qubit A at bit 0, B at
//! bit 1, C at bit 2 and the photon number `n` as the slowest index. Read as a
//! ket this is `|C,B,A,Cavity⟩`. `|g⟩` is bit 0 and `σ_z|g⟩ = −|g⟩`.
//!
//! Reduced states produced by [`partial_trace`] use the same ordering; a space
//! without a cavity factor has `cavity_levels() == 1`.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Matrix2};

use crate::{Error, Real, Result};

pub type CMatrix<R> = DMatrix<Complex<R>>;
pub type CVector<R> = DVector<Complex<R>>;

const MAX_QUBITS: usize = 16;

pub(crate) fn cplx<R: Real>(re: R, im: R) -> Complex<R> {
    Complex::new(re, im)
}

pub(crate) fn creal<R: Real>(re: R) -> Complex<R> {
    Complex::new(re, R::zero())
}

/// `exp(iθ)`
pub(crate) fn cis<R: Real>(theta: R) -> Complex<R> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Shape of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    num_qubits: usize,
    cavity_levels: usize,
}

impl HilbertSpec {
    /// `num_qubits` qubits and a cavity truncated at `photon_cutoff` photons.
    pub fn new(num_qubits: usize, photon_cutoff: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidSpace(format!(
                "number of qubits must be in 1..={MAX_QUBITS}, got {num_qubits}"
            )));
        }
        if photon_cutoff == 0 {
            return Err(Error::InvalidSpace("photon cutoff must be at least 1".into()));
        }
        Ok(Self {
            num_qubits,
            cavity_levels: photon_cutoff + 1,
        })
    }

    /// A bare qubit register (no cavity factor).
    pub fn qubits(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidSpace(format!(
                "number of qubits must be in 1..={MAX_QUBITS}, got {num_qubits}"
            )));
        }
        Ok(Self {
            num_qubits,
            cavity_levels: 1,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Dimension of the cavity factor (`n_max + 1`, or 1 without a cavity).
    pub fn cavity_levels(&self) -> usize {
        self.cavity_levels
    }

    pub fn photon_cutoff(&self) -> Option<usize> {
        self.has_cavity().then(|| self.cavity_levels - 1)
    }

    pub fn has_cavity(&self) -> bool {
        self.cavity_levels > 1
    }

    /// `2^N`.
    pub fn qubit_dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.cavity_levels
    }

    /// Basis index of the product state with qubit bit pattern `qubit_bits`
    /// and `photons` photons.
    pub fn index(&self, qubit_bits: usize, photons: usize) -> usize {
        debug_assert!(qubit_bits < self.qubit_dim() && photons < self.cavity_levels);
        photons * self.qubit_dim() + qubit_bits
    }

    pub fn photons_of(&self, index: usize) -> usize {
        index >> self.num_qubits
    }

    pub fn qubit_bits_of(&self, index: usize) -> usize {
        index & (self.qubit_dim() - 1)
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            Err(Error::QubitIndex {
                index: qubit,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            })
        } else {
            Ok(())
        }
    }
}

/// A tensor factor of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subsystem {
    Qubit(usize),
    Cavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Single-qubit matrices in the `(|g⟩, |e⟩)` basis.
pub mod pauli {
    use nalgebra::{Complex, Matrix2};

    use super::{cplx, creal};
    use crate::Real;

    pub fn identity<R: Real>() -> Matrix2<Complex<R>> {
        Matrix2::identity()
    }

    pub fn sigma_x<R: Real>() -> Matrix2<Complex<R>> {
        let (o, z) = (creal(R::one()), creal(R::zero()));
        Matrix2::new(z, o, o, z)
    }

    /// `−i(σ⁺ − σ⁻)`, so that `[σ_x, σ_y] = 2iσ_z` with `σ_z = diag(−1, +1)`.
    pub fn sigma_y<R: Real>() -> Matrix2<Complex<R>> {
        let z = creal(R::zero());
        Matrix2::new(z, cplx(R::zero(), R::one()), cplx(R::zero(), -R::one()), z)
    }

    pub fn sigma_z<R: Real>() -> Matrix2<Complex<R>> {
        let z = creal(R::zero());
        Matrix2::new(creal(-R::one()), z, z, creal(R::one()))
    }

    /// `|g⟩⟨e|`.
    pub fn sigma_minus<R: Real>() -> Matrix2<Complex<R>> {
        let z = creal(R::zero());
        Matrix2::new(z, creal(R::one()), z, z)
    }

    /// `|e⟩⟨g|`.
    pub fn sigma_plus<R: Real>() -> Matrix2<Complex<R>> {
        let z = creal(R::zero());
        Matrix2::new(z, z, creal(R::one()), z)
    }

    /// `|e⟩⟨e|`.
    pub fn excited_projector<R: Real>() -> Matrix2<Complex<R>> {
        let z = creal(R::zero());
        Matrix2::new(z, z, z, creal(R::one()))
    }
}

/// `exp(−i·angle·σ_axis/2)`.
pub fn rotation<R: Real>(axis: Axis, angle: R) -> Matrix2<Complex<R>> {
    let half = angle / R::lit(2.0);
    let sigma = match axis {
        Axis::X => pauli::sigma_x(),
        Axis::Y => pauli::sigma_y(),
        Axis::Z => pauli::sigma_z(),
    };
    pauli::identity::<R>() * creal(half.cos()) - sigma * cplx(R::zero(), half.sin())
}

fn max_hermitian_deviation<R: Real>(m: &CMatrix<R>) -> R {
    let n = m.nrows();
    let mut worst = R::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub(crate) fn hermitize<R: Real>(m: &CMatrix<R>) -> CMatrix<R> {
    (m + m.adjoint()) * creal(R::lit(0.5))
}

pub(crate) fn trace<R: Real>(m: &CMatrix<R>) -> Complex<R> {
    m.diagonal().iter().fold(creal(R::zero()), |acc, x| acc + x)
}

/// Applies a 2×2 gate to one qubit of a vector without building the full
/// operator.
fn apply_gate_to_vector<R: Real>(
    spec: &HilbertSpec,
    gate: &Matrix2<Complex<R>>,
    qubit: usize,
    v: &CVector<R>,
) -> CVector<R> {
    let bit = 1usize << qubit;
    let mut out = v.clone();
    for i in 0..spec.dim() {
        if i & bit == 0 {
            let (a0, a1) = (v[i], v[i | bit]);
            out[i] = gate[(0, 0)] * a0 + gate[(0, 1)] * a1;
            out[i | bit] = gate[(1, 0)] * a0 + gate[(1, 1)] * a1;
        }
    }
    out
}

/// Pure state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState<R: Real> {
    amplitudes: CVector<R>,
    spec: HilbertSpec,
}

impl<R: Real> QuantumState<R> {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(spec: HilbertSpec, amplitudes: CVector<R>) -> Result<Self> {
        spec.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - R::one()).abs() > R::tol(1e-9) {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, spec })
    }

    pub fn normalized(spec: HilbertSpec, amplitudes: CVector<R>) -> Result<Self> {
        spec.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm <= R::zero() || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
            spec,
        })
    }

    pub fn basis(spec: HilbertSpec, index: usize) -> Result<Self> {
        if index >= spec.dim() {
            return Err(Error::InvalidState(format!(
                "basis index {index} outside dimension {}",
                spec.dim()
            )));
        }
        let mut amplitudes = CVector::zeros(spec.dim());
        amplitudes[index] = creal(R::one());
        Ok(Self { amplitudes, spec })
    }

    /// Product state with the listed qubits excited and `photons` photons.
    pub fn product(spec: HilbertSpec, excited: &[usize], photons: usize) -> Result<Self> {
        let mut bits = 0;
        for &q in excited {
            spec.check_qubit(q)?;
            bits |= 1 << q;
        }
        if photons >= spec.cavity_levels() {
            return Err(Error::InvalidState(format!(
                "{photons} photons exceed the cavity cutoff"
            )));
        }
        Self::basis(spec, spec.index(bits, photons))
    }

    /// All qubits in `|g⟩`, cavity in vacuum.
    pub fn ground(spec: HilbertSpec) -> Self {
        Self::basis(spec, 0).expect("index 0 always exists")
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn amplitudes(&self) -> &CVector<R> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex<R> {
        self.amplitudes[index]
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<R>> {
        if self.spec != other.spec {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix<R> {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
            spec: self.spec,
        }
    }

    /// Applies a single-qubit unitary.
    pub fn apply_qubit_gate(&self, gate: &Matrix2<Complex<R>>, qubit: usize) -> Result<Self> {
        self.spec.check_qubit(qubit)?;
        Ok(Self {
            amplitudes: apply_gate_to_vector(&self.spec, gate, qubit, &self.amplitudes),
            spec: self.spec,
        })
    }

    /// Applies a full-space unitary (norm is checked).
    pub fn apply_unitary(&self, u: &CMatrix<R>) -> Result<Self> {
        self.spec.check_dim(u.nrows())?;
        Self::new(self.spec, u * &self.amplitudes)
    }
}

/// Density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<R: Real> {
    entries: CMatrix<R>,
    spec: HilbertSpec,
}

impl<R: Real> DensityMatrix<R> {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(spec: HilbertSpec, entries: CMatrix<R>) -> Result<Self> {
        spec.check_dim(entries.nrows())?;
        spec.check_dim(entries.ncols())?;
        let dev = max_hermitian_deviation(&entries);
        if dev > R::tol(1e-10) {
            return Err(Error::NotHermitian(dev.f64()));
        }
        let rho = Self { entries, spec };
        let tr = rho.trace();
        if (tr.re - R::one()).abs() > R::tol(1e-9) || tr.im.abs() > R::tol(1e-9) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -R::tol(1e-8) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min}"
            )));
        }
        Ok(rho)
    }

    pub fn from_state(state: &QuantumState<R>) -> Self {
        state.to_density()
    }

    pub fn maximally_mixed(spec: HilbertSpec) -> Self {
        let d = spec.dim();
        Self {
            entries: CMatrix::identity(d, d) * creal(R::one() / R::from_usize(d).unwrap()),
            spec,
        }
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn entries(&self) -> &CMatrix<R> {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix<R> {
        self.entries
    }

    pub fn trace(&self) -> Complex<R> {
        trace(&self.entries)
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> R {
        self.entries.iter().map(|z| z.norm_sqr()).fold(R::zero(), |a, b| a + b)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<R> {
        let eig = hermitize(&self.entries).symmetric_eigen();
        let mut vals: Vec<R> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        vals
    }

    pub fn min_eigenvalue(&self) -> R {
        self.eigenvalues().first().copied().unwrap_or_else(R::zero)
    }

    /// `λρ + (1−λ)·other`.
    pub fn mix(&self, other: &Self, lambda: R) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if lambda < R::zero() || lambda > R::one() {
            return Err(Error::InvalidParameter(format!(
                "mixing weight {lambda} outside [0, 1]"
            )));
        }
        Ok(Self {
            entries: &self.entries * creal(lambda) + &other.entries * creal(R::one() - lambda),
            spec: self.spec,
        })
    }

    /// `UρU†` for a full-space unitary.
    pub fn conjugate_by(&self, u: &CMatrix<R>) -> Result<Self> {
        self.spec.check_dim(u.nrows())?;
        Ok(Self {
            entries: hermitize(&(u * &self.entries * u.adjoint())),
            spec: self.spec,
        })
    }

    pub fn apply_qubit_gate(&self, gate: &Matrix2<Complex<R>>, qubit: usize) -> Result<Self> {
        self.spec.check_qubit(qubit)?;
        let d = self.dim();
        let mut left = CMatrix::zeros(d, d);
        for c in 0..d {
            let col = apply_gate_to_vector(&self.spec, gate, qubit, &self.entries.column(c).into());
            left.set_column(c, &col);
        }
        // ρ' = G ρ G† = (G (G ρ)†)†
        let adj = left.adjoint();
        let mut out = CMatrix::zeros(d, d);
        for c in 0..d {
            let col = apply_gate_to_vector(&self.spec, gate, qubit, &adj.column(c).into());
            out.set_column(c, &col);
        }
        Ok(Self {
            entries: hermitize(&out.adjoint()),
            spec: self.spec,
        })
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &Self) -> Result<R> {
        if self.spec != other.spec {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let eig = hermitize(&self.entries).symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|x| creal(x.max(R::zero()).sqrt()));
        let v = &eig.eigenvectors;
        let sqrt_rho = v * CMatrix::from_diagonal(&sqrt_vals) * v.adjoint();
        let m = hermitize(&(&sqrt_rho * &other.entries * &sqrt_rho));
        let s = m
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x.max(R::zero()).sqrt())
            .fold(R::zero(), |a, b| a + b);
        Ok((s * s).min(R::one()))
    }
}

/// Linear operator on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<R: Real> {
    entries: CMatrix<R>,
    spec: HilbertSpec,
    hermitian: bool,
}

impl<R: Real> OperatorMatrix<R> {
    /// Wraps a matrix; the Hermitian flag is detected at tolerance `1e-10`.
    pub fn new(spec: HilbertSpec, entries: CMatrix<R>) -> Result<Self> {
        spec.check_dim(entries.nrows())?;
        spec.check_dim(entries.ncols())?;
        let hermitian = max_hermitian_deviation(&entries) <= R::tol(1e-10);
        Ok(Self {
            entries,
            spec,
            hermitian,
        })
    }

    pub fn identity(spec: HilbertSpec) -> Self {
        let d = spec.dim();
        Self {
            entries: CMatrix::identity(d, d),
            spec,
            hermitian: true,
        }
    }

    pub fn zeros(spec: HilbertSpec) -> Self {
        let d = spec.dim();
        Self {
            entries: CMatrix::zeros(d, d),
            spec,
            hermitian: true,
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(state: &QuantumState<R>) -> Self {
        Self {
            entries: state.to_density().into_entries(),
            spec: state.spec(),
            hermitian: true,
        }
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn entries(&self) -> &CMatrix<R> {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix<R> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_deviation(&self) -> R {
        max_hermitian_deviation(&self.entries)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            spec: self.spec,
            hermitian: self.hermitian,
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                found: other.spec.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Self::new(self.spec, &self.entries * &other.entries)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Self::new(self.spec, &self.entries + &other.entries)
    }

    pub fn scale(&self, factor: R) -> Self {
        Self {
            entries: &self.entries * creal(factor),
            spec: self.spec,
            hermitian: self.hermitian,
        }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Self::new(
            self.spec,
            &self.entries * &other.entries - &other.entries * &self.entries,
        )
    }
}

/// Haar-random pure state.
pub fn random_state<R: Real, G: rand::Rng + ?Sized>(spec: HilbertSpec, rng: &mut G) -> QuantumState<R> {
    loop {
        let amps = CVector::from_fn(spec.dim(), |_, _| gaussian(rng));
        if let Ok(psi) = QuantumState::normalized(spec, amps) {
            return psi;
        }
    }
}

/// `GG†/Tr(GG†)` for a `d × rank` complex Ginibre matrix `G`; `rank = d` gives
/// the Hilbert–Schmidt ensemble.
pub fn random_density<R: Real, G: rand::Rng + ?Sized>(
    spec: HilbertSpec,
    rank: usize,
    rng: &mut G,
) -> Result<DensityMatrix<R>> {
    if rank == 0 || rank > spec.dim() {
        return Err(Error::InvalidParameter(format!(
            "rank must be in 1..={}, got {rank}",
            spec.dim()
        )));
    }
    let g = CMatrix::from_fn(spec.dim(), rank, |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = trace(&m);
    DensityMatrix::new(spec, hermitize(&(m / tr)))
}

fn gaussian<R: Real, G: rand::Rng + ?Sized>(rng: &mut G) -> Complex<R> {
    use rand_distr::{Distribution, StandardNormal};
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    cplx(R::lit(re), R::lit(im))
}

/// `Id ⊗ … ⊗ op2 ⊗ … ⊗ Id ⊗ Id_cavity`, with `op2` on the given qubit.
pub fn embed_qubit_operator<R: Real>(
    op2: &Matrix2<Complex<R>>,
    qubit: usize,
    spec: HilbertSpec,
) -> Result<OperatorMatrix<R>> {
    spec.check_qubit(qubit)?;
    let d = spec.dim();
    let bit = 1usize << qubit;
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        let b = (col >> qubit) & 1;
        for a in 0..2 {
            let v = op2[(a, b)];
            if v != creal(R::zero()) {
                let row = (col & !bit) | (a << qubit);
                m[(row, col)] = v;
            }
        }
    }
    OperatorMatrix::new(spec, m)
}

/// `â` on the cavity factor: `â|n⟩ = √n|n−1⟩`.
pub fn cavity_annihilation<R: Real>(spec: HilbertSpec) -> Result<OperatorMatrix<R>> {
    if !spec.has_cavity() {
        return Err(Error::InvalidSpace("space has no cavity factor".into()));
    }
    let d = spec.dim();
    let q = spec.qubit_dim();
    let mut m = CMatrix::zeros(d, d);
    for n in 1..spec.cavity_levels() {
        let amp = creal(R::from_usize(n).unwrap().sqrt());
        for bits in 0..q {
            m[(spec.index(bits, n - 1), spec.index(bits, n))] = amp;
        }
    }
    OperatorMatrix::new(spec, m)
}

/// `â†â`.
pub fn number_operator<R: Real>(spec: HilbertSpec) -> Result<OperatorMatrix<R>> {
    let a = cavity_annihilation::<R>(spec)?;
    a.adjoint().compose(&a)
}

/// Reduced density matrix on the kept factors.
///
/// Kept qubits are relabelled in ascending order of their original index.
pub fn partial_trace<R: Real>(
    rho: &DensityMatrix<R>,
    keep: &[Subsystem],
) -> Result<DensityMatrix<R>> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let spec = rho.spec();
    let mut kept_qubits: Vec<usize> = Vec::new();
    let mut keep_cavity = false;
    for s in keep {
        match *s {
            Subsystem::Qubit(q) => {
                spec.check_qubit(q)?;
                kept_qubits.push(q);
            }
            Subsystem::Cavity => {
                if !spec.has_cavity() {
                    return Err(Error::InvalidSpace("space has no cavity factor".into()));
                }
                keep_cavity = true;
            }
        }
    }
    kept_qubits.sort_unstable();
    kept_qubits.dedup();

    let out_spec = HilbertSpec {
        num_qubits: kept_qubits.len(),
        cavity_levels: if keep_cavity { spec.cavity_levels() } else { 1 },
    };
    let kept_mask: usize = kept_qubits.iter().map(|q| 1 << q).sum();
    let traced_mask = (spec.qubit_dim() - 1) & !kept_mask;

    let reduce = |i: usize| -> usize {
        let bits = spec.qubit_bits_of(i);
        let mut out = 0;
        for (m, &q) in kept_qubits.iter().enumerate() {
            out |= ((bits >> q) & 1) << m;
        }
        if keep_cavity {
            out += spec.photons_of(i) << kept_qubits.len();
        }
        out
    };
    let traced_key = |i: usize| -> (usize, usize) {
        let photons = if keep_cavity { 0 } else { spec.photons_of(i) };
        (i & traced_mask, photons)
    };

    let d = spec.dim();
    let od = out_spec.dim();
    let mut out = CMatrix::zeros(od, od);
    let e = rho.entries();
    for i in 0..d {
        let ki = traced_key(i);
        let ri = reduce(i);
        for j in 0..d {
            if traced_key(j) == ki {
                out[(ri, reduce(j))] += e[(i, j)];
            }
        }
    }
    Ok(DensityMatrix {
        entries: out,
        spec: out_spec,
    })
}

/// `Tr(op·ρ)`.
pub fn expectation<R: Real>(op: &OperatorMatrix<R>, rho: &DensityMatrix<R>) -> Result<Complex<R>> {
    if op.spec() != rho.spec() {
        return Err(Error::DimensionMismatch {
            expected: op.spec().dim(),
            found: rho.dim(),
        });
    }
    let (a, b) = (op.entries(), rho.entries());
    let d = rho.dim();
    let mut acc = creal(R::zero());
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// `Tr(op·ρ)` for a Hermitian operator, as a real number.
pub fn expectation_real<R: Real>(op: &OperatorMatrix<R>, rho: &DensityMatrix<R>) -> Result<R> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(op.hermitian_deviation().f64()));
    }
    Ok(expectation(op, rho)?.re)
}

/// Diagonal-only observables shared by pure and mixed states.
pub trait Populations<R: Real> {
    fn spec(&self) -> HilbertSpec;

    /// Basis-state occupation probabilities.
    fn probabilities(&self) -> Vec<R>;

    /// Probability that `qubit` is excited.
    fn excited_population(&self, qubit: usize) -> R {
        self.probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> qubit) & 1 == 1)
            .fold(R::zero(), |a, (_, p)| a + *p)
    }

    /// Probability that every qubit is in `|g⟩` (any photon number).
    fn ground_population(&self) -> R {
        let spec = self.spec();
        self.probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| spec.qubit_bits_of(*i) == 0)
            .fold(R::zero(), |a, (_, p)| a + *p)
    }

    /// `⟨â†â⟩` (zero without a cavity factor).
    fn mean_photons(&self) -> R {
        let spec = self.spec();
        self.probabilities()
            .iter()
            .enumerate()
            .fold(R::zero(), |a, (i, p)| {
                a + *p * R::from_usize(spec.photons_of(i)).unwrap()
            })
    }
}

impl<R: Real> Populations<R> for QuantumState<R> {
    fn spec(&self) -> HilbertSpec {
        self.spec
    }

    fn probabilities(&self) -> Vec<R> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl<R: Real> Populations<R> for DensityMatrix<R> {
    fn spec(&self) -> HilbertSpec {
        self.spec
    }

    fn probabilities(&self) -> Vec<R> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }
}
