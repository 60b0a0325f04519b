//! Joint dispersive readout, pre-rotation measurement sets, Gaussian outcome
//! noise, linear inversion and projection onto physical density matrices.
//!
//! Everything here acts on the qubit-only space (cavity traced out).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hilbert::{
    cplx, creal, hermitize, pauli, rotation, Axis, CMatrix, DensityMatrix, HilbertSpec,
    OperatorMatrix,
};
use crate::{Complex, Error, Real, Result};

/// Number of qubits covered by the readout model.
pub const NUM_QUBITS: usize = 3;
/// Default Pauli coefficients of `M` over
/// `{I, Z_A, Z_B, Z_C, Z_AZ_B, Z_AZ_C, Z_BZ_C, Z_AZ_BZ_C}`.
pub const DEFAULT_READOUT: [f64; 8] = [0.0, 1.0, 0.9, 0.8, 0.3, 0.25, 0.2, 0.1];
/// Qubit masks of the diagonal Pauli terms, in coefficient order.
const Z_TERMS: [usize; 8] = [0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111];

fn qubit_spec() -> HilbertSpec {
    HilbertSpec::qubits(NUM_QUBITS).expect("three qubits")
}

/// Diagonal joint-readout operator `M = Σ_S c_S Z_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutOperator<R: Real> {
    coefficients: [R; 8],
    matrix: OperatorMatrix<R>,
}

impl<R: Real> ReadoutOperator<R> {
    pub fn new(coefficients: [R; 8]) -> Result<Self> {
        if let Some(k) = coefficients[1..].iter().position(|c| *c == R::zero() || !c.is_finite()) {
            return Err(Error::IncompleteReadout(format!(
                "coefficient {} must be nonzero and finite",
                k + 1
            )));
        }
        if !coefficients[0].is_finite() {
            return Err(Error::IncompleteReadout("identity coefficient is not finite".into()));
        }
        let spec = qubit_spec();
        let diag = DVector::from_fn(spec.dim(), |i, _| {
            let v = Z_TERMS
                .iter()
                .zip(&coefficients)
                .fold(R::zero(), |acc, (&mask, &c)| acc + c * z_sign::<R>(i, mask));
            creal(v)
        });
        let matrix = OperatorMatrix::new(spec, CMatrix::from_diagonal(&diag))?;
        Ok(Self {
            coefficients,
            matrix,
        })
    }

    pub fn paper_default() -> Self {
        Self::new(DEFAULT_READOUT.map(R::lit)).expect("default readout is complete")
    }

    pub fn coefficients(&self) -> &[R; 8] {
        &self.coefficients
    }

    pub fn matrix(&self) -> &OperatorMatrix<R> {
        &self.matrix
    }
}

/// Eigenvalue of `Z_S` on basis state `i` with `σ_z|g⟩ = −|g⟩`.
fn z_sign<R: Real>(i: usize, mask: usize) -> R {
    // each qubit in |g⟩ (bit 0) contributes −1
    let ground = (!i & mask).count_ones();
    if ground % 2 == 0 {
        R::one()
    } else {
        -R::one()
    }
}

/// Builds a readout operator from its 8 Pauli coefficients.
pub fn build_readout<R: Real>(coefficients: &[R]) -> Result<ReadoutOperator<R>> {
    let arr: [R; 8] = coefficients.try_into().map_err(|_| Error::DimensionMismatch {
        expected: 8,
        found: coefficients.len(),
    })?;
    ReadoutOperator::new(arr)
}

/// Single-qubit pre-rotation before the joint readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PreRotation {
    Id,
    X180,
    X90,
    Y90,
}

impl PreRotation {
    pub const ALL: [PreRotation; 4] = [Self::Id, Self::X180, Self::X90, Self::Y90];

    pub fn label(self) -> &'static str {
        match self {
            Self::Id => "I",
            Self::X180 => "X180",
            Self::X90 => "X90",
            Self::Y90 => "Y90",
        }
    }

    pub fn unitary<R: Real>(self) -> Matrix2<Complex<R>> {
        match self {
            Self::Id => pauli::identity(),
            Self::X180 => rotation(Axis::X, R::pi()),
            Self::X90 => rotation(Axis::X, R::frac_pi_2()),
            Self::Y90 => rotation(Axis::Y, R::frac_pi_2()),
        }
    }
}

impl fmt::Display for PreRotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PreRotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.label() == s.trim())
            .ok_or_else(|| Error::MissingRecord(format!("unknown rotation label '{s}'")))
    }
}

/// Pre-rotations on qubits `[A, B, C]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorLabel(pub [PreRotation; NUM_QUBITS]);

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{a},{b},{c}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOperator<R: Real> {
    pub label: OperatorLabel,
    /// `U†MU`.
    pub operator: OperatorMatrix<R>,
}

/// Measurement operators together with their design matrix over a set of
/// Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographySet<R: Real> {
    operators: Vec<MeasurementOperator<R>>,
    /// Pauli-string indices resolved by this set.
    basis: Vec<usize>,
    /// `A[k][p] = Tr(O_k P_p)/8`.
    design: DMatrix<R>,
    /// Rank of the design together with the normalization `Tr ρ = 1`.
    rank: usize,
}

impl<R: Real> TomographySet<R> {
    fn build(m: &ReadoutOperator<R>, rotations: &[PreRotation], basis: Vec<usize>) -> Result<Self> {
        let spec = qubit_spec();
        let paulis: Vec<CMatrix<R>> = basis.iter().map(|&p| pauli_string(p)).collect();
        let mut operators = Vec::new();
        let r = rotations.len();
        for k in 0..r.pow(NUM_QUBITS as u32) {
            let label = OperatorLabel([rotations[k % r], rotations[(k / r) % r], rotations[k / (r * r)]]);
            let u = product_unitary::<R>(&label);
            let op = hermitize(&(u.adjoint() * m.matrix().entries() * &u));
            operators.push(MeasurementOperator {
                label,
                operator: OperatorMatrix::new(spec, op)?,
            });
        }
        let scale = R::from_usize(spec.dim()).unwrap();
        let design = DMatrix::from_fn(operators.len(), basis.len(), |k, p| {
            trace_product(operators[k].operator.entries(), &paulis[p]).re / scale
        });
        let rank = numeric_rank(&with_normalization(&design, &basis));
        if rank < basis.len() {
            return Err(Error::RankDeficient {
                rank,
                expected: basis.len(),
            });
        }
        Ok(Self {
            operators,
            basis,
            design,
            rank,
        })
    }

    pub fn operators(&self) -> &[MeasurementOperator<R>] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn labels(&self) -> Vec<OperatorLabel> {
        self.operators.iter().map(|o| o.label).collect()
    }

    pub fn design_matrix(&self) -> &DMatrix<R> {
        &self.design
    }

    /// Rank of the design matrix stacked with the normalization row. A
    /// readout without identity component never measures `Tr ρ`, which is
    /// supplied by the normalization instead.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Pauli-string indices the set resolves (all 64, or the 8 `Z` strings).
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }
}

/// All 64 operators `U†MU`, `U = u_A⊗u_B⊗u_C`, `u ∈ {I, Rx(π), Rx(π/2), Ry(π/2)}`.
pub fn tomography_set<R: Real>(m: &ReadoutOperator<R>) -> Result<TomographySet<R>> {
    TomographySet::build(m, &PreRotation::ALL, (0..64).collect())
}

/// The 8 operators with `u ∈ {I, Rx(π)}`, resolving populations only.
pub fn population_set<R: Real>(m: &ReadoutOperator<R>) -> Result<TomographySet<R>> {
    let z_strings = Z_TERMS.iter().map(|&mask| z_string_index(mask)).collect();
    TomographySet::build(m, &[PreRotation::Id, PreRotation::X180], z_strings)
}

fn z_string_index(mask: usize) -> usize {
    (0..NUM_QUBITS)
        .filter(|q| (mask >> q) & 1 == 1)
        .map(|q| 3 * 4usize.pow(q as u32))
        .sum()
}

fn product_unitary<R: Real>(label: &OperatorLabel) -> CMatrix<R> {
    let mut u = CMatrix::identity(1, 1);
    // kron(C, B, A) so that qubit A is the least significant bit
    for rot in label.0.iter().rev() {
        let g = rot.unitary::<R>();
        u = u.kronecker(&g);
    }
    u
}

fn single_pauli<R: Real>(k: usize) -> Matrix2<Complex<R>> {
    match k {
        0 => pauli::identity(),
        1 => pauli::sigma_x(),
        2 => pauli::sigma_y(),
        _ => pauli::sigma_z(),
    }
}

/// Pauli string `p = p_A + 4p_B + 16p_C` with `{I, X, Y, Z} = {0, 1, 2, 3}`.
pub fn pauli_string<R: Real>(p: usize) -> CMatrix<R> {
    let digits = [p % 4, (p / 4) % 4, (p / 16) % 4];
    let mut m = CMatrix::identity(1, 1);
    for &k in digits.iter().rev() {
        m = m.kronecker(&single_pauli::<R>(k));
    }
    m
}

/// Label of a Pauli string, written C, B, A (for example `"ZIX"` is `Z_C X_A`).
pub fn pauli_label(p: usize) -> String {
    let names = ['I', 'X', 'Y', 'Z'];
    [p / 16 % 4, p / 4 % 4, p % 4].iter().map(|&k| names[k]).collect()
}

fn trace_product<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> Complex<R> {
    let mut acc = creal(R::zero());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

fn with_normalization<R: Real>(design: &DMatrix<R>, basis: &[usize]) -> DMatrix<R> {
    let rows = design.nrows();
    let mut out = design.clone().insert_row(rows, R::zero());
    if let Some(col) = basis.iter().position(|&p| p == 0) {
        out[(rows, col)] = R::one();
    }
    out
}

fn numeric_rank<R: Real>(m: &DMatrix<R>) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(R::zero(), |a, b| a.max(*b));
    let n = R::from_usize(m.nrows().max(m.ncols())).unwrap();
    let tol = max * R::default_epsilon() * n * R::lit(100.0);
    sv.iter().filter(|s| **s > tol).count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord<R: Real> {
    pub label: OperatorLabel,
    pub noiseless: R,
    pub noisy: R,
    pub sigma: R,
}

/// `noisy = Tr(Oρ) + N(0, σ²)` for every operator; deterministic per seed.
pub fn simulate_measurements<R: Real>(
    rho: &DensityMatrix<R>,
    set: &TomographySet<R>,
    sigma: R,
    seed: u64,
) -> Result<Vec<MeasurementRecord<R>>> {
    let sigmas = vec![sigma; set.len()];
    simulate_measurements_with_sigmas(rho, set, &sigmas, seed)
}

/// As [`simulate_measurements`] with one standard deviation per operator.
pub fn simulate_measurements_with_sigmas<R: Real>(
    rho: &DensityMatrix<R>,
    set: &TomographySet<R>,
    sigmas: &[R],
    seed: u64,
) -> Result<Vec<MeasurementRecord<R>>> {
    if rho.spec() != qubit_spec() {
        return Err(Error::InvalidSpace(format!(
            "tomography needs a {NUM_QUBITS}-qubit state without cavity, got dimension {}",
            rho.dim()
        )));
    }
    if sigmas.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            found: sigmas.len(),
        });
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s >= R::zero()) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be non-negative, got {s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = set
        .operators()
        .iter()
        .zip(sigmas)
        .map(|(op, &sigma)| {
            let noiseless = trace_product(op.operator.entries(), rho.entries()).re;
            let z: f64 = StandardNormal.sample(&mut rng);
            let noisy = if sigma == R::zero() {
                noiseless
            } else {
                noiseless + sigma * R::lit(z)
            };
            MeasurementRecord {
                label: op.label,
                noiseless,
                noisy,
                sigma,
            }
        })
        .collect();
    Ok(records)
}

/// Least-squares Hermitian estimate from records (matched by label).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEstimate<R: Real> {
    pub estimate: OperatorMatrix<R>,
    /// `‖A r − b‖₂`.
    pub residual_norm: R,
}

/// Records in the order of the set's operators.
fn aligned<'a, R: Real>(
    records: &'a [MeasurementRecord<R>],
    set: &TomographySet<R>,
) -> Result<Vec<&'a MeasurementRecord<R>>> {
    set.operators()
        .iter()
        .map(|op| {
            records
                .iter()
                .find(|r| r.label == op.label)
                .ok_or_else(|| Error::MissingRecord(format!("no record for {}", op.label)))
        })
        .collect()
}

pub fn linear_inversion<R: Real>(
    records: &[MeasurementRecord<R>],
    set: &TomographySet<R>,
) -> Result<LinearEstimate<R>> {
    if set.rank() < set.basis().len() {
        return Err(Error::RankDeficient {
            rank: set.rank(),
            expected: set.basis().len(),
        });
    }
    let b = DVector::from_vec(aligned(records, set)?.iter().map(|r| r.noisy).collect());
    // ⟨I⟩ = Tr ρ = 1 is fixed; solve for the remaining Pauli coefficients
    let design = set.design_matrix();
    let identity_col = set.basis().iter().position(|&p| p == 0);
    let free: Vec<usize> = (0..set.basis().len()).filter(|&c| Some(c) != identity_col).collect();
    let reduced = design.select_columns(free.iter());
    let rhs = match identity_col {
        Some(c) => &b - design.column(c),
        None => b.clone(),
    };
    let solved = reduced
        .svd(true, true)
        .solve(&rhs, R::default_epsilon())
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    let mut coeffs = DVector::from_element(set.basis().len(), R::one());
    for (k, &c) in free.iter().enumerate() {
        coeffs[c] = solved[k];
    }
    let residual_norm = (design * &coeffs - &b).norm();

    let spec = qubit_spec();
    let scale = R::from_usize(spec.dim()).unwrap();
    let mut m = CMatrix::zeros(spec.dim(), spec.dim());
    for (&p, &r) in set.basis().iter().zip(coeffs.iter()) {
        m += pauli_string::<R>(p) * creal(r / scale);
    }
    Ok(LinearEstimate {
        estimate: OperatorMatrix::new(spec, hermitize(&m))?,
        residual_norm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult<R: Real> {
    pub rho: DensityMatrix<R>,
    /// Hermitian input before projection.
    pub estimate: OperatorMatrix<R>,
    /// Eigenvalue shift `θ` of the simplex projection `λ ↦ max(λ − θ, 0)`.
    pub shift: R,
    /// Frobenius distance between `rho` and `estimate`.
    pub residual_norm: R,
    /// Iterations of the likelihood refinement (0 when not run).
    pub likelihood_iterations: usize,
}

/// Closest density matrix in Frobenius norm: eigendecompose and project the
/// spectrum onto the probability simplex.
pub fn mle_project<R: Real>(estimate: &OperatorMatrix<R>) -> Result<ReconstructionResult<R>> {
    let e = estimate.entries();
    let scale = R::one() + e.norm();
    let dev = estimate.hermitian_deviation();
    if dev > R::tol(1e-10) * scale {
        return Err(Error::NotHermitian(dev.f64()));
    }
    let eig = hermitize(e).symmetric_eigen();
    let (projected, shift) = simplex_projection(eig.eigenvalues.as_slice());
    let v = &eig.eigenvectors;
    let diag = DVector::from_iterator(projected.len(), projected.iter().map(|x| creal(*x)));
    let rho = hermitize(&(v * CMatrix::from_diagonal(&diag) * v.adjoint()));
    let residual_norm = (&rho - e).norm();
    Ok(ReconstructionResult {
        rho: DensityMatrix::new(estimate.spec(), rho)?,
        estimate: estimate.clone(),
        shift,
        residual_norm,
        likelihood_iterations: 0,
    })
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}`; returns the projection and `θ`.
fn simplex_projection<R: Real>(values: &[R]) -> (Vec<R>, R) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = R::zero();
    let mut theta = R::zero();
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - R::one()) / R::from_usize(k + 1).unwrap();
        if v - candidate > R::zero() {
            theta = candidate;
        }
    }
    let projected = values.iter().map(|&v| (v - theta).max(R::zero())).collect();
    (projected, theta)
}

/// Linear inversion, projection, then likelihood refinement (full sets only).
pub fn reconstruct<R: Real>(
    records: &[MeasurementRecord<R>],
    set: &TomographySet<R>,
) -> Result<ReconstructionResult<R>> {
    let mut result = mle_project(&linear_inversion(records, set)?.estimate)?;
    if set.basis().len() == 64 {
        let (rho, iterations) =
            maximum_likelihood(records, set, &result.rho, &LikelihoodOptions::default())?;
        result.residual_norm = (rho.entries() - result.estimate.entries()).norm();
        result.rho = rho;
        result.likelihood_iterations = iterations;
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LikelihoodOptions {
    pub max_iterations: usize,
    /// Stop when a step moves the Pauli vector by less than this (relative).
    pub tolerance: f64,
}

impl Default for LikelihoodOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-11,
        }
    }
}

/// Most probable physical state under Gaussian outcome noise: minimizes
/// `Σ_k (Tr(O_k ρ) − b_k)²/σ_k²` over density matrices by accelerated
/// projected gradient, starting from `start`. Uniform weights are used when
/// any record has `σ = 0`.
pub fn maximum_likelihood<R: Real>(
    records: &[MeasurementRecord<R>],
    set: &TomographySet<R>,
    start: &DensityMatrix<R>,
    options: &LikelihoodOptions,
) -> Result<(DensityMatrix<R>, usize)> {
    if set.basis().len() != 64 {
        return Err(Error::InvalidParameter(
            "likelihood refinement needs the full 64-operator set".into(),
        ));
    }
    let rows = aligned(records, set)?;
    let weights: Vec<R> = if rows.iter().any(|r| r.sigma <= R::zero()) {
        vec![R::one(); rows.len()]
    } else {
        rows.iter().map(|r| R::one() / r.sigma).collect()
    };
    let a = DMatrix::from_fn(rows.len(), 64, |k, p| set.design_matrix()[(k, p)] * weights[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().zip(&weights).map(|(r, w)| r.noisy * *w));
    let lipschitz = a.clone().singular_values().max().powi(2);
    if !(lipschitz > R::zero()) {
        return Ok((start.clone(), 0));
    }
    let paulis: Vec<CMatrix<R>> = (0..64).map(pauli_string).collect();
    let to_rho = |r: &DVector<R>| -> CMatrix<R> {
        let mut m = CMatrix::zeros(8, 8);
        for (p, pm) in paulis.iter().enumerate() {
            m += pm * creal(r[p] / R::lit(8.0));
        }
        hermitize(&m)
    };
    let to_pauli = |m: &CMatrix<R>| DVector::from_iterator(64, paulis.iter().map(|p| trace_product(p, m).re));
    let project = |r: &DVector<R>| -> Result<DVector<R>> {
        let eig = to_rho(r).symmetric_eigen();
        let (vals, _) = simplex_projection(eig.eigenvalues.as_slice());
        let v = &eig.eigenvectors;
        let diag = DVector::from_iterator(8, vals.iter().map(|x| creal(*x)));
        Ok(to_pauli(&(v * CMatrix::from_diagonal(&diag) * v.adjoint())))
    };
    let cost = |r: &DVector<R>| (&a * r - &b).norm_squared();

    let mut x = to_pauli(start.entries());
    let mut x_prev = x.clone();
    let mut momentum = R::one();
    let mut fx = cost(&x);
    let step = R::one() / lipschitz;
    let tol = R::lit(options.tolerance);
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let next_momentum = (R::one() + (R::one() + R::lit(4.0) * momentum * momentum).sqrt()) / R::lit(2.0);
        let y = &x + (&x - &x_prev) * ((momentum - R::one()) / next_momentum);
        let grad = a.transpose() * (&a * &y - &b);
        let z = project(&(y - grad * step))?;
        let fz = cost(&z);
        if fz > fx {
            // restart acceleration from the last accepted point
            momentum = R::one();
            let grad = a.transpose() * (&a * &x - &b);
            let z = project(&(&x - grad * step))?;
            let fz = cost(&z);
            let moved = (&z - &x).norm();
            x_prev = std::mem::replace(&mut x, z);
            fx = fz;
            if moved <= tol * (R::one() + x.norm()) {
                break;
            }
            continue;
        }
        let moved = (&z - &x).norm();
        x_prev = std::mem::replace(&mut x, z);
        fx = fz;
        momentum = next_momentum;
        if moved <= tol * (R::one() + x.norm()) {
            break;
        }
    }
    let rho = DensityMatrix::new(start.spec(), to_rho(&x))?;
    Ok((rho, iterations))
}

/// `⟨P⟩` for all 64 Pauli strings in index order (identity first).
pub fn pauli_set<R: Real>(rho: &DensityMatrix<R>) -> Result<Vec<R>> {
    if rho.spec() != qubit_spec() {
        return Err(Error::InvalidSpace(format!(
            "Pauli set needs a {NUM_QUBITS}-qubit state without cavity"
        )));
    }
    Ok((0..64)
        .map(|p| trace_product(&pauli_string::<R>(p), rho.entries()).re)
        .collect())
}

/// Density matrix from Pauli expectations `ρ = (1/8) Σ r_P P`.
pub fn from_pauli_set<R: Real>(values: &[R]) -> Result<OperatorMatrix<R>> {
    if values.len() != 64 {
        return Err(Error::DimensionMismatch {
            expected: 64,
            found: values.len(),
        });
    }
    let spec = qubit_spec();
    let mut m = CMatrix::zeros(8, 8);
    for (p, &r) in values.iter().enumerate() {
        m += pauli_string::<R>(p) * cplx(r / R::lit(8.0), R::zero());
    }
    OperatorMatrix::new(spec, hermitize(&m))
}
