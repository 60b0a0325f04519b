//! Transmon and resonator physics.
//!
//! Parameters are stored with unit-bearing names in the units the constants are
//! usually quoted in; accessor methods convert to SI (seconds, rad/s).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hilbert::HilbertSpec;
use crate::{Error, Real, Result};

/// Name of the built-in device preset.
pub const PAPER_PRESET: &str = "paper-default";
/// Same device with a 2% uniform off-diagonal flux crosstalk residual.
pub const PAPER_CROSSTALK_PRESET: &str = "paper-crosstalk";
/// Off-diagonal amplitude of the crosstalk preset.
pub const DEFAULT_CROSSTALK: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    pub name: String,
    /// `E_Jmax/h`.
    pub ej_max_ghz: f64,
    /// `E_C/h`.
    pub ec_mhz: f64,
    /// Signed coupling quoted as `g/π`.
    pub g_over_pi_mhz: f64,
    /// Steady-state bias frequency `ω/2π`.
    pub bias_ghz: f64,
    pub t1_us: f64,
    pub t2_ns: f64,
}

impl QubitParams {
    pub fn ec_ghz(&self) -> f64 {
        self.ec_mhz * 1e-3
    }

    /// Signed coupling `g` in rad/s.
    pub fn coupling(&self) -> f64 {
        PI * self.g_over_pi_mhz * 1e6
    }

    pub fn t1(&self) -> f64 {
        self.t1_us * 1e-6
    }

    pub fn t2(&self) -> f64 {
        self.t2_ns * 1e-9
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("qubit {}: {what}", self.name)));
        let all_finite = [
            self.ej_max_ghz,
            self.ec_mhz,
            self.g_over_pi_mhz,
            self.bias_ghz,
            self.t1_us,
            self.t2_ns,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !all_finite {
            return bad("non-finite parameter");
        }
        if self.ej_max_ghz <= 0.0 {
            return bad("ej_max must be positive");
        }
        if self.ec_mhz <= 0.0 {
            return bad("ec must be positive");
        }
        if self.g_over_pi_mhz == 0.0 {
            return bad("coupling must be nonzero");
        }
        if self.t1_us <= 0.0 || self.t2_ns <= 0.0 {
            return bad("coherence times must be positive");
        }
        // T2 ≤ 2·T1, with 1% allowance for measurement error
        if self.t2() > 2.0 * self.t1() * 1.01 {
            return bad("t2 exceeds 2·t1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorParams {
    /// `ω_r/2π`.
    pub omega_r_ghz: f64,
    pub quality_factor: f64,
}

impl ResonatorParams {
    /// Energy decay rate `κ = ω_r/Q` in 1/s.
    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.omega_r_ghz * 1e9 / self.quality_factor
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r_ghz > 0.0 && self.omega_r_ghz.is_finite()) {
            return Err(Error::InvalidParameter("omega_r must be positive".into()));
        }
        if !(self.quality_factor > 0.0 && self.quality_factor.is_finite()) {
            return Err(Error::InvalidParameter("quality factor must be positive".into()));
        }
        Ok(())
    }
}

/// Linear map from commanded flux-pulse detuning changes to realized ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CrosstalkMatrix {
    matrix: DMatrix<f64>,
}

impl CrosstalkMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter("crosstalk matrix must be square".into()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("crosstalk matrix has non-finite entries".into()));
        }
        let sv = matrix.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if matrix.nrows() > 0 && (min <= 0.0 || max / min > 1e12) {
            return Err(Error::InvalidParameter("crosstalk matrix is not invertible".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    /// Unit diagonal with every off-diagonal entry equal to `amplitude`.
    pub fn uniform(n: usize, amplitude: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { amplitude }))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == DMatrix::identity(self.size(), self.size())
    }

    /// The compensation matrix that undoes this crosstalk.
    pub fn inverse(&self) -> Self {
        Self {
            matrix: self
                .matrix
                .clone()
                .try_inverse()
                .expect("invertibility checked at construction"),
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: other.size(),
            });
        }
        Self::new(&self.matrix * &other.matrix)
    }
}

impl TryFrom<Vec<Vec<f64>>> for CrosstalkMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("crosstalk matrix must be square".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

impl From<CrosstalkMatrix> for Vec<Vec<f64>> {
    fn from(x: CrosstalkMatrix) -> Self {
        x.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// Full device description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub resonator: ResonatorParams,
    pub qubits: Vec<QubitParams>,
    pub photon_cutoff: usize,
    pub crosstalk: CrosstalkMatrix,
}

impl SystemConfig {
    /// Device constants of the three-transmon sample (qubits A, B, C).
    pub fn paper_default() -> Self {
        let q = |name: &str, ej, ec, g, bias, t1, t2| QubitParams {
            name: name.into(),
            ej_max_ghz: ej,
            ec_mhz: ec,
            g_over_pi_mhz: g,
            bias_ghz: bias,
            t1_us: t1,
            t2_ns: t2,
        };
        Self {
            resonator: ResonatorParams {
                omega_r_ghz: 7.023,
                quality_factor: 14800.0,
            },
            qubits: vec![
                q("A", 26.8, 459.0, -105.4, 6.11, 2.1, 100.0),
                q("B", 28.1, 359.0, 110.8, 4.97, 1.8, 140.0),
                q("C", 25.7, 358.0, 111.6, 7.82, 1.0, 440.0),
            ],
            photon_cutoff: 2,
            crosstalk: CrosstalkMatrix::identity(3),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            PAPER_PRESET => Ok(Self::paper_default()),
            PAPER_CROSSTALK_PRESET => {
                Self::paper_default().with_crosstalk(CrosstalkMatrix::uniform(3, DEFAULT_CROSSTALK)?)
            }
            other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[PAPER_PRESET, PAPER_CROSSTALK_PRESET]
    }

    pub fn with_crosstalk(mut self, crosstalk: CrosstalkMatrix) -> Result<Self> {
        self.crosstalk = crosstalk;
        self.validate()?;
        Ok(self)
    }

    /// Replaces every coupling with `g_over_pi_mhz` (keeping signs positive).
    pub fn with_equal_couplings(mut self, g_over_pi_mhz: f64) -> Self {
        for q in &mut self.qubits {
            q.g_over_pi_mhz = g_over_pi_mhz;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.resonator.validate()?;
        if self.qubits.is_empty() {
            return Err(Error::InvalidParameter("at least one qubit is required".into()));
        }
        for q in &self.qubits {
            q.validate()?;
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if self.qubits[..i].iter().any(|p| p.name == q.name) {
                return Err(Error::InvalidParameter(format!("duplicate qubit name '{}'", q.name)));
            }
        }
        if self.crosstalk.size() != self.qubits.len() {
            return Err(Error::DimensionMismatch {
                expected: self.qubits.len(),
                found: self.crosstalk.size(),
            });
        }
        HilbertSpec::new(self.qubits.len(), self.photon_cutoff)?;
        Ok(())
    }

    pub fn spec(&self) -> HilbertSpec {
        HilbertSpec::new(self.qubits.len(), self.photon_cutoff).expect("validated config")
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit_index(&self, name: &str) -> Result<usize> {
        self.qubits
            .iter()
            .position(|q| q.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("no qubit named '{name}'")))
    }

    /// Signed couplings in rad/s.
    pub fn couplings(&self) -> Vec<f64> {
        self.qubits.iter().map(QubitParams::coupling).collect()
    }

    /// Bias detunings `Δ_j = ω_j − ω_r` in rad/s.
    pub fn bias_detunings(&self) -> Vec<f64> {
        self.qubits
            .iter()
            .map(|q| 2.0 * PI * (q.bias_ghz - self.resonator.omega_r_ghz) * 1e9)
            .collect()
    }
}

/// `ħω(φ) ≈ √(8·E_C·E_J(φ)) − E_C` with `E_J(φ) = E_Jmax·|cos(πφ)|`, flux in
/// units of the flux quantum. Returns GHz.
///
/// At half a flux quantum `E_J` vanishes and the value degenerates to `−E_C`.
pub fn transmon_frequency<R: Real>(flux: R, q: &QubitParams) -> R {
    let ej_max = R::lit(q.ej_max_ghz);
    let ec = R::lit(q.ec_ghz());
    let ej = ej_max * (R::pi() * flux).cos().abs();
    (R::lit(8.0) * ec * ej).sqrt() - ec
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecoherenceRates {
    /// `1/T1`.
    pub gamma1: f64,
    /// `1/T2 − 1/(2T1)`, clamped at zero.
    pub gamma_phi: f64,
    /// Cavity energy decay rate.
    pub kappa: f64,
}

pub fn decoherence_rates(q: &QubitParams, r: &ResonatorParams) -> DecoherenceRates {
    let gamma1 = 1.0 / q.t1();
    let gamma_phi = (1.0 / q.t2() - 0.5 * gamma1).max(0.0);
    DecoherenceRates {
        gamma1,
        gamma_phi,
        kappa: r.kappa(),
    }
}

/// Realized detuning changes `X · commanded`.
pub fn apply_crosstalk(commanded: &[f64], xtalk: &CrosstalkMatrix) -> Result<Vec<f64>> {
    if commanded.len() != xtalk.size() {
        return Err(Error::DimensionMismatch {
            expected: xtalk.size(),
            found: commanded.len(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(commanded);
    Ok((xtalk.matrix() * v).iter().copied().collect())
}
