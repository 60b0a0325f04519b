//! On-disk formats: density-matrix JSON and the CSV tables.
//!
//! CSV files use `,` separators, `.` decimals, `\n` line endings and a header
//! row. Numbers are written in the shortest form that round-trips.

use dicke::analysis::ScalingReport;
use dicke::hilbert::{DensityMatrix, HilbertSpec};
use dicke::protocols::PopulationTrace;
use dicke::tomography::{pauli_label, MeasurementRecord, OperatorLabel, PreRotation, TomographySet};
use dicke::{Complex, Density};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const BASIS_LABEL: &str = "CBA-cavity-last";

/// `{dim, real, imag, basis}` with row-major entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub dim: usize,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
    pub basis: String,
}

impl DensityFile {
    pub fn from_density(rho: &Density) -> Self {
        let d = rho.dim();
        let e = rho.entries();
        let entries = || (0..d).flat_map(move |i| (0..d).map(move |j| (i, j)));
        Self {
            dim: d,
            real: entries().map(|(i, j)| e[(i, j)].re).collect(),
            imag: entries().map(|(i, j)| e[(i, j)].im).collect(),
            basis: BASIS_LABEL.into(),
        }
    }

    /// Qubit-only state; the dimension must be a power of two.
    pub fn to_density(&self) -> CliResult<Density> {
        if self.basis != BASIS_LABEL {
            return Err(CliError::config(format!("unsupported basis '{}'", self.basis)));
        }
        let d = self.dim;
        if d < 2 || !d.is_power_of_two() {
            return Err(CliError::config(format!("dimension {d} is not a qubit-register size")));
        }
        if self.real.len() != d * d || self.imag.len() != d * d {
            return Err(CliError::config(format!("expected {} entries per part", d * d)));
        }
        let spec = HilbertSpec::qubits(d.trailing_zeros() as usize)
            .map_err(|e| CliError::config(e.to_string()))?;
        let m = DMatrix::from_fn(d, d, |i, j| Complex::new(self.real[i * d + j], self.imag[i * d + j]));
        DensityMatrix::new(spec, m).map_err(|e| CliError::config(format!("invalid density matrix: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("density serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> CliResult<Self> {
        serde_json::from_slice(bytes).map_err(|e| CliError::config(format!("invalid density file: {e}")))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

/// `time_ns, p_q<name>..., p_ggg, n_cavity`.
pub fn trace_csv(trace: &PopulationTrace, qubit_names: &[String]) -> Vec<u8> {
    let mut w = writer();
    let ground = format!("p_{}", "g".repeat(qubit_names.len()));
    let mut header = vec!["time_ns".to_string()];
    header.extend(qubit_names.iter().map(|n| format!("p_q{n}")));
    header.push(ground);
    header.push("n_cavity".into());
    w.write_record(&header).expect("csv");
    for k in 0..trace.len() {
        let mut row = vec![num(trace.times[k] * 1e9)];
        row.extend(trace.qubit_populations.iter().map(|p| num(p[k])));
        row.push(num(trace.ground_population[k]));
        row.push(num(trace.cavity_population[k]));
        w.write_record(&row).expect("csv");
    }
    finish(w)
}

pub const RECORD_HEADER: [&str; 4] = ["rotation_label_A", "rotation_label_B", "rotation_label_C", "value"];

pub fn records_csv(records: &[MeasurementRecord<f64>]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(RECORD_HEADER).expect("csv");
    for r in records {
        let [a, b, c] = r.label.0;
        w.write_record([a.label(), b.label(), c.label(), &num(r.noisy)]).expect("csv");
    }
    finish(w)
}

/// Parses a records table and checks it against the operator labels of `set`.
/// Records carry no noise level, so reconstruction weights them uniformly.
pub fn parse_records(bytes: &[u8], set: &TomographySet<f64>) -> CliResult<Vec<MeasurementRecord<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header = rdr.headers().map_err(|e| CliError::config(format!("records: {e}")))?;
    if header.iter().ne(RECORD_HEADER) {
        return Err(CliError::config(format!(
            "records header must be {}",
            RECORD_HEADER.join(",")
        )));
    }
    let mut records: Vec<MeasurementRecord<f64>> = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| CliError::config(format!("records: {e}")))?;
        let bad = |what: String| CliError::config(format!("records row {}: {what}", line + 1));
        let rot = |k: usize| row[k].parse::<PreRotation>().map_err(|e| bad(e.to_string()));
        let label = OperatorLabel([rot(0)?, rot(1)?, rot(2)?]);
        let value: f64 = row[3].parse().map_err(|_| bad(format!("bad value '{}'", &row[3])))?;
        if !value.is_finite() {
            return Err(bad("non-finite value".into()));
        }
        if records.iter().any(|r| r.label == label) {
            return Err(bad(format!("duplicate label {label}")));
        }
        records.push(MeasurementRecord {
            label,
            noiseless: value,
            noisy: value,
            sigma: 0.0,
        });
    }
    for op in set.operators() {
        if !records.iter().any(|r| r.label == op.label) {
            return Err(CliError::config(format!("records: missing label {}", op.label)));
        }
    }
    if records.len() != set.len() {
        return Err(CliError::config(format!(
            "records: expected {} rows, found {}",
            set.len(),
            records.len()
        )));
    }
    Ok(records)
}

/// `pauli, value` with labels written C, B, A.
pub fn pauli_csv(values: &[f64]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(["pauli", "value"]).expect("csv");
    for (p, v) in values.iter().enumerate() {
        w.write_record([pauli_label(p), num(*v)]).expect("csv");
    }
    finish(w)
}

/// `n, frequency_hz, frequency_squared_hz2`.
pub fn scaling_csv(report: &ScalingReport) -> Vec<u8> {
    let mut w = writer();
    w.write_record(["n", "frequency_hz", "frequency_squared_hz2"]).expect("csv");
    for (n, f) in report.n.iter().zip(&report.frequencies) {
        w.write_record([n.to_string(), num(*f), num(f * f)]).expect("csv");
    }
    finish(w)
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}
