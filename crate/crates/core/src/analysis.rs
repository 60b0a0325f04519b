//! Oscillation-frequency extraction and the `f² ∝ N` regression.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix5, Vector5};
use rustfft::num_complex::Complex as FftComplex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MIN_SAMPLES: usize = 8;
const PAD_FACTOR: usize = 16;
const MAX_ITERATIONS: usize = 500;

/// Fit of `a + b·e^(−γt)·cos(2πft + φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Hz.
    pub frequency: f64,
    pub amplitude: f64,
    /// Radians, in `(−π, π]`.
    pub phase: f64,
    /// 1/s.
    pub decay_rate: f64,
    pub offset: f64,
    pub residual_rms: f64,
    /// One-sigma uncertainty of `frequency` from the linearized covariance.
    pub frequency_stderr: f64,
    pub decay_stderr: f64,
    /// Condition number of the Jacobian at the optimum (scaled time units).
    pub condition_number: f64,
    pub iterations: usize,
}

impl FitReport {
    pub fn evaluate(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (-self.decay_rate * t).exp() * (TAU * self.frequency * t + self.phase).cos()
    }
}

/// Model in scaled time `s = t/T`: parameters `[a, b, γ', f', φ]`.
fn model(p: &Vector5<f64>, s: f64) -> f64 {
    p[0] + p[1] * (-p[2] * s).exp() * (TAU * p[3] * s + p[4]).cos()
}

fn gradient(p: &Vector5<f64>, s: f64) -> Vector5<f64> {
    let env = (-p[2] * s).exp();
    let arg = TAU * p[3] * s + p[4];
    let (sin, cos) = arg.sin_cos();
    Vector5::new(
        1.0,
        env * cos,
        -s * p[1] * env * cos,
        -p[1] * env * sin * TAU * s,
        -p[1] * env * sin,
    )
}

fn cost(p: &Vector5<f64>, s: &[f64], y: &[f64]) -> f64 {
    s.iter().zip(y).map(|(&si, &yi)| (yi - model(p, si)).powi(2)).sum()
}

/// Least-squares fit seeded by the peak of a zero-padded periodogram.
///
/// Samples must be uniformly spaced and span at least one period.
pub fn fit_damped_sinusoid(times: &[f64], values: &[f64]) -> Result<FitReport> {
    let n = times.len();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} samples, at least {MIN_SAMPLES} required"
        )));
    }
    if times.iter().chain(values).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let t0 = times[0];
    let span = times[n - 1] - t0;
    if !(span > 0.0) {
        return Err(Error::InvalidParameter("times must be increasing".into()));
    }
    let dt = span / (n - 1) as f64;
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt)
    {
        return Err(Error::InvalidParameter("samples must be uniformly spaced".into()));
    }

    let f_seed = periodogram_peak(values, dt)?;
    if f_seed * span < 1.0 {
        return Err(Error::InsufficientData(
            "record spans less than one period of the dominant tone".into(),
        ));
    }

    // scaled time: s = t/T keeps all parameters O(1)
    let s: Vec<f64> = times.iter().map(|t| t / span).collect();
    let f_scaled = f_seed * span;
    let (a, c1, c2) = linear_seed(&s, values, f_scaled)?;
    let mut p = Vector5::new(a, c1.hypot(c2), 0.0, f_scaled, (-c2).atan2(c1));

    let mut current = cost(&p, &s, values);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix5::zeros();
        let mut jtr = Vector5::zeros();
        for (&si, &yi) in s.iter().zip(values) {
            let g = gradient(&p, si);
            let r = yi - model(&p, si);
            jtj += g * g.transpose();
            jtr += g * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for k in 0..5 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let c = cost(&trial, &s, values);
            if c <= current {
                let rel = (current - c) / current.max(1e-300);
                let small_step = step.norm() <= 1e-12 * (1.0 + p.norm());
                p = trial;
                current = c;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                if rel < 1e-14 || small_step || current < 1e-28 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !improved {
            // no downhill step left: at a minimum to working precision
            converged = true;
            break;
        }
    }
    if !converged || !current.is_finite() {
        return Err(Error::NoConvergence(format!(
            "sinusoid fit did not converge in {MAX_ITERATIONS} iterations"
        )));
    }

    // canonical signs: b ≥ 0, f ≥ 0
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[4] += PI;
    }
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[4] = -p[4];
    }
    p[4] = wrap(p[4]);

    let mut jac = DMatrix::zeros(n, 5);
    for (i, &si) in s.iter().enumerate() {
        jac.set_row(i, &gradient(&p, si).transpose());
    }
    let sv = jac.clone().singular_values();
    let condition_number = sv.max() / sv.min().max(1e-300);
    let dof = (n as f64 - 5.0).max(1.0);
    let sigma2 = current / dof;
    let cov = (jac.transpose() * &jac).try_inverse();
    let stderr = |k: usize| {
        cov.as_ref()
            .map(|c| (c[(k, k)].max(0.0) * sigma2).sqrt())
            .unwrap_or(f64::INFINITY)
    };

    Ok(FitReport {
        frequency: p[3] / span,
        amplitude: p[1],
        phase: p[4],
        decay_rate: p[2] / span,
        offset: p[0],
        residual_rms: (current / n as f64).sqrt(),
        frequency_stderr: stderr(3) / span,
        decay_stderr: stderr(2) / span,
        condition_number,
        iterations,
    })
}

fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Frequency (Hz) of the strongest non-DC periodogram bin, refined by a
/// parabola through its neighbours.
fn periodogram_peak(values: &[f64], dt: f64) -> Result<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let variance = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if variance.sqrt() <= 1e-12 * scale || variance == 0.0 {
        return Err(Error::NoDominantPeak);
    }

    let m = (n * PAD_FACTOR).next_power_of_two();
    let mut buf: Vec<FftComplex<f64>> = centered
        .iter()
        .map(|&v| FftComplex::new(v, 0.0))
        .chain(std::iter::repeat(FftComplex::new(0.0, 0.0)))
        .take(m)
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let power: Vec<f64> = buf[..m / 2 + 1].iter().map(|z| z.norm_sqr()).collect();

    // ignore the DC lobe: below one cycle over the record
    let first = (m / n).max(1);
    let (k, &peak) = power[first..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, p)| (k + first, p))
        .ok_or(Error::NoDominantPeak)?;
    let band_mean = power[first..].iter().sum::<f64>() / (power.len() - first) as f64;
    if !(peak > 3.0 * band_mean) {
        return Err(Error::NoDominantPeak);
    }
    let offset = if k + 1 < power.len() {
        let (l, c, r) = (power[k - 1], power[k], power[k + 1]);
        let denom = l - 2.0 * c + r;
        if denom.abs() > 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok((k as f64 + offset) / (m as f64 * dt))
}

/// Offset and quadratures at fixed frequency: `y ≈ a + c₁cos(2πfs) + c₂sin(2πfs)`.
fn linear_seed(s: &[f64], y: &[f64], f: f64) -> Result<(f64, f64, f64)> {
    let design = DMatrix::from_fn(s.len(), 3, |i, k| match k {
        0 => 1.0,
        1 => (TAU * f * s[i]).cos(),
        _ => (TAU * f * s[i]).sin(),
    });
    let sol = design
        .svd(true, true)
        .solve(&DVector::from_column_slice(y), 1e-14)
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    Ok((sol[0], sol[1], sol[2]))
}

/// Linear regression of squared collective frequencies against `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n: Vec<usize>,
    /// Hz.
    pub frequencies: Vec<f64>,
    /// Hz².
    pub slope: f64,
    /// Hz².
    pub intercept: f64,
    pub r_squared: f64,
}

impl ScalingReport {
    /// `f_N/f_1` predicted by the fitted line.
    pub fn predicted_frequency(&self, n: usize) -> f64 {
        (self.intercept + self.slope * n as f64).max(0.0).sqrt()
    }
}

/// Ordinary least squares of `f_N²` against `N`.
pub fn sqrtn_regression(reports: &[(usize, FitReport)]) -> Result<ScalingReport> {
    let mut distinct: Vec<usize> = reports.iter().map(|(n, _)| *n).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData(
            "regression needs at least two distinct N".into(),
        ));
    }
    let x: Vec<f64> = reports.iter().map(|(n, _)| *n as f64).collect();
    let y: Vec<f64> = reports.iter().map(|(_, r)| r.frequency.powi(2)).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingReport {
        n: reports.iter().map(|(n, _)| *n).collect(),
        frequencies: reports.iter().map(|(_, r)| r.frequency).collect(),
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, span: f64) -> Vec<f64> {
        (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn pure_cosine_100_mhz() {
        let t = grid(64, 20e-9);
        let y: Vec<f64> = t.iter().map(|t| (TAU * 100e6 * t).cos()).collect();
        let fit = fit_damped_sinusoid(&t, &y).unwrap();
        assert!((fit.frequency / 100e6 - 1.0).abs() < 1e-3);
        assert!(fit.residual_rms < 1e-9);
        assert!(fit.decay_rate.abs() < 1e3);
    }

    #[test]
    fn constant_has_no_peak() {
        let t = grid(32, 10e-9);
        let y = vec![0.4; 32];
        assert!(matches!(fit_damped_sinusoid(&t, &y), Err(Error::NoDominantPeak)));
    }

    #[test]
    fn too_few_samples() {
        let t = grid(5, 10e-9);
        let y = vec![0.0, 1.0, 0.0, 1.0, 0.0];
        assert!(matches!(fit_damped_sinusoid(&t, &y), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn nonuniform_rejected() {
        let mut t = grid(16, 10e-9);
        t[3] += 1e-10;
        let y: Vec<f64> = t.iter().map(|t| (TAU * 300e6 * t).cos()).collect();
        assert!(fit_damped_sinusoid(&t, &y).is_err());
    }

    #[test]
    fn damped_with_offset() {
        let t = grid(120, 40e-9);
        let y: Vec<f64> = t
            .iter()
            .map(|t| 0.5 + 0.4 * (-2e7 * t).exp() * (TAU * 150e6 * t + 0.7).cos())
            .collect();
        let fit = fit_damped_sinusoid(&t, &y).unwrap();
        assert!((fit.frequency / 150e6 - 1.0).abs() < 1e-6);
        assert!((fit.decay_rate / 2e7 - 1.0).abs() < 1e-5);
        assert!((fit.phase - 0.7).abs() < 1e-6);
        assert!((fit.offset - 0.5).abs() < 1e-8);
    }

    #[test]
    fn regression_needs_two_n() {
        let t = grid(64, 20e-9);
        let y: Vec<f64> = t.iter().map(|t| (TAU * 100e6 * t).cos()).collect();
        let fit = fit_damped_sinusoid(&t, &y).unwrap();
        assert!(sqrtn_regression(&[(1, fit)]).is_err());
        assert!(sqrtn_regression(&[(1, fit), (1, fit)]).is_err());
    }

    #[test]
    fn paper_hardware_ratios() {
        let mk = |f: f64| FitReport {
            frequency: f,
            amplitude: 1.0,
            phase: 0.0,
            decay_rate: 0.0,
            offset: 0.0,
            residual_rms: 0.0,
            frequency_stderr: 0.0,
            decay_stderr: 0.0,
            condition_number: 1.0,
            iterations: 0,
        };
        let r = sqrtn_regression(&[(1, mk(112.0e6)), (2, mk(161.8e6)), (3, mk(195.2e6))]).unwrap();
        assert!(((161.8f64 / 112.0).powi(2) - 2.09).abs() < 0.01);
        assert!(((195.2f64 / 112.0).powi(2) - 3.04).abs() < 0.01);
        assert!(r.slope > 0.0);
        assert!((r.slope / 112.0e6f64.powi(2) - 1.0).abs() < 0.1);
    }
}
