use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FitResult;
use crate::propagation::PulseWaveform;
use crate::{Error, Result};

/// `|E_echo + e^{iφ} E_ref|²` for real amplitudes.
pub fn interference_intensity(echo_amplitude: f64, ref_amplitude: f64, phase: f64) -> Result<f64> {
    if !(echo_amplitude >= 0.0 && ref_amplitude >= 0.0) {
        return Err(Error::domain("amplitudes must be non-negative"));
    }
    Ok((Complex64::from(echo_amplitude) + Complex64::from_polar(ref_amplitude, phase)).norm_sqr())
}

/// Energy of `echo + e^{iφ}·reference`, integrated over the record.
pub fn interference_trace(echo: &PulseWaveform, reference: &PulseWaveform, phase: f64) -> Result<f64> {
    if echo.len() != reference.len() || echo.time_step != reference.time_step {
        return Err(Error::domain("echo and reference must share a time grid"));
    }
    let rot = Complex64::from_polar(1.0, phase);
    let sum: f64 = echo
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(e, r)| (e + rot * r).norm_sqr())
        .sum();
    Ok(sum * echo.time_step)
}

/// Fringe visibility for two fields with amplitude ratio `r`.
pub fn mismatch_visibility(r: f64) -> f64 {
    2.0 * r / (1.0 + r * r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityScan {
    pub phases: Vec<f64>,
    pub integrated_counts: Vec<f64>,
    /// Empty for an unweighted fit.
    pub count_sigmas: Vec<f64>,
}

impl VisibilityScan {
    pub fn validate(&self) -> Result<()> {
        let n = self.phases.len();
        if self.integrated_counts.len() != n || !(self.count_sigmas.is_empty() || self.count_sigmas.len() == n) {
            return Err(Error::domain("phases, counts and sigmas lengths differ"));
        }
        if n < 4 {
            return Err(Error::domain(format!("visibility fit needs ≥ 4 phases, got {n}")));
        }
        if self.phases.iter().chain(&self.integrated_counts).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite phase or count"));
        }
        if self.count_sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::domain("count sigmas must be positive"));
        }
        let lo = self.phases.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let spacing = span / (n - 1) as f64;
        if span + spacing < 2.0 * PI * (1.0 - 1e-9) {
            return Err(Error::domain(format!("phases span {span:.3} rad, less than one period")));
        }
        Ok(())
    }
}

/// Fits `a + b·cos(φ − φ₀)` as the linear model `a + c·cos φ + s·sin φ`.
/// Returns `visibility = b/a` (clipped to 1), `phase_offset = φ₀`,
/// `mean_level = a` and `amplitude = b`.
pub fn fit_visibility(scan: &VisibilityScan) -> Result<FitResult> {
    scan.validate()?;
    let weighted = !scan.count_sigmas.is_empty();
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (i, (&phi, &y)) in scan.phases.iter().zip(&scan.integrated_counts).enumerate() {
        let w = if weighted { scan.count_sigmas[i].powi(-2) } else { 1.0 };
        let row = Vector3::new(1.0, phi.cos(), phi.sin());
        normal += w * row * row.transpose();
        rhs += w * y * row;
    }
    let names = ["visibility", "phase_offset", "mean_level", "amplitude"];
    let Some(inverse) = normal.try_inverse() else {
        return Ok(FitResult::new(&names, &[f64::NAN; 4], None, f64::NAN, false));
    };
    let coef = inverse * rhs;
    let (a, c, s) = (coef[0], coef[1], coef[2]);
    let mut chi2 = 0.0;
    for (i, (&phi, &y)) in scan.phases.iter().zip(&scan.integrated_counts).enumerate() {
        let w = if weighted { scan.count_sigmas[i].powi(-2) } else { 1.0 };
        chi2 += w * (y - a - c * phi.cos() - s * phi.sin()).powi(2);
    }
    let n = scan.phases.len();
    let covariance = if weighted {
        inverse
    } else {
        inverse * (chi2 / (n - 3).max(1) as f64)
    };
    let b = c.hypot(s);
    let phase_offset = s.atan2(c);
    let converged = a > 0.0;
    let visibility = if converged { (b / a).min(1.0) } else { f64::NAN };

    let var = |g: Vector3<f64>| (g.transpose() * covariance * g)[0].max(0.0).sqrt();
    let (gc, gs) = if b > 0.0 { (c / b, s / b) } else { (0.0, 0.0) };
    let sigma_v = var(Vector3::new(-b / (a * a), gc / a, gs / a));
    let sigma_phi = if b > 0.0 {
        var(Vector3::new(0.0, -s / (b * b), c / (b * b)))
    } else {
        f64::NAN
    };
    let sigma_a = covariance[(0, 0)].max(0.0).sqrt();
    let sigma_b = var(Vector3::new(0.0, gc, gs));
    Ok(FitResult::new(
        &names,
        &[visibility, phase_offset, a, b],
        Some(&[sigma_v, sigma_phi, sigma_a, sigma_b]),
        chi2.sqrt(),
        converged,
    ))
}
