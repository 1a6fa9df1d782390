//! Analytic model of the atomic-frequency-comb absorption spectrum.
//!
//! The comb is a periodic train of Lorentzian spectral holes of depth `A`
//! and FWHM `γ` with period `Δν`, burnt into an inhomogeneous line of
//! optical depth `d = α₀ L̃`. Storage time is `t_s = 1/Δν` and the finesse
//! is `F = Δν/γ`.
//!
//! Two absorption profiles are exposed:
//!
//! * [`relative_absorption`], the sum of every tooth's full Lorentzian, and
//! * [`periodic_hole_absorption`], one Lorentzian per period cut off at the
//!   period boundaries and repeated.
//!
//! The closed-form Fourier coefficients ([`fourier_coefficients`]) and the
//! efficiency ([`closed_form_efficiency`]) are exact for the second profile.
//! The two profiles converge as `F` grows; at `F ≈ 1` the tails of
//! neighbouring teeth overlap strongly and they differ substantially.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::exp_integral_e1;

/// Default half-width (in teeth) of the Lorentzian sum in
/// [`relative_absorption`]. The neglected tail is bounded by
/// `A γ t_s / (π n_max)`.
pub const DEFAULT_TRUNCATION: usize = 10_000;

/// Comb geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfcParameters {
    /// Relative hole depth `A` in `[0, 1]`.
    pub hole_depth: f64,
    /// Hole FWHM `γ` in Hz.
    pub hole_fwhm_hz: f64,
    /// Comb period `Δν` in Hz.
    pub period_hz: f64,
    /// Number of teeth `N`.
    pub tooth_count: u32,
}

impl AfcParameters {
    pub fn new(hole_depth: f64, hole_fwhm_hz: f64, period_hz: f64, tooth_count: u32) -> Result<Self> {
        let params = Self {
            hole_depth,
            hole_fwhm_hz,
            period_hz,
            tooth_count,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for a given storage time instead of a period.
    pub fn for_storage_time(hole_depth: f64, hole_fwhm_hz: f64, storage_time_s: f64, tooth_count: u32) -> Result<Self> {
        if !(storage_time_s > 0.0) {
            return Err(Error::validation("storage_time_s", "must be > 0"));
        }
        Self::new(hole_depth, hole_fwhm_hz, 1.0 / storage_time_s, tooth_count)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hole_depth) {
            return Err(Error::validation("hole_depth", format!("must lie in [0, 1], got {}", self.hole_depth)));
        }
        if !(self.hole_fwhm_hz > 0.0 && self.hole_fwhm_hz.is_finite()) {
            return Err(Error::validation("hole_fwhm_hz", format!("must be > 0, got {}", self.hole_fwhm_hz)));
        }
        if !(self.period_hz > 0.0 && self.period_hz.is_finite()) {
            return Err(Error::validation("period_hz", format!("must be > 0, got {}", self.period_hz)));
        }
        if self.tooth_count == 0 {
            return Err(Error::validation("tooth_count", "must be a positive integer"));
        }
        Ok(())
    }

    pub fn storage_time(&self) -> f64 {
        1.0 / self.period_hz
    }

    pub fn finesse(&self) -> f64 {
        self.period_hz / self.hole_fwhm_hz
    }

    /// Total comb width `N Δν` in Hz.
    pub fn bandwidth(&self) -> f64 {
        f64::from(self.tooth_count) * self.period_hz
    }

    /// Frequencies of the tooth centres relative to the comb centre.
    pub fn tooth_frequencies(&self) -> Vec<f64> {
        let half = (f64::from(self.tooth_count) - 1.0) / 2.0;
        (0..self.tooth_count)
            .map(|k| (f64::from(k) - half) * self.period_hz)
            .collect()
    }

    /// Checks that the comb fits inside the inhomogeneous line.
    pub fn check_within(&self, ensemble: &EnsembleParameters) -> Result<()> {
        if self.bandwidth() > ensemble.inhom_fwhm_hz {
            return Err(Error::validation(
                "tooth_count",
                format!(
                    "comb width {:e} Hz exceeds the inhomogeneous FWHM {:e} Hz",
                    self.bandwidth(),
                    ensemble.inhom_fwhm_hz
                ),
            ));
        }
        Ok(())
    }
}

/// Properties of the absorbing ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParameters {
    /// Optical depth `d = α₀ L̃` of the unburnt line.
    pub optical_depth: f64,
    /// Inhomogeneous FWHM `Γ_inh` in Hz.
    pub inhom_fwhm_hz: f64,
    /// Line centre relative to the comb centre, Hz.
    pub center_detuning_hz: f64,
    /// Effective absorption length `L̃` in m.
    pub waveguide_length_m: f64,
}

impl EnsembleParameters {
    pub fn new(optical_depth: f64, inhom_fwhm_hz: f64, center_detuning_hz: f64, waveguide_length_m: f64) -> Result<Self> {
        let e = Self {
            optical_depth,
            inhom_fwhm_hz,
            center_detuning_hz,
            waveguide_length_m,
        };
        e.validate()?;
        Ok(e)
    }

    /// The erbium-doped waveguide used for the reference memory measurements.
    pub fn er_si_waveguide(optical_depth: f64) -> Self {
        Self {
            optical_depth,
            inhom_fwhm_hz: 351e6,
            center_detuning_hz: 0.0,
            waveguide_length_m: 6.25e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.optical_depth >= 0.0 && self.optical_depth.is_finite()) {
            return Err(Error::validation("optical_depth", format!("must be >= 0, got {}", self.optical_depth)));
        }
        if !(self.inhom_fwhm_hz > 0.0) {
            return Err(Error::validation("inhom_fwhm_hz", "must be > 0"));
        }
        if !self.center_detuning_hz.is_finite() {
            return Err(Error::validation("center_detuning_hz", "must be finite"));
        }
        if !(self.waveguide_length_m > 0.0) {
            return Err(Error::validation("waveguide_length_m", "must be > 0"));
        }
        Ok(())
    }

    /// Peak absorption coefficient `α₀` in 1/m.
    pub fn peak_absorption(&self) -> f64 {
        self.optical_depth / self.waveguide_length_m
    }
}

/// How a reported optical depth relates to `d = α₀ L̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthConvention {
    /// The value is `d = α₀ L̃` itself.
    #[default]
    OpticalDepth,
    /// The value is the reduced depth `d̃ = d / F`.
    Reduced,
}

impl DepthConvention {
    /// Converts a reported depth into `d = α₀ L̃`.
    pub fn to_optical_depth(self, value: f64, finesse: f64) -> f64 {
        match self {
            DepthConvention::OpticalDepth => value,
            DepthConvention::Reduced => value * finesse,
        }
    }
}

pub fn finesse(params: &AfcParameters) -> Result<f64> {
    if !(params.hole_fwhm_hz > 0.0) || !(params.period_hz > 0.0) {
        return Err(Error::domain("finesse requires positive hole width and period"));
    }
    Ok(params.period_hz / params.hole_fwhm_hz)
}

#[inline]
fn lorentzian(offset: f64, half_width: f64) -> f64 {
    let hw2 = half_width * half_width;
    hw2 / (hw2 + offset * offset)
}

/// `α(ν)/α₀` for the full Lorentzian sum over teeth `n ∈ [-truncation, truncation]`.
pub fn relative_absorption(detuning_hz: f64, params: &AfcParameters, truncation: usize) -> Result<f64> {
    if truncation < 1 {
        return Err(Error::domain("truncation must be >= 1"));
    }
    if params.hole_depth == 0.0 {
        return Ok(1.0);
    }
    let half = params.hole_fwhm_hz / 2.0;
    let n = truncation as i64;
    // sum from the outside in so small tail terms are not swamped
    let mut sum = 0.0;
    for k in (1..=n).rev() {
        let kf = k as f64 * params.period_hz;
        sum += lorentzian(detuning_hz - kf, half) + lorentzian(detuning_hz + kf, half);
    }
    sum += lorentzian(detuning_hz, half);
    Ok(1.0 - params.hole_depth * sum)
}

/// `α(ν)/α₀` for one Lorentzian hole per period, truncated at `±Δν/2` and
/// repeated periodically.
pub fn periodic_hole_absorption(detuning_hz: f64, params: &AfcParameters) -> f64 {
    let p = params.period_hz;
    let reduced = detuning_hz - p * (detuning_hz / p).round();
    1.0 - params.hole_depth * lorentzian(reduced, params.hole_fwhm_hz / 2.0)
}

/// The E₁ coefficients entering the first-order Fourier coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EchoCoefficients {
    /// `π + Im E₁(-π/F + iπ)`, weighted by `e^{-π/F}`.
    pub c_plus: f64,
    /// `-Im E₁(π/F + iπ)`, weighted by `e^{+π/F}`.
    pub c_minus: f64,
}

impl EchoCoefficients {
    pub fn for_finesse(finesse: f64) -> Result<Self> {
        if !(finesse > 0.0) {
            return Err(Error::domain("finesse must be > 0"));
        }
        let x = PI / finesse;
        let lower = exp_integral_e1(Complex64::new(-x, PI))?;
        let upper = exp_integral_e1(Complex64::new(x, PI))?;
        Ok(Self {
            c_plus: PI + lower.im,
            c_minus: -upper.im,
        })
    }

    /// `c₊ e^{-π/F} + c₋ e^{π/F}`.
    pub fn combination(&self, finesse: f64) -> f64 {
        let x = PI / finesse;
        self.c_plus * (-x).exp() + self.c_minus * x.exp()
    }
}

/// Fourier coefficients of `α(ν)` over one period, in 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierCoefficients {
    pub zeroth: f64,
    pub minus_first: f64,
}

pub fn fourier_coefficients(afc: &AfcParameters, ensemble: &EnsembleParameters) -> Result<FourierCoefficients> {
    afc.validate()?;
    ensemble.validate()?;
    let alpha0 = ensemble.peak_absorption();
    let (zeroth, minus_first) = relative_fourier_coefficients(afc.hole_depth, afc.finesse())?;
    Ok(FourierCoefficients {
        zeroth: alpha0 * zeroth,
        minus_first: alpha0 * minus_first,
    })
}

/// `(F₀/α₀, F₋₁/α₀)` as functions of depth and finesse only.
pub fn relative_fourier_coefficients(hole_depth: f64, finesse: f64) -> Result<(f64, f64)> {
    if !(finesse > 0.0) {
        return Err(Error::domain("finesse must be > 0"));
    }
    let zeroth = 1.0 - hole_depth / finesse * finesse.atan();
    if hole_depth == 0.0 {
        return Ok((zeroth, 0.0));
    }
    let coeffs = EchoCoefficients::for_finesse(finesse)?;
    let minus_first = -hole_depth / (2.0 * finesse) * coeffs.combination(finesse);
    Ok((zeroth, minus_first))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyResult {
    pub eta: f64,
    /// `F₀ L̃`, the background absorption exponent.
    pub f0_term: f64,
    /// `|F₋₁ L̃|`, the first-echo amplitude.
    pub f_minus1_term: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

/// `η = |F₋₁ L̃|² e^{-F₀ L̃}`.
pub fn closed_form_efficiency(afc: &AfcParameters, ensemble: &EnsembleParameters) -> Result<EfficiencyResult> {
    let coeffs = fourier_coefficients(afc, ensemble)?;
    let length = ensemble.waveguide_length_m;
    let f0_term = coeffs.zeroth * length;
    let f_minus1_term = (coeffs.minus_first * length).abs();
    let (c_plus, c_minus) = if afc.hole_depth == 0.0 {
        (0.0, 0.0)
    } else {
        let c = EchoCoefficients::for_finesse(afc.finesse())?;
        (c.c_plus, c.c_minus)
    };
    Ok(EfficiencyResult {
        eta: f_minus1_term * f_minus1_term * (-f0_term).exp(),
        f0_term,
        f_minus1_term,
        c_plus,
        c_minus,
    })
}

/// Efficiency written in terms of the reduced depth `d̃ = d/F`:
/// `η = (A d̃/2)² e^{-d̃(F - A arctan F)} (c₊e^{-π/F} + c₋e^{π/F})²`.
pub fn efficiency_from_reduced_depth(hole_depth: f64, reduced_depth: f64, finesse: f64) -> Result<f64> {
    if hole_depth == 0.0 || reduced_depth == 0.0 {
        return Ok(0.0);
    }
    let s = EchoCoefficients::for_finesse(finesse)?.combination(finesse);
    let prefactor = hole_depth * reduced_depth / 2.0;
    Ok(prefactor * prefactor * (-reduced_depth * (finesse - hole_depth * finesse.atan())).exp() * s * s)
}

/// Efficiency for a depth reported under `convention`, without needing a
/// waveguide length.
pub fn efficiency_for_depth(afc: &AfcParameters, depth: f64, convention: DepthConvention) -> Result<f64> {
    afc.validate()?;
    let f = afc.finesse();
    let d = convention.to_optical_depth(depth, f);
    if !(d >= 0.0) {
        return Err(Error::domain("optical depth must be >= 0"));
    }
    efficiency_from_reduced_depth(afc.hole_depth, d / f, f)
}

/// Optimal depth `2F / arctan F` for a comb of Lorentzian absorption peaks.
pub fn optimal_lorentzian_peak_depth(finesse: f64) -> Result<f64> {
    if !(finesse > 0.0) {
        return Err(Error::domain("finesse must be > 0"));
    }
    Ok(2.0 * finesse / finesse.atan())
}

/// Shortest storable pulse, `(N Δν)⁻¹`.
pub fn min_pulse_duration(afc: &AfcParameters) -> f64 {
    1.0 / afc.bandwidth()
}

/// Shortest pulse the inhomogeneous line can support, `Γ_inh⁻¹`.
pub fn inhomogeneous_min_pulse_duration(ensemble: &EnsembleParameters) -> f64 {
    1.0 / ensemble.inhom_fwhm_hz
}
