//! Linear-response simulation of pulse storage in a comb-shaped absorber.
//!
//! A pulse envelope sampled on a uniform grid is filtered by the field
//! transfer function `H(ν) = exp(-χ(ν)/2)` of the medium, where the real part
//! of `χ` is the optical-depth profile `d α(ν)/α₀` and the imaginary part is
//! its causal (Kramers–Kronig) partner. Echoes are read out by integrating
//! `|E(t)|²` in windows around multiples of the storage time.
//!
//! Time and frequency follow the FFT convention `E(t) = Σ E(ν) e^{+2πiνt}`;
//! a causal response occupies the first half of the time axis.

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::comb::{AfcParameters, EnsembleParameters};
use crate::error::{Error, Result};

/// Default half-width of the echo integration window.
pub const DEFAULT_ECHO_WINDOW_S: f64 = 30e-9;

/// Complex field envelope on a uniform time grid.
///
/// Samples are in units of √(photons/s) so that `Σ|s|² dt` is a photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseWaveform {
    pub time_step: f64,
    pub start_time: f64,
    pub samples: Vec<Complex64>,
    pub carrier_detuning_hz: f64,
    pub photon_number: f64,
}

impl PulseWaveform {
    /// Wraps raw samples, zero-padding to a power-of-two length.
    pub fn from_samples(
        time_step: f64,
        start_time: f64,
        mut samples: Vec<Complex64>,
        carrier_detuning_hz: f64,
    ) -> Result<Self> {
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(Error::validation("time_step", "must be > 0"));
        }
        if samples.is_empty() {
            return Err(Error::validation("samples", "waveform is empty"));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::validation("samples", "non-finite sample"));
        }
        samples.resize(samples.len().next_power_of_two(), Complex64::new(0.0, 0.0));
        let mut pulse = Self {
            time_step,
            start_time,
            samples,
            carrier_detuning_hz,
            photon_number: 0.0,
        };
        pulse.photon_number = pulse.energy();
        Ok(pulse)
    }

    /// Gaussian pulse with intensity FWHM `fwhm`, centred at `center`.
    pub fn gaussian(grid: &FrequencyGrid, fwhm: f64, center: f64, photon_number: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::validation("pulse.fwhm_s", "must be > 0"));
        }
        if !(photon_number >= 0.0) {
            return Err(Error::validation("pulse.photon_number", "must be >= 0"));
        }
        let samples: Vec<Complex64> = (0..grid.len)
            .map(|j| {
                let t = j as f64 * grid.time_step - center;
                Complex64::new((-2.0 * LN_2 * t * t / (fwhm * fwhm)).exp(), 0.0)
            })
            .collect();
        let mut pulse = Self {
            time_step: grid.time_step,
            start_time: 0.0,
            samples,
            carrier_detuning_hz: 0.0,
            photon_number,
        };
        let energy = pulse.energy();
        let scale = if energy > 0.0 { (photon_number / energy).sqrt() } else { 0.0 };
        for s in pulse.samples.iter_mut() {
            *s *= scale;
        }
        Ok(pulse)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.time_step
    }

    /// `Σ |s|² dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.time_step
    }

    /// Energy-weighted mean time.
    pub fn centroid(&self) -> f64 {
        let total: f64 = self.samples.iter().map(|s| s.norm_sqr()).sum();
        if total == 0.0 {
            return self.start_time;
        }
        let weighted: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, s)| self.time(j) * s.norm_sqr())
            .sum();
        weighted / total
    }

    /// Intensity FWHM estimated from the RMS width, exact for Gaussians.
    pub fn rms_fwhm(&self) -> f64 {
        let total: f64 = self.samples.iter().map(|s| s.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mean = self.centroid();
        let var: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, s)| (self.time(j) - mean).powi(2) * s.norm_sqr())
            .sum::<f64>()
            / total;
        (8.0 * LN_2).sqrt() * var.sqrt()
    }

    /// Circular delay by a whole number of samples.
    pub fn delayed(&self, samples: usize) -> Self {
        let mut out = self.clone();
        out.samples.rotate_right(samples % self.samples.len());
        out
    }

    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid {
            len: self.samples.len(),
            time_step: self.time_step,
            carrier_detuning_hz: self.carrier_detuning_hz,
        }
    }
}

/// Uniform time grid and its conjugate frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// Number of samples, a power of two.
    pub len: usize,
    pub time_step: f64,
    /// Detuning of the pulse carrier from the comb centre, Hz.
    pub carrier_detuning_hz: f64,
}

impl FrequencyGrid {
    pub fn new(len: usize, time_step: f64) -> Result<Self> {
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::config(format!("grid length {len} is not a power of two")));
        }
        if !(time_step > 0.0) {
            return Err(Error::config("grid time step must be > 0"));
        }
        Ok(Self {
            len,
            time_step,
            carrier_detuning_hz: 0.0,
        })
    }

    /// Default grid for a comb: span `16 N Δν`, resolution `γ/20` and a
    /// time window of at least `4 t_s`.
    pub fn for_comb(afc: &AfcParameters) -> Result<Self> {
        Self::with_span(afc, 16.0 * afc.bandwidth())
    }

    /// Grid with at least the given frequency span and the default resolution.
    pub fn with_span(afc: &AfcParameters, span_hz: f64) -> Result<Self> {
        afc.validate()?;
        let max_step = (afc.hole_fwhm_hz / 20.0).min(afc.period_hz / 4.0);
        let len = ((span_hz / max_step).ceil() as usize).next_power_of_two();
        Self::new(len, 1.0 / span_hz)
    }

    pub fn span(&self) -> f64 {
        1.0 / self.time_step
    }

    pub fn freq_step(&self) -> f64 {
        1.0 / (self.len as f64 * self.time_step)
    }

    pub fn time_window(&self) -> f64 {
        self.len as f64 * self.time_step
    }

    /// Baseband frequency of FFT bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        let df = self.freq_step();
        if k < self.len / 2 {
            k as f64 * df
        } else {
            (k as f64 - self.len as f64) * df
        }
    }

    pub fn with_carrier(mut self, carrier_detuning_hz: f64) -> Self {
        self.carrier_detuning_hz = carrier_detuning_hz;
        self
    }
}

/// Spectral shape of the individual holes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoleShape {
    /// One Lorentzian per period, cut at the period boundaries; dispersion
    /// from a discrete Kramers–Kronig transform. Consistent with the closed
    /// form efficiency.
    #[default]
    PeriodicHole,
    /// Sum of complex Lorentzians, one per tooth, with analytic dispersion.
    LorentzianSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagationModel {
    #[serde(default)]
    pub hole_shape: HoleShape,
    /// Scale the depth by a Lorentzian inhomogeneous line of the ensemble FWHM.
    #[serde(default)]
    pub inhomogeneous_envelope: bool,
}

#[derive(Debug, Clone)]
pub struct TransferFunction {
    pub grid: FrequencyGrid,
    /// `H` at each FFT bin, in FFT order.
    pub values: Vec<Complex64>,
    pub optical_depth: f64,
    pub afc: AfcParameters,
}

impl TransferFunction {
    /// Identity filter on a grid.
    pub fn identity(grid: FrequencyGrid, afc: AfcParameters) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(1.0, 0.0); grid.len],
            optical_depth: 0.0,
            afc,
        }
    }

    pub fn freq_step(&self) -> f64 {
        self.grid.freq_step()
    }

    fn is_identity(&self) -> bool {
        self.values.iter().all(|h| h.re == 1.0 && h.im == 0.0)
    }

    /// Optical-depth profile `-2 ln|H|` at bin `k`.
    pub fn depth_profile(&self, k: usize) -> f64 {
        -2.0 * self.values[k].norm().ln()
    }

    /// Largest |impulse response| at negative times relative to its peak, for
    /// `H - H(∞)`.
    pub fn causality_violation(&self, asymptote: Complex64) -> f64 {
        let n = self.values.len();
        let mut buf: Vec<Complex64> = self.values.iter().map(|h| h - asymptote).collect();
        FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
        let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let acausal = buf[n / 2 + 1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        acausal / peak
    }
}

fn lorentzian(offset: f64, half_width: f64) -> f64 {
    let hw2 = half_width * half_width;
    hw2 / (hw2 + offset * offset)
}

fn plan(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
}

pub fn build_transfer_function(
    afc: &AfcParameters,
    ensemble: &EnsembleParameters,
    grid: &FrequencyGrid,
    model: &PropagationModel,
) -> Result<TransferFunction> {
    afc.validate()?;
    ensemble.validate()?;
    if grid.span() < 4.0 * afc.bandwidth() {
        return Err(Error::config(format!(
            "grid span {:e} Hz is below 4x the comb width {:e} Hz",
            grid.span(),
            afc.bandwidth()
        )));
    }
    if grid.freq_step() > afc.hole_fwhm_hz / 10.0 {
        return Err(Error::config(format!(
            "frequency step {:e} Hz does not resolve holes of width {:e} Hz (need <= γ/10)",
            grid.freq_step(),
            afc.hole_fwhm_hz
        )));
    }
    let d = ensemble.optical_depth;
    let envelope = |nu: f64| -> f64 {
        if model.inhomogeneous_envelope {
            lorentzian(nu - ensemble.center_detuning_hz, ensemble.inhom_fwhm_hz / 2.0)
        } else {
            1.0
        }
    };
    let chi = match model.hole_shape {
        HoleShape::PeriodicHole => periodic_hole_susceptibility(afc, grid, d, envelope),
        HoleShape::LorentzianSum => lorentzian_sum_susceptibility(afc, ensemble, grid, d, model),
    };
    let min_absorption = chi.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    if min_absorption < -1e-12 * d.max(f64::MIN_POSITIVE) {
        return Err(Error::config(format!(
            "comb is not passive: absorption reaches {min_absorption:e} (overlapping holes with A = {})",
            afc.hole_depth
        )));
    }
    let values = chi.iter().map(|c| (-c / 2.0).exp()).collect();
    Ok(TransferFunction {
        grid: *grid,
        values,
        optical_depth: d,
        afc: *afc,
    })
}

fn periodic_hole_susceptibility(
    afc: &AfcParameters,
    grid: &FrequencyGrid,
    d: f64,
    envelope: impl Fn(f64) -> f64,
) -> Vec<Complex64> {
    let n = grid.len;
    let p = afc.period_hz;
    let half_teeth = f64::from(afc.tooth_count) / 2.0;
    let tooth_offset = if afc.tooth_count.is_multiple_of(2) { 0.5 } else { 0.0 };
    let half_width = afc.hole_fwhm_hz / 2.0;
    let mut profile: Vec<Complex64> = (0..n)
        .map(|k| {
            let nu = grid.frequency(k) + grid.carrier_detuning_hz;
            // teeth at (m + tooth_offset) p for |m + tooth_offset| < N/2
            let index = (nu / p - tooth_offset).round();
            let hole = if (index + tooth_offset).abs() < half_teeth {
                lorentzian(nu - (index + tooth_offset) * p, half_width)
            } else {
                0.0
            };
            Complex64::new(d * envelope(nu) * (1.0 - afc.hole_depth * hole), 0.0)
        })
        .collect();
    let (forward, inverse) = plan(n);
    // kernel in time, then keep the causal half (analytic-signal construction)
    inverse.process(&mut profile);
    let scale = 1.0 / n as f64;
    for (j, v) in profile.iter_mut().enumerate() {
        let weight = if j == 0 || j == n / 2 {
            1.0
        } else if j < n / 2 {
            2.0
        } else {
            0.0
        };
        *v *= weight * scale;
    }
    forward.process(&mut profile);
    profile
}

fn lorentzian_sum_susceptibility(
    afc: &AfcParameters,
    ensemble: &EnsembleParameters,
    grid: &FrequencyGrid,
    d: f64,
    model: &PropagationModel,
) -> Vec<Complex64> {
    let half_width = afc.hole_fwhm_hz / 2.0;
    let teeth: Vec<(f64, f64)> = afc
        .tooth_frequencies()
        .into_iter()
        .map(|f| {
            let weight = if model.inhomogeneous_envelope {
                lorentzian(f - ensemble.center_detuning_hz, ensemble.inhom_fwhm_hz / 2.0)
            } else {
                1.0
            };
            (f, afc.hole_depth * weight)
        })
        .collect();
    let inhom_half = ensemble.inhom_fwhm_hz / 2.0;
    (0..grid.len)
        .map(|k| {
            let nu = grid.frequency(k) + grid.carrier_detuning_hz;
            let background = if model.inhomogeneous_envelope {
                inhom_half / Complex64::new(inhom_half, nu - ensemble.center_detuning_hz)
            } else {
                Complex64::new(1.0, 0.0)
            };
            let holes: Complex64 = teeth
                .iter()
                .map(|&(f, depth)| depth * half_width / Complex64::new(half_width, nu - f))
                .sum();
            d * (background - holes)
        })
        .collect()
}

/// Filters `pulse` through `h`: `IFFT(H · FFT(pulse))`.
pub fn propagate(pulse: &PulseWaveform, h: &TransferFunction) -> Result<PulseWaveform> {
    let n = pulse.samples.len();
    if n != h.values.len() {
        return Err(Error::config(format!(
            "pulse has {n} samples but the transfer function has {}",
            h.values.len()
        )));
    }
    if ((pulse.time_step - h.grid.time_step) / h.grid.time_step).abs() > 1e-12 {
        return Err(Error::config("pulse time step differs from the transfer-function grid"));
    }
    if pulse.carrier_detuning_hz != h.grid.carrier_detuning_hz {
        return Err(Error::config("pulse carrier differs from the transfer-function grid"));
    }
    if h.is_identity() {
        return Ok(pulse.clone());
    }
    let bandwidth = spectral_fwhm(pulse);
    if bandwidth > h.grid.span() / 2.0 {
        return Err(Error::config(format!(
            "pulse bandwidth {bandwidth:e} Hz exceeds half the grid span {:e} Hz",
            h.grid.span()
        )));
    }
    let (forward, inverse) = plan(n);
    let mut buf = pulse.samples.clone();
    forward.process(&mut buf);
    for (b, hv) in buf.iter_mut().zip(&h.values) {
        *b *= hv;
    }
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    for b in buf.iter_mut() {
        *b *= scale;
    }
    let mut out = PulseWaveform {
        time_step: pulse.time_step,
        start_time: pulse.start_time,
        samples: buf,
        carrier_detuning_hz: pulse.carrier_detuning_hz,
        photon_number: 0.0,
    };
    out.photon_number = out.energy();
    if out.photon_number > pulse.energy() * (1.0 + 1e-9) {
        return Err(Error::Numerical(format!(
            "passive filter amplified the pulse: {:e} -> {:e}",
            pulse.energy(),
            out.photon_number
        )));
    }
    Ok(out)
}

/// Intensity-spectrum FWHM from the RMS spectral width.
fn spectral_fwhm(pulse: &PulseWaveform) -> f64 {
    let n = pulse.samples.len();
    let (forward, _) = plan(n);
    let mut buf = pulse.samples.clone();
    forward.process(&mut buf);
    let grid = pulse.grid();
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mean: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, c)| grid.frequency(k) * c.norm_sqr())
        .sum::<f64>()
        / total;
    let var: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, c)| (grid.frequency(k) - mean).powi(2) * c.norm_sqr())
        .sum::<f64>()
        / total;
    (8.0 * LN_2).sqrt() * var.sqrt()
}

/// Warning text when a pulse is shorter than the comb can store.
pub fn duration_warning(pulse: &PulseWaveform, afc: &AfcParameters) -> Option<String> {
    let min = crate::comb::min_pulse_duration(afc);
    let fwhm = pulse.rms_fwhm();
    (fwhm < min).then(|| {
        format!("pulse FWHM {fwhm:e} s is shorter than the comb supports ({min:e} s); the echo will be distorted")
    })
}

/// Where to look for echoes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoWindows {
    /// Arrival time of the input pulse at the output (no delay in the model).
    pub pulse_center_s: f64,
    pub storage_time_s: f64,
    pub halfwidth_s: f64,
    /// Number of echo orders to integrate.
    pub orders: usize,
}

impl EchoWindows {
    pub fn new(pulse_center_s: f64, storage_time_s: f64) -> Self {
        Self {
            pulse_center_s,
            storage_time_s,
            halfwidth_s: DEFAULT_ECHO_WINDOW_S,
            orders: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoReport {
    pub echo_times: Vec<f64>,
    /// Energy in each echo window relative to the input photon number.
    pub echo_energies: Vec<f64>,
    pub transmitted_energy: f64,
}

impl EchoReport {
    /// First-echo efficiency.
    pub fn efficiency(&self) -> f64 {
        self.echo_energies.first().copied().unwrap_or(0.0)
    }
}

pub fn detect_echoes(output: &PulseWaveform, input_photon_number: f64, windows: &EchoWindows) -> Result<EchoReport> {
    if !(windows.halfwidth_s > 0.0) {
        return Err(Error::config("echo window half-width must be > 0"));
    }
    if windows.storage_time_s <= 2.0 * windows.halfwidth_s {
        return Err(Error::config(format!(
            "echo windows of ±{:e} s overlap at storage time {:e} s",
            windows.halfwidth_s, windows.storage_time_s
        )));
    }
    if !(input_photon_number > 0.0) {
        return Err(Error::domain("input photon number must be > 0"));
    }
    let t_end = output.time(output.len());
    let last = windows.pulse_center_s + windows.orders as f64 * windows.storage_time_s + windows.halfwidth_s;
    let first = windows.pulse_center_s - windows.halfwidth_s;
    if first < output.start_time || last > t_end {
        return Err(Error::config(format!(
            "echo windows [{first:e}, {last:e}] s fall outside the waveform [{:e}, {t_end:e}] s",
            output.start_time
        )));
    }
    let integrate = |center: f64| -> f64 {
        let lo = ((center - windows.halfwidth_s - output.start_time) / output.time_step).ceil() as usize;
        let hi = ((center + windows.halfwidth_s - output.start_time) / output.time_step).floor() as usize;
        output.samples[lo..=hi.min(output.len() - 1)]
            .iter()
            .map(|s| s.norm_sqr())
            .sum::<f64>()
            * output.time_step
            / input_photon_number
    };
    let echo_times: Vec<f64> = (1..=windows.orders)
        .map(|k| windows.pulse_center_s + k as f64 * windows.storage_time_s)
        .collect();
    let echo_energies = echo_times.iter().map(|&t| integrate(t)).collect();
    Ok(EchoReport {
        transmitted_energy: integrate(windows.pulse_center_s),
        echo_times,
        echo_energies,
    })
}

/// Settings for a complete store-and-retrieve simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageSetup {
    /// Intensity FWHM of the Gaussian input pulse.
    pub pulse_fwhm_s: f64,
    pub photon_number: f64,
    /// Input pulse centre; defaults to one storage time into the window.
    pub pulse_center_s: Option<f64>,
    /// Frequency span of the grid; defaults to `16 N Δν`.
    pub span_hz: Option<f64>,
    pub echo_window_s: f64,
    pub model: PropagationModel,
}

impl Default for StorageSetup {
    fn default() -> Self {
        Self {
            pulse_fwhm_s: 9.9e-9,
            photon_number: 21e3,
            pulse_center_s: None,
            span_hz: None,
            echo_window_s: DEFAULT_ECHO_WINDOW_S,
            model: PropagationModel::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StorageRun {
    pub input: PulseWaveform,
    pub output: PulseWaveform,
    pub echoes: EchoReport,
    pub warnings: Vec<String>,
}

/// Builds the grid, transfer function and Gaussian input, propagates, and
/// integrates the echo windows.
pub fn simulate_storage(afc: &AfcParameters, ensemble: &EnsembleParameters, setup: &StorageSetup) -> Result<StorageRun> {
    let span = setup.span_hz.unwrap_or(16.0 * afc.bandwidth());
    let grid = FrequencyGrid::with_span(afc, span)?;
    let t_s = afc.storage_time();
    if grid.time_window() < 4.0 * t_s {
        return Err(Error::config("time window shorter than four storage times"));
    }
    let center = setup.pulse_center_s.unwrap_or(t_s.min(grid.time_window() / 8.0));
    let input = PulseWaveform::gaussian(&grid, setup.pulse_fwhm_s, center, setup.photon_number)?;
    let h = build_transfer_function(afc, ensemble, &grid, &setup.model)?;
    let output = propagate(&input, &h)?;
    let mut windows = EchoWindows::new(center, t_s);
    windows.halfwidth_s = setup.echo_window_s;
    let echoes = detect_echoes(&output, input.photon_number, &windows)?;
    let warnings = duration_warning(&input, afc).into_iter().collect();
    Ok(StorageRun {
        input,
        output,
        echoes,
        warnings,
    })
}

/// Peak time of `|E|²` inside `[from, to]`.
pub fn peak_time(pulse: &PulseWaveform, from: f64, to: f64) -> Option<f64> {
    let lo = ((from - pulse.start_time) / pulse.time_step).ceil().max(0.0) as usize;
    let hi = (((to - pulse.start_time) / pulse.time_step).floor() as usize).min(pulse.len().saturating_sub(1));
    (lo..=hi)
        .max_by(|&a, &b| pulse.samples[a].norm_sqr().total_cmp(&pulse.samples[b].norm_sqr()))
        .map(|j| pulse.time(j))
}
