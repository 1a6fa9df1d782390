//! Burn-sequence design: sidebands from two cascaded phase modulators,
//! frequency-shifted copies from an AOM, and a saturable pumping model that
//! turns the resulting burn energies into comb parameters.
//!
//! EOM1 is driven at `12 Δν` and EOM2 at `4 Δν`, so every line sits at
//! `4 Δν (3 n₁ + n₂)`. The nine lines `m = −4..4` of that lattice are the
//! burn targets. Four AOM shifts `k Δν` interleave them into a comb of 36
//! lines.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::AfcParameters;
use crate::special::bessel_j_orders;
use crate::{Error, Result};

pub const TARGET_LINES: i32 = 9;
const HALF_TARGET: i32 = TARGET_LINES / 2;
/// Bessel orders kept by the optimizer; ample for `β ≤ 6`.
const OPTIMIZER_ORDERS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationPlan {
    /// Target comb period `Δν` in Hz.
    pub comb_period_hz: f64,
    /// Modulation index of EOM1 (driven at `12 Δν`).
    pub beta1: f64,
    /// Modulation index of EOM2 (driven at `4 Δν`).
    pub beta2: f64,
    #[serde(default)]
    pub rf_phase1: f64,
    #[serde(default)]
    pub rf_phase2: f64,
    pub aom_shifts_hz: Vec<f64>,
    pub repetitions: u32,
    pub pulse_duration_s: f64,
    pub pulse_power_w: f64,
    pub pulse_separation_s: f64,
}

impl ModulationPlan {
    /// Four AOM shifts `k Δν`, five repetitions of 6 µs, 0.5 µW pulses
    /// spaced by 100 µs.
    pub fn standard(comb_period_hz: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            comb_period_hz,
            beta1,
            beta2,
            rf_phase1: 0.0,
            rf_phase2: 0.0,
            aom_shifts_hz: (0..4).map(|k| f64::from(k) * comb_period_hz).collect(),
            repetitions: 5,
            pulse_duration_s: 6e-6,
            pulse_power_w: 0.5e-6,
            pulse_separation_s: 100e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("comb_period_hz", self.comb_period_hz),
            ("pulse_duration_s", self.pulse_duration_s),
            ("pulse_power_w", self.pulse_power_w),
            ("pulse_separation_s", self.pulse_separation_s),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(field, format!("must be positive, got {v}")));
            }
        }
        for (field, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(field, format!("must be ≥ 0, got {v}")));
            }
        }
        if !(self.rf_phase1.is_finite() && self.rf_phase2.is_finite()) {
            return Err(Error::validation("rf_phase", "must be finite"));
        }
        if self.aom_shifts_hz.is_empty() || self.aom_shifts_hz.iter().any(|s| !s.is_finite()) {
            return Err(Error::validation("aom_shifts_hz", "need at least one finite shift"));
        }
        if self.repetitions == 0 {
            return Err(Error::validation("repetitions", "must be ≥ 1"));
        }
        Ok(())
    }

    pub fn burn_pulse_count(&self) -> usize {
        self.repetitions as usize * self.aom_shifts_hz.len()
    }

    pub fn eom1_frequency(&self) -> f64 {
        12.0 * self.comb_period_hz
    }

    pub fn eom2_frequency(&self) -> f64 {
        4.0 * self.comb_period_hz
    }

    /// Only `φ₁ − 3φ₂` affects line powers.
    pub fn relative_phase(&self) -> f64 {
        self.rf_phase1 - 3.0 * self.rf_phase2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpectrum {
    /// Offsets from the carrier, ascending.
    pub frequencies: Vec<f64>,
    pub powers: Vec<f64>,
}

impl LineSpectrum {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn power_at(&self, frequency: f64, tolerance: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.powers)
            .filter(|(f, _)| (**f - frequency).abs() <= tolerance)
            .map(|(_, p)| p)
            .sum()
    }
}

fn signed_bessel(table: &[f64], n: i32) -> f64 {
    let v = table.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Smallest cutoff keeping `1 − 5e−10` of the power for index `beta`, so a
/// cascade of two modulators keeps `1 − 1e−9`.
pub fn sufficient_cutoff(beta: f64) -> usize {
    let mut k = beta.ceil() as usize + 1;
    loop {
        let j = bessel_j_orders(k, beta);
        let kept = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        if kept >= 1.0 - 5e-10 {
            return k;
        }
        k += 1;
    }
}

/// Line spectrum of the cascaded modulators, orders `|n| ≤ order_cutoff`
/// on each. Coincident lines add coherently; zero-power lines are dropped.
pub fn phase_mod_spectrum(plan: &ModulationPlan, order_cutoff: usize) -> Result<LineSpectrum> {
    plan.validate()?;
    let tables: Vec<Vec<f64>> = [plan.beta1, plan.beta2]
        .iter()
        .map(|&b| bessel_j_orders(order_cutoff, b))
        .collect();
    let kept: f64 = tables
        .iter()
        .map(|j| j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>())
        .product();
    if kept < 1.0 - 1e-9 {
        return Err(Error::config(format!(
            "order cutoff {order_cutoff} keeps only {kept:.12} of the power"
        )));
    }
    let k = order_cutoff as i32;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); (8 * k + 1) as usize];
    for n1 in -k..=k {
        let a1 = Complex64::from_polar(signed_bessel(&tables[0], n1), f64::from(n1) * plan.rf_phase1);
        for n2 in -k..=k {
            let a2 = Complex64::from_polar(signed_bessel(&tables[1], n2), f64::from(n2) * plan.rf_phase2);
            amplitudes[(3 * n1 + n2 + 4 * k) as usize] += a1 * a2;
        }
    }
    let spacing = plan.eom2_frequency();
    let (frequencies, powers) = amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| (f64::from(i as i32 - 4 * k) * spacing, a.norm_sqr()))
        .filter(|(_, p)| *p > 0.0)
        .unzip();
    Ok(LineSpectrum { frequencies, powers })
}

/// Powers of the nine target lines `m = −4..4` for relative RF phase `ψ`.
fn target_powers(j1: &[f64], j2: &[f64], relative_phase: f64) -> [f64; TARGET_LINES as usize] {
    let k = (j1.len() - 1) as i32;
    let mut out = [0.0; TARGET_LINES as usize];
    for (slot, m) in out.iter_mut().zip(-HALF_TARGET..=HALF_TARGET) {
        let mut amp = Complex64::new(0.0, 0.0);
        for n1 in -k..=k {
            let n2 = m - 3 * n1;
            if n2.abs() > k {
                continue;
            }
            let term = signed_bessel(j1, n1) * signed_bessel(j2, n2);
            amp += Complex64::from_polar(term, f64::from(n1) * relative_phase);
        }
        *slot = amp.norm_sqr();
    }
    out
}

/// Relative standard deviation of the target-line powers, or infinity
/// when they carry less than half the total power.
fn flatness_of(powers: &[f64]) -> (f64, f64) {
    let n = powers.len() as f64;
    let total: f64 = powers.iter().sum();
    let mean = total / n;
    let var = powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    let flat = if total >= 0.5 { var.sqrt() / mean } else { f64::INFINITY };
    (flat, total)
}

/// `(relative SD, fraction of power)` of the nine target lines.
pub fn sideband_flatness(beta1: f64, beta2: f64, relative_phase: f64) -> (f64, f64) {
    let j1 = bessel_j_orders(OPTIMIZER_ORDERS, beta1);
    let j2 = bessel_j_orders(OPTIMIZER_ORDERS, beta2);
    flatness_of(&target_powers(&j1, &j2, relative_phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum PhaseSearch {
    /// Keep `ψ = φ₁ − 3φ₂` fixed.
    Fixed { relative_phase: f64 },
    /// Also search `ψ ∈ [0, π]` (the objective is even in `ψ`).
    Scan { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualizerSettings {
    pub beta_max: f64,
    pub grid_step: f64,
    pub phase: PhaseSearch,
}

impl Default for EqualizerSettings {
    fn default() -> Self {
        Self {
            beta_max: 6.0,
            grid_step: 0.01,
            phase: PhaseSearch::Fixed { relative_phase: 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandEqualization {
    pub beta1: f64,
    pub beta2: f64,
    pub relative_phase: f64,
    /// Relative SD of the nine target powers.
    pub flatness: f64,
    pub target_power_fraction: f64,
    pub target_powers: [f64; TARGET_LINES as usize],
}

/// Best `(β₁, β₂)` grid point for a fixed phase, lowest index on ties.
fn grid_search(tables: &[Vec<f64>], stride: usize, phase: f64) -> (f64, usize, usize) {
    let idx: Vec<usize> = (0..tables.len()).step_by(stride).collect();
    idx.par_iter()
        .map(|&i| {
            let mut best = (f64::INFINITY, i, 0);
            for &j in &idx {
                let (f, _) = flatness_of(&target_powers(&tables[i], &tables[j], phase));
                if f < best.0 {
                    best = (f, i, j);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, 0, 0), |a, b| if b.0 < a.0 { b } else { a })
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Minimises the spread of the nine target-line powers: a full grid over
/// `[0, β_max]²` followed by coordinate-wise golden-section refinement
/// within one grid step. Lines must keep at least half of the power.
pub fn equalize_sidebands(settings: &EqualizerSettings) -> Result<SidebandEqualization> {
    if !(settings.grid_step > 0.0 && settings.beta_max > settings.grid_step) {
        return Err(Error::validation("grid_step", "must be positive and below beta_max"));
    }
    let n = (settings.beta_max / settings.grid_step).round() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * settings.grid_step).collect();
    let tables: Vec<Vec<f64>> = grid.par_iter().map(|&b| bessel_j_orders(OPTIMIZER_ORDERS, b)).collect();

    let (mut phase, scan) = match settings.phase {
        PhaseSearch::Fixed { relative_phase } => (relative_phase, false),
        PhaseSearch::Scan { step } => {
            if !(step > 0.0) {
                return Err(Error::validation("phase.step", "must be positive"));
            }
            let coarse = ((0.05 / settings.grid_step).round() as usize).max(1);
            let count = (std::f64::consts::PI / step).floor() as usize + 1;
            let best = (0..count)
                .map(|k| {
                    let psi = k as f64 * step;
                    (grid_search(&tables, coarse, psi).0, psi)
                })
                .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
            (best.1, true)
        }
    };
    let (best, i, j) = grid_search(&tables, 1, phase);
    if !best.is_finite() {
        return Err(Error::Numerical("no modulation setting keeps half the power in the target lines".into()));
    }

    let objective = |b1: f64, b2: f64, psi: f64| sideband_flatness(b1, b2, psi).0;
    let h = settings.grid_step;
    let (mut b1, mut b2) = (grid[i], grid[j]);
    let mut current = objective(b1, b2, phase);
    for _ in 0..50 {
        let before = current;
        let c1 = golden_section(|x| objective(x, b2, phase), (b1 - h).max(0.0), (b1 + h).min(settings.beta_max));
        if objective(c1, b2, phase) < current {
            b1 = c1;
            current = objective(b1, b2, phase);
        }
        let c2 = golden_section(|x| objective(b1, x, phase), (b2 - h).max(0.0), (b2 + h).min(settings.beta_max));
        if objective(b1, c2, phase) < current {
            b2 = c2;
            current = objective(b1, b2, phase);
        }
        if scan {
            let step = match settings.phase {
                PhaseSearch::Scan { step } => step,
                PhaseSearch::Fixed { .. } => unreachable!(),
            };
            let cp = golden_section(|x| objective(b1, b2, x), phase - step, phase + step);
            if objective(b1, b2, cp) < current {
                phase = cp;
                current = objective(b1, b2, phase);
            }
        }
        if before - current <= 1e-15 * before {
            break;
        }
    }
    let j1 = bessel_j_orders(OPTIMIZER_ORDERS, b1);
    let j2 = bessel_j_orders(OPTIMIZER_ORDERS, b2);
    let powers = target_powers(&j1, &j2, phase);
    let (flatness, fraction) = flatness_of(&powers);
    Ok(SidebandEqualization {
        beta1: b1,
        beta2: b2,
        relative_phase: phase,
        flatness,
        target_power_fraction: fraction,
        target_powers: powers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnCoverage {
    /// Ascending burn frequencies relative to the carrier.
    pub frequencies_hz: Vec<f64>,
    /// Power fraction of the sideband that lands on each frequency.
    pub line_powers: Vec<f64>,
    /// Total energy delivered at each frequency over all repetitions.
    pub energies_j: Vec<f64>,
    pub spacing_hz: f64,
}

/// Expands the nine target lines by every AOM shift. The result must be a
/// regular grid at `Δν` with no coincident lines.
pub fn burn_frequency_coverage(plan: &ModulationPlan) -> Result<BurnCoverage> {
    plan.validate()?;
    let cutoff = sufficient_cutoff(plan.beta1).max(sufficient_cutoff(plan.beta2));
    let spectrum = phase_mod_spectrum(plan, cutoff)?;
    let spacing = plan.eom2_frequency();
    let tol = 1e-6 * plan.comb_period_hz;
    let mut lines: Vec<(f64, f64)> = Vec::new();
    for &shift in &plan.aom_shifts_hz {
        for m in -HALF_TARGET..=HALF_TARGET {
            let f = f64::from(m) * spacing;
            lines.push((f + shift, spectrum.power_at(f, tol)));
        }
    }
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = lines.windows(2).find(|w| w[1].0 - w[0].0 <= tol) {
        return Err(Error::config(format!("burn lines collide at {:.6e} Hz", w[0].0)));
    }
    let period = plan.comb_period_hz;
    if let Some(w) = lines.windows(2).find(|w| ((w[1].0 - w[0].0) - period).abs() > tol) {
        return Err(Error::config(format!(
            "burn lines at {:.6e} and {:.6e} Hz break the {:.6e} Hz grid",
            w[0].0, w[1].0, period
        )));
    }
    let per_watt = plan.pulse_duration_s * f64::from(plan.repetitions) * plan.pulse_power_w;
    Ok(BurnCoverage {
        frequencies_hz: lines.iter().map(|l| l.0).collect(),
        line_powers: lines.iter().map(|l| l.1).collect(),
        energies_j: lines.iter().map(|l| l.1 * per_watt).collect(),
        spacing_hz: period,
    })
}

/// Saturable optical pumping `A(E) = A_max (1 − e^{−κE})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpModel {
    /// `κ` in J⁻¹.
    pub saturation_per_joule: f64,
    pub max_depth: f64,
    pub hole_fwhm_hz: f64,
}

impl PumpModel {
    pub fn new(saturation_per_joule: f64) -> Self {
        Self {
            saturation_per_joule,
            max_depth: 1.0,
            hole_fwhm_hz: 0.74e6,
        }
    }

    pub fn depth(&self, energy_j: f64) -> f64 {
        self.max_depth * (1.0 - (-self.saturation_per_joule * energy_j).exp())
    }
}

/// Comb predicted from a burn schedule. The uniform depth is the smallest
/// of the per-line depths.
pub fn pump_to_comb(coverage: &BurnCoverage, pump: &PumpModel) -> Result<AfcParameters> {
    if !(pump.saturation_per_joule >= 0.0) {
        return Err(Error::validation("saturation_per_joule", "must be ≥ 0"));
    }
    let depth = coverage
        .energies_j
        .iter()
        .map(|&e| pump.depth(e))
        .fold(f64::INFINITY, f64::min);
    let depth = if depth.is_finite() { depth } else { 0.0 };
    AfcParameters::new(depth, pump.hole_fwhm_hz, coverage.spacing_hz, coverage.frequencies_hz.len() as u32)
}

/// `κ` that makes the shallowest line reach `target_depth`.
pub fn calibrate_pump_saturation(coverage: &BurnCoverage, target_depth: f64, max_depth: f64) -> Result<f64> {
    if !(target_depth > 0.0 && target_depth < max_depth) {
        return Err(Error::domain(format!("target depth {target_depth} must lie in (0, {max_depth})")));
    }
    let e_min = coverage.energies_j.iter().copied().fold(f64::INFINITY, f64::min);
    if !(e_min > 0.0) {
        return Err(Error::domain("a burn line receives no energy"));
    }
    Ok(-(1.0 - target_depth / max_depth).ln() / e_min)
}
