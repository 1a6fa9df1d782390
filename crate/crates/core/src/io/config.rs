//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::comb::{AfcParameters, DepthConvention, EnsembleParameters};
use crate::propagation::{HoleShape, PropagationModel, StorageSetup, DEFAULT_ECHO_WINDOW_S};
use crate::sequence::{EqualizerSettings, ModulationPlan, PhaseSearch, PumpModel};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    EfficiencySweep,
    Propagate,
    RelaxationFit,
    CombDesign,
    VisibilityFit,
    EfficiencyFit,
}

impl ScenarioKind {
    pub fn section(self) -> &'static str {
        match self {
            ScenarioKind::EfficiencySweep => "efficiency_sweep",
            ScenarioKind::Propagate => "propagate",
            ScenarioKind::RelaxationFit => "relaxation_fit",
            ScenarioKind::CombDesign => "comb_design",
            ScenarioKind::VisibilityFit => "visibility_fit",
            ScenarioKind::EfficiencyFit => "efficiency_fit",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Emit CSV series next to the JSON results.
    #[serde(default = "yes")]
    pub plot_data: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            plot_data: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.points == 0 || !(self.start > 0.0 && self.stop >= self.start && self.stop.is_finite()) {
            return Err(Error::validation(field, "need 0 < start ≤ stop and points ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySweepConfig {
    pub hole_depth: f64,
    pub hole_fwhm_hz: f64,
    pub tooth_count: u32,
    pub optical_depth: f64,
    #[serde(default)]
    pub depth_convention: DepthConvention,
    pub storage_time_s: Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub fwhm_s: f64,
    pub photon_number: f64,
    pub center_s: Option<f64>,
    pub span_hz: Option<f64>,
    pub echo_window_s: f64,
    pub hole_shape: HoleShape,
    pub inhomogeneous_envelope: bool,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let setup = StorageSetup::default();
        Self {
            fwhm_s: setup.pulse_fwhm_s,
            photon_number: setup.photon_number,
            center_s: None,
            span_hz: None,
            echo_window_s: DEFAULT_ECHO_WINDOW_S,
            hole_shape: HoleShape::default(),
            inhomogeneous_envelope: false,
        }
    }
}

impl PulseConfig {
    pub fn setup(&self) -> StorageSetup {
        StorageSetup {
            pulse_fwhm_s: self.fwhm_s,
            photon_number: self.photon_number,
            pulse_center_s: self.center_s,
            span_hz: self.span_hz,
            echo_window_s: self.echo_window_s,
            model: PropagationModel {
                hole_shape: self.hole_shape,
                inhomogeneous_envelope: self.inhomogeneous_envelope,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    pub afc: AfcParameters,
    pub ensemble: EnsembleParameters,
    #[serde(default)]
    pub pulse: PulseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationModel {
    /// `temperature_K, lifetime_s, sigma_s`
    Orbach,
    /// `field_T, lifetime_s, sigma_s`
    Direct,
    /// `delay_s, area, sigma`
    HoleDecay,
    /// `delay_s, freq_Hz, signal_counts, repetition, probe_index`
    InterleavedScans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationFitConfig {
    pub model: RelaxationModel,
    pub data: PathBuf,
    pub crystal_field_hz: Option<f64>,
    #[serde(default)]
    pub crystal_field_sigma_hz: f64,
    pub temperature_k: Option<f64>,
    #[serde(default)]
    pub temperature_sigma_k: f64,
    pub g_eff: Option<f64>,
    #[serde(default)]
    pub g_eff_sigma: f64,
    #[serde(default)]
    pub field_rel_sigma: f64,
    /// Resampled uncertainty instead of the covariance estimate.
    pub resample_draws: Option<usize>,
}

fn default_beta_max() -> f64 {
    6.0
}
fn default_grid_step() -> f64 {
    0.01
}
fn default_repetitions() -> u32 {
    5
}
fn default_pulse_duration() -> f64 {
    6e-6
}
fn default_pulse_power() -> f64 {
    0.5e-6
}
fn default_pulse_separation() -> f64 {
    100e-6
}
fn default_max_depth() -> f64 {
    1.0
}
fn default_hole_fwhm() -> f64 {
    0.74e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombDesignConfig {
    pub comb_period_hz: f64,
    #[serde(default = "default_beta_max")]
    pub beta_max: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Fixed `φ₁ − 3φ₂`; zero when neither this nor a scan is given.
    pub relative_phase: Option<f64>,
    pub phase_scan_step: Option<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_pulse_duration")]
    pub pulse_duration_s: f64,
    #[serde(default = "default_pulse_power")]
    pub pulse_power_w: f64,
    #[serde(default = "default_pulse_separation")]
    pub pulse_separation_s: f64,
    /// Calibrate `κ` to reach this depth on the weakest line.
    pub target_depth: Option<f64>,
    /// Or give `κ` directly.
    pub saturation_per_joule: Option<f64>,
    #[serde(default = "default_max_depth")]
    pub max_depth: f64,
    #[serde(default = "default_hole_fwhm")]
    pub hole_fwhm_hz: f64,
}

impl CombDesignConfig {
    pub fn equalizer(&self) -> EqualizerSettings {
        EqualizerSettings {
            beta_max: self.beta_max,
            grid_step: self.grid_step,
            phase: match self.phase_scan_step {
                Some(step) => PhaseSearch::Scan { step },
                None => PhaseSearch::Fixed {
                    relative_phase: self.relative_phase.unwrap_or(0.0),
                },
            },
        }
    }

    /// Plan for given modulation indices; the relative phase is carried
    /// by EOM1.
    pub fn plan(&self, beta1: f64, beta2: f64, relative_phase: f64) -> ModulationPlan {
        let mut plan = ModulationPlan::standard(self.comb_period_hz, beta1, beta2);
        plan.rf_phase1 = relative_phase;
        plan.repetitions = self.repetitions;
        plan.pulse_duration_s = self.pulse_duration_s;
        plan.pulse_power_w = self.pulse_power_w;
        plan.pulse_separation_s = self.pulse_separation_s;
        plan
    }

    pub fn pump(&self, saturation_per_joule: f64) -> PumpModel {
        PumpModel {
            saturation_per_joule,
            max_depth: self.max_depth,
            hole_fwhm_hz: self.hole_fwhm_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilityFitConfig {
    pub data: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyFitConfig {
    pub data: PathBuf,
    pub hole_depth: f64,
    pub hole_fwhm_hz: f64,
    pub tooth_count: u32,
    #[serde(default)]
    pub depth_convention: DepthConvention,
    pub resample_draws: Option<usize>,
    #[serde(default)]
    pub hole_depth_sigma: f64,
    #[serde(default)]
    pub hole_fwhm_sigma_hz: f64,
}

impl EfficiencyFitConfig {
    /// `A`, `γ`, `N` with a placeholder period.
    pub fn afc(&self) -> Result<AfcParameters> {
        AfcParameters::new(self.hole_depth, self.hole_fwhm_hz, 1.0, self.tooth_count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub scenario: Option<ScenarioKind>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    pub efficiency_sweep: Option<EfficiencySweepConfig>,
    pub propagate: Option<PropagateConfig>,
    pub relaxation_fit: Option<RelaxationFitConfig>,
    pub comb_design: Option<CombDesignConfig>,
    pub visibility_fit: Option<VisibilityFitConfig>,
    pub efficiency_fit: Option<EfficiencyFitConfig>,
    /// Directory that relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Prefixes the field of a validation error with its config section.
fn within<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Validation { field, message } => Error::Validation {
            field: format!("{section}.{field}"),
            message,
        },
        other => other,
    })
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be ≥ 0, got {v}")))
    }
}

fn draws(field: &str, n: Option<usize>) -> Result<()> {
    match n {
        Some(n) if n < 100 => Err(Error::validation(field, format!("{n} < 100"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if config.format_version != FORMAT_VERSION {
            return Err(Error::validation(
                "format_version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", config.format_version),
            ));
        }
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn require<'a, T>(&self, section: &'a Option<T>, kind: ScenarioKind) -> Result<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| Error::validation(kind.section(), "section is required for this scenario"))
    }

    fn existing(&self, field: &str, path: &Path) -> Result<()> {
        let p = self.resolve(path);
        if p.is_file() {
            Ok(())
        } else {
            Err(Error::validation(field, format!("file {} does not exist", p.display())))
        }
    }

    /// Checks everything `kind` needs before any computation.
    pub fn validate(&self, kind: ScenarioKind) -> Result<()> {
        if let Some(declared) = self.scenario {
            if declared != kind {
                return Err(Error::validation(
                    "scenario",
                    format!("config declares {declared:?} but {kind:?} was requested"),
                ));
            }
        }
        match kind {
            ScenarioKind::EfficiencySweep => {
                let s = self.require(&self.efficiency_sweep, kind)?;
                within(kind.section(), AfcParameters::new(s.hole_depth, s.hole_fwhm_hz, 1.0, s.tooth_count))?;
                within(kind.section(), positive("optical_depth", s.optical_depth))?;
                within(kind.section(), s.storage_time_s.validate("storage_time_s"))?;
            }
            ScenarioKind::Propagate => {
                let s = self.require(&self.propagate, kind)?;
                within("propagate.afc", s.afc.validate())?;
                within("propagate.ensemble", s.ensemble.validate())?;
                within("propagate.pulse", positive("fwhm_s", s.pulse.fwhm_s))?;
                within("propagate.pulse", positive("photon_number", s.pulse.photon_number))?;
                within("propagate.pulse", positive("echo_window_s", s.pulse.echo_window_s))?;
                if let Some(span) = s.pulse.span_hz {
                    within("propagate.pulse", positive("span_hz", span))?;
                }
            }
            ScenarioKind::RelaxationFit => {
                let s = self.require(&self.relaxation_fit, kind)?;
                let sec = kind.section();
                self.existing(&format!("{sec}.data"), &s.data)?;
                within(sec, draws("resample_draws", s.resample_draws))?;
                match s.model {
                    RelaxationModel::Orbach => {
                        let e = s
                            .crystal_field_hz
                            .ok_or_else(|| Error::validation(format!("{sec}.crystal_field_hz"), "required for the Orbach fit"))?;
                        within(sec, positive("crystal_field_hz", e))?;
                        within(sec, non_negative("crystal_field_sigma_hz", s.crystal_field_sigma_hz))?;
                    }
                    RelaxationModel::Direct => {
                        let t = s
                            .temperature_k
                            .ok_or_else(|| Error::validation(format!("{sec}.temperature_k"), "required for the direct fit"))?;
                        let g = s.g_eff.ok_or_else(|| {
                            Error::validation(format!("{sec}.g_eff"), "required for the direct fit (no default)")
                        })?;
                        within(sec, positive("temperature_k", t))?;
                        within(sec, positive("g_eff", g))?;
                        within(sec, non_negative("temperature_sigma_k", s.temperature_sigma_k))?;
                        within(sec, non_negative("g_eff_sigma", s.g_eff_sigma))?;
                        within(sec, non_negative("field_rel_sigma", s.field_rel_sigma))?;
                    }
                    RelaxationModel::HoleDecay | RelaxationModel::InterleavedScans => {}
                }
            }
            ScenarioKind::CombDesign => {
                let s = self.require(&self.comb_design, kind)?;
                let sec = kind.section();
                if s.relative_phase.is_some() && s.phase_scan_step.is_some() {
                    return Err(Error::validation(
                        format!("{sec}.phase_scan_step"),
                        "give either relative_phase or phase_scan_step, not both",
                    ));
                }
                if let Some(step) = s.phase_scan_step {
                    within(sec, positive("phase_scan_step", step))?;
                }
                within(sec, positive("grid_step", s.grid_step))?;
                within(sec, positive("beta_max", s.beta_max))?;
                within(sec, positive("hole_fwhm_hz", s.hole_fwhm_hz))?;
                if !(s.max_depth > 0.0 && s.max_depth <= 1.0) {
                    return Err(Error::validation(format!("{sec}.max_depth"), "must lie in (0, 1]"));
                }
                within(sec, s.plan(0.0, 0.0, 0.0).validate())?;
                match (s.target_depth, s.saturation_per_joule) {
                    (Some(_), Some(_)) => {
                        return Err(Error::validation(
                            format!("{sec}.saturation_per_joule"),
                            "give either target_depth or saturation_per_joule, not both",
                        ))
                    }
                    (Some(d), None) if !(d > 0.0 && d < s.max_depth) => {
                        return Err(Error::validation(format!("{sec}.target_depth"), "must lie in (0, max_depth)"))
                    }
                    (None, Some(k)) => within(sec, non_negative("saturation_per_joule", k))?,
                    _ => {}
                }
            }
            ScenarioKind::VisibilityFit => {
                let s = self.require(&self.visibility_fit, kind)?;
                self.existing("visibility_fit.data", &s.data)?;
            }
            ScenarioKind::EfficiencyFit => {
                let s = self.require(&self.efficiency_fit, kind)?;
                let sec = kind.section();
                self.existing(&format!("{sec}.data"), &s.data)?;
                within(sec, s.afc())?;
                within(sec, draws("resample_draws", s.resample_draws))?;
                within(sec, non_negative("hole_depth_sigma", s.hole_depth_sigma))?;
                within(sec, non_negative("hole_fwhm_sigma_hz", s.hole_fwhm_sigma_hz))?;
            }
        }
        Ok(())
    }
}
