use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, CurveModel, LmOptions};
use super::{resample_uncertainty, FitResult, Measured, Uncertainty};
use crate::comb::{efficiency_for_depth, AfcParameters, DepthConvention};
use crate::{Error, Result};

/// Closed-form efficiency as a function of storage time with the optical
/// depth as the only parameter.
#[derive(Debug, Clone, Copy)]
pub struct EfficiencyCurve {
    pub hole_depth: f64,
    pub hole_fwhm_hz: f64,
    pub tooth_count: u32,
    pub convention: DepthConvention,
}

impl EfficiencyCurve {
    pub fn from_afc(afc: &AfcParameters, convention: DepthConvention) -> Self {
        Self {
            hole_depth: afc.hole_depth,
            hole_fwhm_hz: afc.hole_fwhm_hz,
            tooth_count: afc.tooth_count,
            convention,
        }
    }

    pub fn efficiency(&self, storage_time_s: f64, depth: f64) -> Result<f64> {
        let afc = AfcParameters::for_storage_time(self.hole_depth, self.hole_fwhm_hz, storage_time_s, self.tooth_count)?;
        efficiency_for_depth(&afc, depth, self.convention)
    }
}

impl CurveModel for EfficiencyCurve {
    fn parameter_count(&self) -> usize {
        1
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        self.efficiency(x, p[0]).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EfficiencyFitOptions {
    pub convention: DepthConvention,
    pub uncertainty: Uncertainty,
    /// Redrawn alongside the data when resampling.
    pub hole_depth_sigma: f64,
    pub hole_fwhm_sigma_hz: f64,
}

impl Default for EfficiencyFitOptions {
    fn default() -> Self {
        Self {
            convention: DepthConvention::default(),
            uncertainty: Uncertainty::Covariance,
            hole_depth_sigma: 0.0,
            hole_fwhm_sigma_hz: 0.0,
        }
    }
}

fn fit_depth(curve: &EfficiencyCurve, t: &[f64], eta: &[f64], sigma: Option<&[f64]>) -> super::lm::LmFit {
    let mut guesses: Vec<f64> = t
        .iter()
        .zip(eta)
        .filter_map(|(&t, &e)| {
            let unit = curve.efficiency(t, 1.0).ok()?;
            (unit > 0.0 && e > 0.0).then(|| (e / unit).sqrt())
        })
        .collect();
    guesses.sort_by(f64::total_cmp);
    let start = guesses.get(guesses.len() / 2).copied().unwrap_or(1e-3);
    levenberg_marquardt(curve, t, eta, sigma, &[start], &LmOptions::default())
}

/// Fits the optical depth of an efficiency-vs-storage-time curve with `A`
/// and `γ` taken from `afc` (its period is ignored).
pub fn fit_efficiency_curve(
    storage_times: &[f64],
    efficiencies: &[f64],
    sigmas: Option<&[f64]>,
    afc: &AfcParameters,
    options: &EfficiencyFitOptions,
) -> Result<FitResult> {
    let n = storage_times.len();
    if efficiencies.len() != n || sigmas.is_some_and(|s| s.len() != n) {
        return Err(Error::domain("storage_times, efficiencies and sigmas lengths differ"));
    }
    if n < 3 {
        return Err(Error::domain(format!("efficiency fit needs ≥ 3 points, got {n}")));
    }
    if storage_times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::domain("storage times must be positive"));
    }
    if efficiencies.iter().any(|e| !e.is_finite()) || sigmas.is_some_and(|s| s.iter().any(|s| !(*s > 0.0))) {
        return Err(Error::domain("efficiencies must be finite and sigmas positive"));
    }
    afc.validate()?;
    let curve = EfficiencyCurve::from_afc(afc, options.convention);
    let fit = fit_depth(&curve, storage_times, efficiencies, sigmas);
    let names = ["optical_depth"];
    let sigma = match options.uncertainty {
        Uncertainty::None => None,
        Uncertainty::Covariance => Some(vec![fit.sigma(0).unwrap_or(f64::NAN)]),
        Uncertainty::Resample(settings) => {
            let Some(s) = sigmas else {
                return Err(Error::validation("sigmas", "resampling needs per-point sigmas"));
            };
            let data: Vec<Measured> = efficiencies.iter().zip(s).map(|(&e, &s)| Measured::new(e, s)).collect();
            let fixed = [
                Measured::new(afc.hole_depth, options.hole_depth_sigma),
                Measured::new(afc.hole_fwhm_hz, options.hole_fwhm_sigma_hz),
            ];
            let summary = resample_uncertainty(&data, &fixed, &settings, |eta, f| {
                let c = EfficiencyCurve {
                    hole_depth: f[0],
                    hole_fwhm_hz: f[1],
                    ..curve
                };
                let r = fit_depth(&c, storage_times, eta, Some(s));
                r.converged.then_some(r.params)
            })?;
            Some(summary.sigmas)
        }
    };
    Ok(FitResult::new(&names, &fit.params, sigma.as_deref(), fit.residual_norm, fit.converged))
}

/// Whether the quoted efficiency is referenced to the chip facets
/// (the default) or divided by the squared fiber-to-chip coupling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum FiberCoupling {
    #[default]
    Excluded,
    Included {
        eta_fc: f64,
    },
}

/// `counts / (input_photons · calibration)`, optionally divided by `η_fc²`.
pub fn end_to_end_efficiency(counts: f64, input_photons: f64, calibration: f64, fiber: FiberCoupling) -> Result<f64> {
    if !(input_photons > 0.0 && input_photons.is_finite()) {
        return Err(Error::domain(format!("input photon number must be positive, got {input_photons}")));
    }
    if !(calibration > 0.0 && calibration.is_finite()) {
        return Err(Error::domain(format!("calibration must be positive, got {calibration}")));
    }
    if !(counts >= 0.0 && counts.is_finite()) {
        return Err(Error::domain(format!("counts must be non-negative, got {counts}")));
    }
    let eta = counts / (input_photons * calibration);
    match fiber {
        FiberCoupling::Excluded => Ok(eta),
        FiberCoupling::Included { eta_fc } if eta_fc > 0.0 && eta_fc <= 1.0 => Ok(eta / (eta_fc * eta_fc)),
        FiberCoupling::Included { eta_fc } => Err(Error::domain(format!("η_fc must lie in (0, 1], got {eta_fc}"))),
    }
}

/// Calibration constant that maps `counts` to `reference_efficiency`.
pub fn detection_calibration(counts: f64, input_photons: f64, reference_efficiency: f64) -> Result<f64> {
    if !(input_photons > 0.0 && reference_efficiency > 0.0 && counts > 0.0) {
        return Err(Error::domain("counts, input photons and reference efficiency must be positive"));
    }
    Ok(counts / (input_photons * reference_efficiency))
}
