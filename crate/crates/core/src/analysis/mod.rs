//! Fitting and calibration: lineshapes, efficiency curves, resampled
//! uncertainties, interference visibility and absolute efficiency.

mod efficiency;
pub mod lm;
mod lineshape;
mod resample;
mod visibility;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use efficiency::{
    detection_calibration, end_to_end_efficiency, fit_efficiency_curve, EfficiencyCurve, EfficiencyFitOptions,
    FiberCoupling,
};
pub use lineshape::{fit_lorentzian, Lorentzian};
pub use resample::{resample_uncertainty, Measured, ResampleSummary, Resampling};
pub use visibility::{
    fit_visibility, interference_intensity, interference_trace, mismatch_visibility, VisibilityScan,
};

/// How parameter uncertainties are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Uncertainty {
    None,
    /// From the inverse normal matrix at the optimum.
    #[default]
    Covariance,
    Resample(Resampling),
}

/// Outcome of a fit. `sigmas` is `None` unless uncertainties were estimated.
/// When `converged` is false the parameters are the last iterate and should
/// not be trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub sigmas: Option<BTreeMap<String, f64>>,
    pub residual_norm: f64,
    pub converged: bool,
}

impl FitResult {
    pub(crate) fn new(names: &[&str], values: &[f64], sigmas: Option<&[f64]>, residual_norm: f64, converged: bool) -> Self {
        let params = names.iter().map(|n| n.to_string()).zip(values.iter().copied()).collect();
        let sigmas = sigmas.map(|s| names.iter().map(|n| n.to_string()).zip(s.iter().copied()).collect());
        Self {
            params,
            sigmas,
            residual_norm,
            converged,
        }
    }

    /// Panics if `name` is not a parameter of this fit.
    pub fn value(&self, name: &str) -> f64 {
        match self.params.get(name) {
            Some(v) => *v,
            None => panic!("fit has no parameter `{name}`"),
        }
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.sigmas.as_ref().and_then(|s| s.get(name).copied())
    }
}
