//! Recovers the optical depth from a noisy efficiency curve and converts
//! detected counts into an absolute efficiency.

use afc_memory::analysis::{
    detection_calibration, end_to_end_efficiency, fit_efficiency_curve, EfficiencyCurve, EfficiencyFitOptions,
    FiberCoupling, Resampling, Uncertainty,
};
use afc_memory::comb::{AfcParameters, DepthConvention};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> afc_memory::Result<()> {
    let afc = AfcParameters::new(0.26, 0.74e6, 2e6, 36)?;
    let curve = EfficiencyCurve::from_afc(&afc, DepthConvention::OpticalDepth);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let noise = Normal::new(0.0, 0.15).unwrap();

    let times: Vec<f64> = (0..7).map(|i| 0.2e-6 + 0.2e-6 * f64::from(i)).collect();
    let mut eta = Vec::new();
    let mut sigma = Vec::new();
    for &t in &times {
        let e = curve.efficiency(t, 2.6e-3)?;
        eta.push(e * (1.0 + noise.sample(&mut rng)));
        sigma.push(0.15 * e);
    }
    let options = EfficiencyFitOptions {
        uncertainty: Uncertainty::Resample(Resampling::new(2000, 5)),
        hole_depth_sigma: 0.01,
        hole_fwhm_sigma_hz: 0.07e6,
        ..Default::default()
    };
    let fit = fit_efficiency_curve(&times, &eta, Some(&sigma), &afc, &options)?;
    println!(
        "optical depth {:.3e} +- {:.1e} (generated with 2.6e-3)",
        fit.value("optical_depth"),
        fit.sigma("optical_depth").unwrap()
    );

    // 21k photons per pulse over 1e6 pulses; the attenuation-matched
    // reference run fixes the detection calibration
    let input = 21e3 * 1e6;
    let calibration = detection_calibration(4.1, input, 1.89e-8)?;
    let counts = 3.8;
    let chip = end_to_end_efficiency(counts, input, calibration, FiberCoupling::Excluded)?;
    let fiber = end_to_end_efficiency(counts, input, calibration, FiberCoupling::Included { eta_fc: 0.38 })?;
    println!("end-to-end efficiency {chip:.3e} (divided by eta_fc^2: {fiber:.3e})");
    Ok(())
}
