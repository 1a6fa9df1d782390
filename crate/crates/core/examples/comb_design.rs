//! Finds modulation indices that give nine equal sidebands, expands them to
//! the burn grid and predicts the comb after optical pumping.

use afc_memory::sequence::{
    burn_frequency_coverage, calibrate_pump_saturation, equalize_sidebands, pump_to_comb, EqualizerSettings,
    ModulationPlan, PhaseSearch, PumpModel,
};

fn main() -> afc_memory::Result<()> {
    let fixed = equalize_sidebands(&EqualizerSettings::default())?;
    println!(
        "in-phase drive:   beta1 = {:.4}, beta2 = {:.4}, flatness = {:.3}",
        fixed.beta1, fixed.beta2, fixed.flatness
    );

    let settings = EqualizerSettings {
        phase: PhaseSearch::Scan { step: std::f64::consts::PI / 36.0 },
        ..Default::default()
    };
    let eq = equalize_sidebands(&settings)?;
    println!(
        "phase searched:   beta1 = {:.4}, beta2 = {:.4}, psi = {:.4} rad, flatness = {:.4}, power in lines = {:.3}",
        eq.beta1, eq.beta2, eq.relative_phase, eq.flatness, eq.target_power_fraction
    );

    let mut plan = ModulationPlan::standard(2e6, eq.beta1, eq.beta2);
    plan.rf_phase1 = eq.relative_phase;
    let coverage = burn_frequency_coverage(&plan)?;
    println!(
        "{} burn frequencies from {:.1} to {:.1} MHz",
        coverage.frequencies_hz.len(),
        coverage.frequencies_hz[0] / 1e6,
        coverage.frequencies_hz.last().unwrap() / 1e6
    );

    let kappa = calibrate_pump_saturation(&coverage, 0.26, 1.0)?;
    let afc = pump_to_comb(&coverage, &PumpModel::new(kappa))?;
    println!(
        "kappa = {:.4e} 1/J -> A = {:.3}, gamma = {:.2} MHz, N = {}, t_s = {:.2} us",
        kappa,
        afc.hole_depth,
        afc.hole_fwhm_hz / 1e6,
        afc.tooth_count,
        afc.storage_time() * 1e6
    );
    Ok(())
}
