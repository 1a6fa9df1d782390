//! Closed-form efficiency of the reference comb versus storage time, plus
//! the optimal peak depth and the gain from full-contrast holes.

use afc_memory::comb::{
    closed_form_efficiency, efficiency_for_depth, optimal_lorentzian_peak_depth, AfcParameters, DepthConvention,
    EnsembleParameters,
};

fn main() -> afc_memory::Result<()> {
    let depth = 2.6e-3;
    println!("t_s [us]   efficiency");
    let mut best = (0.0, 0.0);
    for i in 0..=24 {
        let t_s = 0.2e-6 + 0.05e-6 * f64::from(i);
        let afc = AfcParameters::for_storage_time(0.26, 0.74e6, t_s, 36)?;
        let eta = efficiency_for_depth(&afc, depth, DepthConvention::OpticalDepth)?;
        if eta > best.1 {
            best = (t_s, eta);
        }
        println!("{:8.2}   {:.4e}", t_s * 1e6, eta);
    }
    println!("peak {:.3e} at {:.2} us", best.1, best.0 * 1e6);

    let ensemble = EnsembleParameters::er_si_waveguide(depth);
    let partial = closed_form_efficiency(&AfcParameters::new(0.26, 0.74e6, 2e6, 36)?, &ensemble)?;
    let full = closed_form_efficiency(&AfcParameters::new(1.0, 0.74e6, 2e6, 36)?, &ensemble)?;
    println!("A = 1 vs A = 0.26 at 0.5 us: x{:.1}", full.eta / partial.eta);
    println!("optimal peak depth at F = 2.7: {:.3}", optimal_lorentzian_peak_depth(2.7)?);
    Ok(())
}
