//! Stores a Gaussian pulse in a comb by FFT propagation and compares the
//! first echo with the closed-form efficiency.

use afc_memory::comb::{closed_form_efficiency, AfcParameters, EnsembleParameters};
use afc_memory::propagation::{simulate_storage, StorageSetup};

fn main() -> afc_memory::Result<()> {
    let ensemble = EnsembleParameters::er_si_waveguide(1e-2);
    for finesse in [1.0, 2.7, 5.0, 10.0] {
        let period = 2e6;
        let tooth_count = (256e6 / period) as u32;
        let afc = AfcParameters::new(1.0, period / finesse, period, tooth_count)?;
        let setup = StorageSetup {
            span_hz: Some(4.0 * afc.bandwidth()),
            ..Default::default()
        };
        let run = simulate_storage(&afc, &ensemble, &setup)?;
        let expected = closed_form_efficiency(&afc, &ensemble)?.eta;
        let e = &run.echoes.echo_energies;
        println!(
            "F = {finesse:4.1}: echo 1 = {:.4e} (closed form {:.4e}), echo 2 = {:.4e}, transmitted = {:.4}",
            e[0], expected, e[1], run.echoes.transmitted_energy
        );
    }
    Ok(())
}
