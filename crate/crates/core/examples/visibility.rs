//! Interferes a simulated echo with a phase-shifted reference and fits the
//! fringe visibility.

use std::f64::consts::PI;

use afc_memory::analysis::{fit_visibility, interference_trace, mismatch_visibility, VisibilityScan};
use afc_memory::comb::{AfcParameters, EnsembleParameters};
use afc_memory::propagation::{simulate_storage, PulseWaveform, StorageSetup};

fn main() -> afc_memory::Result<()> {
    let afc = AfcParameters::new(0.26, 0.74e6, 2e6, 36)?;
    let run = simulate_storage(&afc, &EnsembleParameters::er_si_waveguide(2.6e-3), &StorageSetup::default())?;

    // keep only the first echo window
    let t_echo = run.echoes.echo_times[0];
    let mut echo = run.output.clone();
    for (i, s) in echo.samples.iter_mut().enumerate() {
        if (run.output.time(i) - t_echo).abs() > 30e-9 {
            *s = 0.0.into();
        }
    }
    // reference: the input pulse delayed to the echo and scaled by r
    let shift = (afc.storage_time() / run.input.time_step).round() as usize;
    let delayed = run.input.delayed(shift);
    let r = 0.65;
    let scale = r * (echo.energy() / delayed.energy()).sqrt();
    let reference = PulseWaveform {
        samples: delayed.samples.iter().map(|s| s * scale).collect(),
        ..delayed
    };

    let phases: Vec<f64> = (0..24).map(|k| 2.0 * PI * f64::from(k) / 24.0).collect();
    let counts = phases
        .iter()
        .map(|&p| interference_trace(&echo, &reference, p))
        .collect::<afc_memory::Result<Vec<_>>>()?;
    let fit = fit_visibility(&VisibilityScan {
        phases,
        integrated_counts: counts,
        count_sigmas: vec![],
    })?;
    println!(
        "fitted V = {:.4}, phase offset {:.3} rad; amplitude-mismatch bound 2r/(1+r^2) = {:.4}",
        fit.value("visibility"),
        fit.value("phase_offset"),
        mismatch_visibility(r)
    );
    Ok(())
}
