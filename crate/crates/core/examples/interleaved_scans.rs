//! Reassembles interleaved fluorescence probes into hole spectra, integrates
//! the hole areas and fits the decay.

use afc_memory::relaxation::{fit_hole_decay, reconstruct_interleaved_scans, ProbeRecord};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> afc_memory::Result<()> {
    let tau = 11.6e-3;
    let delays: Vec<f64> = (0..10).map(|i| 1e-3 * 1.4f64.powi(i)).collect();
    let freqs: Vec<f64> = (0..121).map(|i| -30e6 + 0.5e6 * f64::from(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // burn-to-burn depth scatter and detector noise
    let burn = Normal::new(1.0, 0.05).unwrap();
    let noise = Normal::new(0.0, 0.005).unwrap();

    let mut records = Vec::new();
    for repetition in 0..10 {
        // each repetition probes the delays in a different order
        let mut order: Vec<usize> = (0..delays.len()).collect();
        order.shuffle(&mut rng);
        for (probe_index, &d) in order.iter().enumerate() {
            let depth = 30.0 * burn.sample(&mut rng) * (-delays[d] / tau).exp();
            for &f in &freqs {
                let hole = depth / (1.0 + (f / 0.37e6).powi(2));
                records.push(ProbeRecord {
                    delay_s: delays[d],
                    freq_hz: f,
                    signal_counts: 100.0 - hole + noise.sample(&mut rng),
                    repetition,
                    probe_index: probe_index as u32,
                });
            }
        }
    }
    let series = reconstruct_interleaved_scans(&records)?;
    for (d, a) in series.delays.iter().zip(&series.areas) {
        println!("{:8.2} ms   area {:.4e}", d * 1e3, a);
    }
    let fit = fit_hole_decay(&series)?;
    println!(
        "lifetime {:.2} +- {:.2} ms (generated with {:.1} ms)",
        fit.value("lifetime") * 1e3,
        fit.sigma("lifetime").unwrap() * 1e3,
        tau * 1e3
    );
    Ok(())
}
