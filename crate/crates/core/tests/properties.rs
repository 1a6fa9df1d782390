use afc_memory::analysis::{fit_lorentzian, mismatch_visibility};
use afc_memory::comb::{
    closed_form_efficiency, relative_fourier_coefficients, AfcParameters, EnsembleParameters,
};
use afc_memory::io::{read_table, write_table, Schema, Table};
use afc_memory::relaxation::hole_area;
use afc_memory::sequence::{phase_mod_spectrum, sideband_flatness, sufficient_cutoff, ModulationPlan};
use approx::assert_relative_eq;
use proptest::prelude::*;

proptest! {
    #[test]
    fn fourier_coefficients_are_bounded(a in 0.0..=1.0f64, f in 0.05..50.0f64) {
        let (f0, fm1) = relative_fourier_coefficients(a, f).unwrap();
        prop_assert!(f0 > 0.0 && f0 <= 1.0);
        // the echo term cannot exceed the absorption removed by the holes
        prop_assert!(fm1 <= 0.0);
        prop_assert!(fm1.abs() <= 1.0 - f0 + 1e-15);
    }

    #[test]
    fn efficiency_is_a_probability(
        a in 0.0..=1.0f64,
        f in 0.2..20.0f64,
        d in 1e-4..20.0f64,
    ) {
        let afc = AfcParameters::new(a, 2e6 / f, 2e6, 36).unwrap();
        let eta = closed_form_efficiency(&afc, &EnsembleParameters::er_si_waveguide(d)).unwrap().eta;
        prop_assert!((0.0..=1.0).contains(&eta));
    }

    #[test]
    fn mismatch_visibility_is_reciprocal(r in 1e-3..1e3f64) {
        let v = mismatch_visibility(r);
        prop_assert!((0.0..=1.0).contains(&v));
        assert_relative_eq!(v, mismatch_visibility(1.0 / r), max_relative = 1e-12);
    }

    #[test]
    fn modulation_conserves_power(b1 in 0.0..4.0f64, b2 in 0.0..4.0f64, psi in 0.0..6.3f64) {
        let mut plan = ModulationPlan::standard(2e6, b1, b2);
        plan.rf_phase1 = psi;
        let s = phase_mod_spectrum(&plan, sufficient_cutoff(b1).max(sufficient_cutoff(b2))).unwrap();
        // truncation may drop at most 1e-9 of the power
        prop_assert!((1.0 - 1e-9..=1.0 + 1e-12).contains(&s.total_power()));
        let (flat, fraction) = sideband_flatness(b1, b2, psi);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fraction));
        prop_assert!(flat >= 0.0);
    }

    #[test]
    fn only_the_combined_phase_matters(b1 in 0.1..3.0f64, b2 in 0.1..3.0f64, p1 in 0.0..6.0f64, p2 in 0.0..2.0f64) {
        let mut a = ModulationPlan::standard(2e6, b1, b2);
        a.rf_phase1 = p1;
        a.rf_phase2 = p2;
        let mut b = ModulationPlan::standard(2e6, b1, b2);
        b.rf_phase1 = p1 - 3.0 * p2;
        let cut = sufficient_cutoff(b1).max(sufficient_cutoff(b2));
        let (sa, sb) = (phase_mod_spectrum(&a, cut).unwrap(), phase_mod_spectrum(&b, cut).unwrap());
        for m in -4..=4 {
            let f = f64::from(m) * 8e6;
            prop_assert!((sa.power_at(f, 1.0) - sb.power_at(f, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn hole_area_ignores_background(shift in -1e3..1e3f64, depth in 0.01..5.0f64) {
        let f: Vec<f64> = (0..301).map(|i| -15e6 + 0.1e6 * f64::from(i)).collect();
        let s: Vec<f64> = f.iter().map(|x| 10.0 - depth / (1.0 + (x / 0.37e6).powi(2))).collect();
        let shifted: Vec<f64> = s.iter().map(|v| v + shift).collect();
        let (a, b) = (hole_area(&f, &s).unwrap(), hole_area(&f, &shifted).unwrap());
        prop_assert!((a.area - b.area).abs() <= 1e-9 * a.area.abs().max(1.0) * (1.0 + shift.abs()));
        prop_assert!(a.area > 0.0);
    }

    #[test]
    fn lorentzian_recovered_without_noise(
        center in -5.0..5.0f64,
        fwhm in 0.3..2.0f64,
        amp in prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
    ) {
        let x: Vec<f64> = (0..241).map(|i| -12.0 + 0.1 * f64::from(i)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.5 + amp * (fwhm / 2.0).powi(2) / ((fwhm / 2.0).powi(2) + (v - center).powi(2)))
            .collect();
        let fit = fit_lorentzian(&x, &y, None).unwrap();
        prop_assert!((fit.value("center") - center).abs() < 1e-6);
        prop_assert!((fit.value("fwhm") - fwhm).abs() < 1e-6);
    }

    #[test]
    fn tables_round_trip_exactly(rows in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>()), 1..40)) {
        let rows: Vec<_> = rows.into_iter().filter(|r| r.0.is_finite() && r.1.is_finite() && r.2.is_finite()).collect();
        prop_assume!(!rows.is_empty());
        let table = Table::new(
            Schema::Waveform,
            vec![
                rows.iter().map(|r| r.0).collect(),
                rows.iter().map(|r| r.1).collect(),
                rows.iter().map(|r| r.2).collect(),
            ],
        ).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table(&path, &table).unwrap();
        let back = read_table(&path, Schema::Waveform).unwrap();
        for (a, b) in table.columns.iter().flatten().zip(back.columns.iter().flatten()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn duplicate_keys_are_averaged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.csv");
    std::fs::write(&path, "lifetime_s,temperature_K,sigma_s\n2.0,5.0,0.3\n1.0,4.5,0.1\n4.0,5.0,0.4\n").unwrap();
    let t = read_table(&path, Schema::OrbachLifetimes).unwrap();
    assert_eq!(t.merged_duplicates, 1);
    assert_eq!(t.column("temperature_K"), &[4.5, 5.0]);
    assert_eq!(t.column("lifetime_s"), &[1.0, 3.0]);
    assert_relative_eq!(t.column("sigma_s")[1], 0.25, epsilon = 1e-15);
}
