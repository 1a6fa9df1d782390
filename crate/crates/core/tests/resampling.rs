use afc_memory::analysis::{resample_uncertainty, Measured, Resampling};

const X: [f64; 6] = [0.0, 1.0, 2.0, 3.5, 5.0, 8.0];

fn data(scale: f64) -> Vec<Measured> {
    X.iter()
        .zip([0.1, 0.2, 0.15, 0.3, 0.2, 0.4])
        .map(|(&x, s)| Measured::new(1.0 + 0.5 * x, scale * s))
        .collect()
}

/// Weighted straight-line fit with weights fixed at the nominal sigmas.
fn line(y: &[f64], sigma: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xm = X.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = X.iter().zip(&w).map(|(x, w)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = X.iter().zip(y).zip(&w).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    (ym - slope * xm, slope)
}

fn analytic_slope_sigma(sigma: &[f64]) -> f64 {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xm = X.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let sxx: f64 = X.iter().zip(&w).map(|(x, w)| w * (x - xm).powi(2)).sum();
    sxx.powf(-0.5)
}

fn run(scale: f64, seed: u64) -> (f64, f64) {
    let d = data(scale);
    let sigma: Vec<f64> = d.iter().map(|m| m.sigma).collect();
    let s = resample_uncertainty(&d, &[], &Resampling::new(50_000, seed), |y, _| {
        let (a, b) = line(y, &sigma);
        Some(vec![a, b])
    })
    .unwrap();
    (s.sigmas[1], analytic_slope_sigma(&sigma))
}

#[test]
fn linear_model_matches_analytic_sigma() {
    let (got, want) = run(1.0, 3);
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn doubling_input_sigmas_doubles_output_sigma() {
    let (one, _) = run(1.0, 9);
    let (two, _) = run(2.0, 9);
    assert!((two / one - 2.0).abs() < 1e-9, "{one} {two}");
}

#[test]
fn fixed_parameter_uncertainty_adds_in_quadrature() {
    let d = data(1.0);
    let sigma: Vec<f64> = d.iter().map(|m| m.sigma).collect();
    let fixed = [Measured::new(2.0, 0.3)];
    let s = resample_uncertainty(&d, &fixed, &Resampling::new(50_000, 1), |y, f| {
        Some(vec![line(y, &sigma).1 + f[0]])
    })
    .unwrap();
    let want = (analytic_slope_sigma(&sigma).powi(2) + 0.09).sqrt();
    assert!((s.sigmas[0] / want - 1.0).abs() < 0.05);
    assert!((s.means[0] - 2.5).abs() < 0.01);
}

#[test]
fn result_is_independent_of_thread_count() {
    let d = data(1.0);
    let sigma: Vec<f64> = d.iter().map(|m| m.sigma).collect();
    let go = || {
        resample_uncertainty(&d, &[], &Resampling::new(2000, 42), |y, _| Some(vec![line(y, &sigma).1])).unwrap()
    };
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(go);
    let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(go);
    assert_eq!(single.sigmas, multi.sigmas);
    assert_eq!(single.means, multi.means);
}
