use super::lm::{levenberg_marquardt, CurveModel, LmOptions};
use super::FitResult;
use crate::{Error, Result};

/// `offset + amplitude · (w/2)² / ((w/2)² + (x − center)²)`,
/// parameters `[center, fwhm, amplitude, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lorentzian;

impl Lorentzian {
    pub const NAMES: [&'static str; 4] = ["center", "fwhm", "amplitude", "offset"];
}

impl CurveModel for Lorentzian {
    fn parameter_count(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let h = 0.5 * p[1];
        let u = x - p[0];
        p[3] + p[2] * h * h / (h * h + u * u)
    }

    fn jacobian_row(&self, x: f64, p: &[f64], row: &mut [f64]) {
        let h = 0.5 * p[1];
        let u = x - p[0];
        let den = h * h + u * u;
        let shape = h * h / den;
        row[0] = p[2] * 2.0 * u * h * h / (den * den);
        row[1] = p[2] * h * u * u / (den * den);
        row[2] = shape;
        row[3] = 1.0;
    }
}

fn initial_guess(x: &[f64], y: &[f64]) -> [f64; 4] {
    let n = y.len();
    let edge = (n / 10).max(1);
    let offset = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>()) / (2 * edge) as f64;
    let (peak, _) = y
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - offset).abs()))
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    let amplitude = y[peak] - offset;
    let half = 0.5 * amplitude.abs();
    let crossing = |range: &mut dyn Iterator<Item = usize>| {
        let mut prev = peak;
        for i in range {
            if (y[i] - offset).abs() <= half {
                let (a, b) = ((y[prev] - offset).abs(), (y[i] - offset).abs());
                let t = if a > b { (a - half) / (a - b) } else { 0.0 };
                return Some(x[prev] + t * (x[i] - x[prev]));
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..peak).rev());
    let right = crossing(&mut (peak + 1..n));
    let span = x[n - 1] - x[0];
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x[peak] - l),
        (None, Some(r)) => 2.0 * (r - x[peak]),
        (None, None) => span / 4.0,
    };
    let fwhm = if fwhm > 0.0 { fwhm } else { span / 10.0 };
    [x[peak], fwhm, amplitude, offset]
}

/// Least-squares Lorentzian fit. `x` must be sorted ascending. Sigmas come
/// from the parameter covariance; without `y_sigma` the fit is unweighted
/// and the covariance is scaled by the reduced χ².
pub fn fit_lorentzian(x: &[f64], y: &[f64], y_sigma: Option<&[f64]>) -> Result<FitResult> {
    if x.len() != y.len() || y_sigma.is_some_and(|s| s.len() != x.len()) {
        return Err(Error::domain("x, y and sigma lengths differ"));
    }
    if x.len() < 5 {
        return Err(Error::domain(format!("Lorentzian fit needs ≥ 5 points, got {}", x.len())));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("x must be strictly increasing"));
    }
    if y.iter().chain(y_sigma.unwrap_or(&[])).any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite sample"));
    }
    if y_sigma.is_some_and(|s| s.iter().any(|&s| s <= 0.0)) {
        return Err(Error::domain("sigmas must be positive"));
    }
    let start = initial_guess(x, y);
    let fit = levenberg_marquardt(&Lorentzian, x, y, y_sigma, &start, &LmOptions::default());
    let mut params = fit.params.clone();
    params[1] = params[1].abs();
    let sigmas: Vec<f64> = (0..4).map(|i| fit.sigma(i).unwrap_or(f64::NAN)).collect();
    let converged = fit.converged && params[1] > 0.0;
    Ok(FitResult::new(&Lorentzian::NAMES, &params, Some(&sigmas), fit.residual_norm, converged))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(p: [f64; 4], lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&x| Lorentzian.value(x, &p)).collect();
        (x, y)
    }

    #[test]
    fn recovers_broad_absorption_line() {
        let truth = [12e6, 351e6, 0.8, 0.05];
        let (x, y) = samples(truth, -1.5e9, 1.5e9, 301);
        let fit = fit_lorentzian(&x, &y, None).unwrap();
        assert!(fit.converged);
        for (name, t) in Lorentzian::NAMES.iter().zip(truth) {
            let v = fit.value(name);
            assert!((v - t).abs() <= 1e-6 * t.abs(), "{name}: {v} vs {t}");
        }
    }

    #[test]
    fn recovers_spectral_hole_dip() {
        let truth = [0.0, 0.74e6, -0.26, 1.0];
        let (x, y) = samples(truth, -5e6, 5e6, 201);
        let fit = fit_lorentzian(&x, &y, None).unwrap();
        assert!(fit.converged);
        assert!((fit.value("fwhm") / 0.74e6 - 1.0).abs() < 1e-6);
        assert!((fit.value("amplitude") / -0.26 - 1.0).abs() < 1e-6);
        assert!(fit.value("center").abs() < 1e-6 * 0.74e6);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        struct Fd;
        impl CurveModel for Fd {
            fn parameter_count(&self) -> usize {
                4
            }
            fn value(&self, x: f64, p: &[f64]) -> f64 {
                Lorentzian.value(x, p)
            }
        }
        let p = [0.3, 1.7, -0.4, 0.2];
        for x in [-2.0, 0.1, 0.9, 3.0] {
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            Lorentzian.jacobian_row(x, &p, &mut a);
            Fd.jacobian_row(x, &p, &mut b);
            for i in 0..4 {
                assert!((a[i] - b[i]).abs() < 1e-7, "{i}: {} vs {}", a[i], b[i]);
            }
        }
    }

    #[test]
    fn too_few_points() {
        assert!(fit_lorentzian(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4], None).is_err());
    }
}
