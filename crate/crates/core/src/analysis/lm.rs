//! Damped Gauss–Newton (Levenberg–Marquardt) for small curve-fitting problems.

use nalgebra::{DMatrix, DVector};

/// A parametric curve `y = f(x; p)`.
pub trait CurveModel: Sync {
    fn parameter_count(&self) -> usize;

    fn value(&self, x: f64, params: &[f64]) -> f64;

    /// `∂f/∂p` at `x`. Defaults to central differences.
    fn jacobian_row(&self, x: f64, params: &[f64], row: &mut [f64]) {
        let mut p = params.to_vec();
        for (i, r) in row.iter_mut().enumerate() {
            let h = 1e-6 * params[i].abs().max(1e-12);
            p[i] = params[i] + h;
            let up = self.value(x, &p);
            p[i] = params[i] - h;
            let down = self.value(x, &p);
            p[i] = params[i];
            *r = (up - down) / (2.0 * h);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once `‖δp‖ ≤ tol (‖p‖ + tol)`.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Parameter covariance. Scaled by the reduced χ² when no per-point
    /// sigmas were supplied.
    pub covariance: Option<DMatrix<f64>>,
    /// `sqrt(Σ r²)` of the (weighted) residuals.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LmFit {
    pub fn sigma(&self, index: usize) -> Option<f64> {
        self.covariance.as_ref().map(|c| c[(index, index)].max(0.0).sqrt())
    }
}

struct Evaluation {
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
    chi2: f64,
}

fn evaluate<M: CurveModel + ?Sized>(model: &M, x: &[f64], y: &[f64], weights: &[f64], params: &[f64]) -> Evaluation {
    let n = x.len();
    let m = params.len();
    let mut residuals = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(n, m);
    let mut row = vec![0.0; m];
    for i in 0..n {
        residuals[i] = (y[i] - model.value(x[i], params)) * weights[i];
        model.jacobian_row(x[i], params, &mut row);
        for (j, r) in row.iter().enumerate() {
            jacobian[(i, j)] = r * weights[i];
        }
    }
    let chi2 = residuals.norm_squared();
    Evaluation {
        residuals,
        jacobian,
        chi2,
    }
}

fn chi2_at<M: CurveModel + ?Sized>(model: &M, x: &[f64], y: &[f64], weights: &[f64], params: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(weights)
        .map(|((&xi, &yi), &w)| ((yi - model.value(xi, params)) * w).powi(2))
        .sum()
}

/// Minimises `Σ ((y - f(x; p)) / σ)²` starting from `initial`.
pub fn levenberg_marquardt<M: CurveModel + ?Sized>(
    model: &M,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    initial: &[f64],
    options: &LmOptions,
) -> LmFit {
    assert_eq!(x.len(), y.len());
    assert_eq!(initial.len(), model.parameter_count());
    let weights: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|&s| 1.0 / s).collect(),
        None => vec![1.0; x.len()],
    };
    let m = initial.len();
    let mut params = initial.to_vec();
    let mut eval = evaluate(model, x, y, &weights, &params);
    let mut lambda = options.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    if !eval.chi2.is_finite() {
        return finish(model, x, y, sigma, &weights, params, 0, false);
    }
    while iterations < options.max_iterations {
        iterations += 1;
        let jt = eval.jacobian.transpose();
        let normal = &jt * &eval.jacobian;
        let gradient = &jt * &eval.residuals;
        if gradient.amax() == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = normal.clone();
            for j in 0..m {
                damped[(j, j)] += lambda * normal[(j, j)].max(1e-300);
            }
            let step = match damped.lu().solve(&gradient) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let trial_chi2 = chi2_at(model, x, y, &weights, &trial);
            if trial_chi2.is_finite() && trial_chi2 <= eval.chi2 {
                let step_norm = step.norm();
                let param_norm = trial.iter().map(|p| p * p).sum::<f64>().sqrt();
                params = trial;
                eval = evaluate(model, x, y, &weights, &params);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if step_norm <= options.step_tolerance * (param_norm + options.step_tolerance) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    finish(model, x, y, sigma, &weights, params, iterations, converged)
}

#[allow(clippy::too_many_arguments)]
fn finish<M: CurveModel + ?Sized>(
    model: &M,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    weights: &[f64],
    params: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> LmFit {
    let eval = evaluate(model, x, y, weights, &params);
    let dof = x.len().saturating_sub(params.len());
    let normal = eval.jacobian.transpose() * &eval.jacobian;
    let covariance = normal.try_inverse().map(|inv| {
        if sigma.is_some() {
            inv
        } else if dof > 0 {
            inv * (eval.chi2 / dof as f64)
        } else {
            inv * 0.0
        }
    });
    let finite = params.iter().all(|p| p.is_finite()) && eval.chi2.is_finite();
    LmFit {
        params,
        covariance,
        residual_norm: eval.chi2.sqrt(),
        iterations,
        converged: converged && finite,
    }
}
