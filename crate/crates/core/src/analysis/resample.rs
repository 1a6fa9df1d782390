use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resampling {
    pub n_draws: usize,
    pub seed: u64,
}

impl Resampling {
    pub fn new(n_draws: usize, seed: u64) -> Self {
        Self { n_draws, seed }
    }
}

impl Default for Resampling {
    fn default() -> Self {
        Self {
            n_draws: 50_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSummary {
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub failures: usize,
    pub draws: usize,
}

/// Monte-Carlo error propagation.
///
/// Each draw perturbs every `data` point and every `fixed` parameter by an
/// independent normal deviate of its stated sigma and calls
/// `refit(data, fixed)`. Draw `k` uses its own ChaCha stream, so the result
/// depends only on `seed`, not on thread scheduling. `refit` returns `None`
/// for a failed fit; more than 10% failures is an error.
pub fn resample_uncertainty<F>(
    data: &[Measured],
    fixed: &[Measured],
    settings: &Resampling,
    refit: F,
) -> Result<ResampleSummary>
where
    F: Fn(&[f64], &[f64]) -> Option<Vec<f64>> + Sync,
{
    if settings.n_draws < 100 {
        return Err(Error::validation("n_draws", format!("{} < 100", settings.n_draws)));
    }
    for m in data.iter().chain(fixed) {
        if !(m.sigma >= 0.0 && m.sigma.is_finite() && m.value.is_finite()) {
            return Err(Error::domain(format!("invalid measurement {} ± {}", m.value, m.sigma)));
        }
    }
    let estimates: Vec<Option<Vec<f64>>> = (0..settings.n_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(k as u64);
            let mut draw = |m: &Measured| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m.value + m.sigma * z
            };
            let d: Vec<f64> = data.iter().map(&mut draw).collect();
            let f: Vec<f64> = fixed.iter().map(&mut draw).collect();
            refit(&d, &f).filter(|p| p.iter().all(|v| v.is_finite()))
        })
        .collect();

    let failures = estimates.iter().filter(|e| e.is_none()).count();
    if failures * 10 > settings.n_draws {
        return Err(Error::Numerical(format!(
            "{failures} of {} resampled refits failed (limit 10%)",
            settings.n_draws
        )));
    }
    let good: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let width = good[0].len();
    let n = good.len() as f64;
    let mut means = vec![0.0; width];
    for e in &good {
        for (m, v) in means.iter_mut().zip(e.iter()) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut sigmas = vec![0.0; width];
    for e in &good {
        for ((s, v), m) in sigmas.iter_mut().zip(e.iter()).zip(&means) {
            *s += (v - m).powi(2);
        }
    }
    sigmas.iter_mut().for_each(|s| *s = (*s / (n - 1.0)).sqrt());
    Ok(ResampleSummary {
        means,
        sigmas,
        failures,
        draws: settings.n_draws,
    })
}
