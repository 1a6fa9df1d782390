//! CODATA 2018 values (exact SI definitions where applicable).

use serde::Serialize;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.62607015e-34;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhysicalConstants {
    pub boltzmann_j_per_k: f64,
    pub planck_j_s: f64,
    pub bohr_magneton_j_per_t: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    boltzmann_j_per_k: BOLTZMANN,
    planck_j_s: PLANCK,
    bohr_magneton_j_per_t: BOHR_MAGNETON,
};
