//! Modelling toolkit for atomic-frequency-comb quantum memories.
//!
//! * [`comb`]: comb spectrum, Fourier coefficients, closed-form efficiency
//! * [`propagation`]: FFT linear-response pulse propagation and echo detection
//! * [`relaxation`]: Orbach/direct spin relaxation and hole-decay analysis
//! * [`sequence`]: burn-pulse sideband design and optical pumping
//! * [`analysis`]: curve fitting, resampled uncertainties, visibility
//! * [`io`]: TOML configs, CSV datasets and the scenario runner

pub mod analysis;
pub mod comb;
pub mod constants;
pub mod error;
pub mod io;
pub mod propagation;
pub mod relaxation;
pub mod sequence;
pub mod special;

pub use error::{Error, Result};
