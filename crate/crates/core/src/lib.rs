pub mod error;
pub mod grid;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub mod background_recover;
pub mod diffeo;
pub mod evolve;
pub mod harmonic;
pub mod hole_experiment;
pub mod observable;
