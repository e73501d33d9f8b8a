pub mod bott;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod ldlt;
pub mod localizer;
pub mod model;
pub mod operator;
pub mod pseudospectrum;
pub mod spectral;

pub use error::{Error, Result};
