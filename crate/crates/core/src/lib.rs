pub mod cli;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod output;
pub mod perturbation;
pub mod spectra;
pub mod state;

pub use error::{Error, Result};
