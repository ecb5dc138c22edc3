//! Simulation of the prevalence/accuracy associations that study-level biases
//! induce across a diagnostic accuracy meta-analysis, and latent class
//! meta-analysis models that remove them.

pub mod association;
pub mod cli;
pub mod error;
pub mod io;
pub mod lcbm;
pub mod mcmc;
pub mod pvb;
pub mod sim;

pub use error::{Error, Result};
