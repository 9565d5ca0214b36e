//! Discrete isoperimetry on Cayley graphs and lattices.
//!
//! Exact boundary functionals, isoperimetric profiles, Wulff samplers, grid total
//! variation, cochain curl fitting, gauge-column stacks in step-2 groups, tempered
//! Folner chains, Dirichlet spectra and coarse embeddings.

pub mod carnot;
pub mod coarse;
pub mod cayley;
pub mod curlfit;
pub mod error;
pub mod gridtv;
pub mod profiles;
pub mod spectral;
pub mod tfchains;
pub mod wulff;

pub use error::{Error, Result};
