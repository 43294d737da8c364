//! Branching random walks on finite truncations of countable graphs:
//! offspring laws and scenarios, first-moment spectral analysis, extinction
//! fixed points, exact and truncated simulation, and approximation studies.

pub mod approx;
pub mod error;
pub mod genfun;
pub mod model;
pub mod simulate;
pub mod spectral;

pub use error::{BrwError, Result};
