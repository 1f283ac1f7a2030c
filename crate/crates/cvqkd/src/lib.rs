//! Simulator and security analysis for a deterministic continuous-variable
//! ping-pong QKD protocol with Gaussian-modulated squeezed states.
//!
//! The crate is organized bottom-up:
//!
//! - [`gaussian`]: exact second-moment algebra over symbolic Gaussian modes,
//!   plus seeded sampling of the same objects;
//! - [`protocol`]: the honest two-way protocol (state preparation, encoding,
//!   decoding, full Monte Carlo sessions, fidelity estimation);
//! - [`adversary`]: beam-splitter and lossy-line attacks and the attacker's
//!   information bound;
//! - [`analysis`]: closed-form rates, output variances, fidelity, security
//!   thresholds, and parameter sweeps.

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod gaussian;
pub mod protocol;

pub use error::{Error, Result};
