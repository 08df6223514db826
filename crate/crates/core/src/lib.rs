//! Kirkwood-Dirac pseudo-distributions reconstructed from weak-measurement data.
//!
//! Discrete systems are handled by inverting Vandermonde moment systems built on
//! observable eigenvalues; continuous-variable systems by inverse Fourier
//! transform of a weak characteristic function sampled on a grid. Every
//! reconstruction has a direct quantum-mechanical counterpart in [`oracle`]
//! to test against, and [`photonics`] simulates the optical experiment at the
//! shot level.

pub mod cv;
pub mod distribution;
pub mod error;
pub mod io;
pub mod moments;
pub mod oracle;
pub mod photonics;
pub mod quantum;
pub mod random;
pub mod reconstruct;
pub mod tensor;
pub mod vandermonde;

pub use error::{Error, Result};
pub use num_complex::Complex64;
