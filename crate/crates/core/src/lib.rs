//! Collisional decoherence of chiral molecules in a buffer gas.
//!
//! The crate builds the handed dispersion surfaces of a chiral asymmetric top
//! interacting with a gas atom, solves the coupled-channel scattering problem
//! for both enantiomers, reduces the S-matrices to total, decoherence and
//! coherent-shift cross sections, and predicts the collisional stabilization
//! of the enantiomer states through a two-level master equation.

pub mod angular;
pub mod bessel;
pub mod channels;
pub mod config;
pub mod datasets;
pub mod dispersion;
pub mod error;
pub mod highenergy;
pub mod master;
pub mod observables;
pub mod propagator;
pub mod quadrature;
pub mod rotor;
pub mod scatter;
pub mod smatrix_io;
pub mod system;
pub mod units;

pub use error::{Error, Result};
