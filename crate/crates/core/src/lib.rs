//! Simulation of vibrationally assisted energy transfer in a donor–bridge–acceptor
//! trimer coupled to two bosonic modes.
//!
//! * [`model`] builds the projected Hamiltonians.
//! * [`fock`] holds truncated ladder operators and thermal states.
//! * [`dynamics`] propagates thermal ensembles exactly.
//! * [`spectra`] scans the two mode frequencies and classifies spectral lines.
//! * [`perturb`] is the fourth-order perturbative expansion for the symmetric trimer.
//! * [`vibronic`] sweeps the eigenvalue spectrum and finds avoided crossings.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod perturb;
pub mod spectra;
pub mod vibronic;

pub use error::{Result, VaetError};
