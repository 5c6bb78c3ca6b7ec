//! Modeling toolkit for photoexcited-triplet ODMR sensors such as pentacene
//! doped into p-terphenyl.
//!
//! The crate is organised by concern:
//!
//! - [`spin`]: triplet spin Hamiltonian, eigenlevels, transition frequencies
//!   and conversions between (D, E), transitions and full tensors.
//! - [`kinetics`]: five-level photophysics rate equations, steady states and
//!   ODMR contrast.
//! - [`spectra`]: lineshape synthesis, peak fitting and edge extraction.
//! - [`calibration`]: segmented calibration curves, readout and sensitivity.
//! - [`zfs_dft`]: orbital grids (cube files), orbital statistics and the
//!   numerical spin-spin tensor of an orbital pair.
//!
//! Frequencies are MHz throughout, lengths are Å and rates are 1/μs.

pub mod calibration;
pub mod constants;
pub mod kinetics;
pub mod spectra;
pub mod spin;
pub mod zfs_dft;

pub use constants::PhysicalConstants;
pub use spin::{MagneticField, TransitionSet, ZfsParameters, ZfsTensor};
