//! Post-processing of volumetric molecular orbitals: cube I/O, density
//! moments, and the spin-spin tensor of a HOMO/LUMO triplet pair.
//!
//! Orbitals are real amplitudes sampled on a (possibly skewed) lattice in Å.
//! [`zfs_pair_tensor`] discretizes the dipolar double integral as a lattice
//! sum with pairs closer than a cutoff removed; the direct and FFT paths
//! evaluate the same sum.

pub mod cube;
mod fft3;
mod grid;
mod phases;
pub mod report;
mod stats;
mod tensor;

use thiserror::Error;

use crate::spin::SpinError;

pub use grid::OrbitalGrid;
pub use phases::{compare_phases, LabeledEigenvalues, PhaseComparison};
pub use stats::{homo_lumo_shift, orbital_stats, OrbitalStats};
pub use tensor::{delta_d_estimate, zfs_pair_tensor, Method};

#[derive(Debug, Error)]
pub enum ZfsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grids are not commensurate: {0}")]
    GridMismatch(String),
    #[error("cutoff {cutoff} Å is below the grid step {step} Å; the kernel singularity would be sampled")]
    Cutoff { cutoff: f64, step: f64 },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runs `f` over fixed-size chunks of `items` and returns the results in
/// chunk order, in parallel when the `parallel` feature is on. Chunking does
/// not depend on the thread count, so reductions over the result are
/// reproducible.
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_chunks(chunk).enumerate().map(|(i, c)| f(i, c)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks(chunk).enumerate().map(|(i, c)| f(i, c)).collect()
    }
}

pub(crate) fn for_each_chunk_mut<T, F>(items: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}
