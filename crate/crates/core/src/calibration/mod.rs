//! Temperature/pressure calibration of ODMR peak frequencies.
//!
//! A [`CalibrationSeries`] holds peak frequencies against a control value
//! (K or bar). [`segmented_fit`] finds the globally optimal piecewise-linear
//! description with discontinuous segments, which is what a first-order
//! phase transition produces.

pub mod io;
mod readout;
mod segmented;
mod sensitivity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use readout::{invert_readout, zfs_series, Readout, ZfsSeries};
pub use segmented::{segmented_fit, weighted_line_fit, LineFit, PiecewiseLinearFit, Segment};
pub use sensitivity::{sensitivity, SensitivityReport};

pub const MIN_SERIES_LEN: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("segment {segment} slope {slope:e} is too small to invert")]
    Unresolvable { segment: usize, slope: f64 },
    #[error("frequency {0} MHz lies outside the calibrated range")]
    OutOfRange(f64),
    #[error("frequency {freq} MHz matches segments {segments:?}; pass a segment hint")]
    Ambiguous { freq: f64, segments: Vec<usize> },
    #[error("division by zero slope")]
    DivisionDomain,
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CalibrationError {
    fn from(e: std::io::Error) -> Self {
        CalibrationError::Io(e.to_string())
    }
}

/// Peak frequency against a strictly monotone control value.
///
/// Stored in ascending control order. `control_offset` is added to every
/// control value (e.g. a cold-finger to sample temperature correction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSeries {
    control: Vec<f64>,
    freq: Vec<f64>,
    freq_sigma: Vec<f64>,
    pub label: String,
    pub unit: String,
    pub control_offset: f64,
}

impl CalibrationSeries {
    pub fn new(
        control: Vec<f64>,
        freq: Vec<f64>,
        freq_sigma: Vec<f64>,
        label: impl Into<String>,
        unit: impl Into<String>,
    ) -> Result<Self, CalibrationError> {
        let n = control.len();
        if freq.len() != n || freq_sigma.len() != n {
            return Err(CalibrationError::InvalidInput(format!(
                "column lengths differ: {n} controls, {} frequencies, {} sigmas",
                freq.len(),
                freq_sigma.len()
            )));
        }
        if n < MIN_SERIES_LEN {
            return Err(CalibrationError::InvalidInput(format!("need at least {MIN_SERIES_LEN} points, got {n}")));
        }
        if control.iter().chain(&freq).chain(&freq_sigma).any(|v| !v.is_finite()) {
            return Err(CalibrationError::InvalidInput("values must be finite".into()));
        }
        if freq_sigma.iter().any(|s| *s <= 0.0) {
            return Err(CalibrationError::InvalidInput("frequency sigmas must be > 0".into()));
        }
        let ascending = control.windows(2).all(|w| w[1] > w[0]);
        let descending = control.windows(2).all(|w| w[1] < w[0]);
        if !ascending && !descending {
            return Err(CalibrationError::InvalidInput("control values must be strictly monotone".into()));
        }
        let (mut control, mut freq, mut freq_sigma) = (control, freq, freq_sigma);
        if descending {
            control.reverse();
            freq.reverse();
            freq_sigma.reverse();
        }
        Ok(Self { control, freq, freq_sigma, label: label.into(), unit: unit.into(), control_offset: 0.0 })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.control_offset = offset;
        self
    }

    /// Control values with the offset applied.
    pub fn control(&self) -> Vec<f64> {
        self.control.iter().map(|c| c + self.control_offset).collect()
    }

    pub fn raw_control(&self) -> &[f64] {
        &self.control
    }

    pub fn freq(&self) -> &[f64] {
        &self.freq
    }

    pub fn freq_sigma(&self) -> &[f64] {
        &self.freq_sigma
    }

    pub fn len(&self) -> usize {
        self.control.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control.is_empty()
    }
}
