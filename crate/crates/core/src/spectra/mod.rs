//! ODMR spectrum synthesis and peak extraction.
//!
//! Lines are asymmetric pseudo-Voigt profiles: a peak-normalized blend of a
//! Lorentzian and a Gaussian with the same half width at half maximum, where
//! the half width differs on either side of the center.

mod edge;
mod fit;
pub mod io;
mod lineshape;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edge::{max_signal_slope, steep_edge_center};
pub use fit::{auto_guesses, fit_peaks, robust_noise_sigma, FitOptions, PeakFit, PeakFitReport};
pub use lineshape::LineModel;

pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fit did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<PeakFitReport>),
    #[error("no edge found: max slope {max_slope:e} is below 3x the noise slope floor {floor:e}")]
    NoEdge { max_slope: f64, floor: f64 },
    #[error("no peaks found above the prominence threshold")]
    NoPeaks,
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Acquisition descriptor stored in the JSON sidecar of a spectrum CSV.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumMeta {
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub control_value: Option<f64>,
    #[serde(default)]
    pub control_unit: Option<String>,
    #[serde(default = "default_frequency_unit")]
    pub frequency_unit: String,
}

fn default_frequency_unit() -> String {
    "MHz".to_owned()
}

/// Sampled ODMR trace. Frequencies are strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    freqs: Vec<f64>,
    signal: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn new(freqs: Vec<f64>, signal: Vec<f64>, meta: SpectrumMeta) -> Result<Self, SpectraError> {
        if freqs.len() != signal.len() {
            return Err(SpectraError::InvalidInput(format!(
                "{} frequencies but {} signal samples",
                freqs.len(),
                signal.len()
            )));
        }
        validate_grid(&freqs)?;
        if signal.iter().any(|s| !s.is_finite()) {
            return Err(SpectraError::InvalidInput("signal must be finite".into()));
        }
        Ok(Self { freqs, signal, meta })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn with_offset(&self, offset: f64) -> Self {
        let signal = self.signal.iter().map(|s| s + offset).collect();
        Self { freqs: self.freqs.clone(), signal, meta: self.meta.clone() }
    }
}

fn validate_grid(freqs: &[f64]) -> Result<(), SpectraError> {
    if freqs.is_empty() {
        return Err(SpectraError::InvalidInput("frequency grid is empty".into()));
    }
    if freqs.len() < MIN_SAMPLES {
        return Err(SpectraError::InvalidInput(format!("need at least {MIN_SAMPLES} samples, got {}", freqs.len())));
    }
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(SpectraError::InvalidInput("frequencies must be finite".into()));
    }
    if let Some(i) = freqs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SpectraError::InvalidInput(format!("frequencies must be strictly ascending (index {})", i + 1)));
    }
    Ok(())
}

/// Uniform grid `start, start + step, ...` up to and including `stop`.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

/// Concatenated sweeps of `±half_span` around each center, overlapping
/// windows merged. Ascending and strictly increasing.
pub fn windowed_grid(centers: &[f64], half_span: f64, step: f64) -> Vec<f64> {
    let mut spans: Vec<(f64, f64)> = centers.iter().map(|&c| (c - half_span, c + half_span)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let mut out: Vec<f64> = Vec::new();
    for (lo, hi) in merged {
        for f in uniform_grid(lo, hi, step) {
            if out.last().is_none_or(|&l| f > l) {
                out.push(f);
            }
        }
    }
    out
}

/// Sum of line profiles plus seeded Gaussian noise.
pub fn synthesize(lines: &[LineModel], freqs: &[f64], noise_sigma: f64, seed: u64) -> Result<Spectrum, SpectraError> {
    validate_grid(freqs)?;
    for line in lines {
        line.validate()?;
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(SpectraError::InvalidInput(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let mut signal: Vec<f64> = freqs.iter().map(|&f| lines.iter().map(|l| l.value(f)).sum()).collect();
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma checked");
        for s in &mut signal {
            *s += normal.sample(&mut rng);
        }
    }
    let meta =
        SpectrumMeta { noise_sigma, seed: Some(seed), frequency_unit: default_frequency_unit(), ..Default::default() };
    Spectrum::new(freqs.to_vec(), signal, meta)
}
