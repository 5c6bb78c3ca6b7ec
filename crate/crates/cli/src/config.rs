//! JSON run configuration. Every section is optional and falls back to
//! defaults; unknown keys are rejected. Relative paths inside a config file
//! are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use odmr_core::kinetics::KineticsParams;
use odmr_core::spectra::LineModel;
use odmr_core::zfs_dft::Method;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Also write static SVG plots.
    pub svg: bool,
    pub kinetics: KineticsParams,
    pub simulate: SimulateConfig,
    pub fit: FitConfig,
    pub calibrate: CalibrateConfig,
    pub zfs: ZfsConfig,
    pub sensitivity: SensitivityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    /// One sweep of `±half_span` around each transition.
    Windows {
        half_span: f64,
        step: f64,
    },
    Uniform {
        start: f64,
        stop: f64,
        step: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// MHz
    pub d: f64,
    /// MHz
    pub e: f64,
    /// Full width at half maximum, MHz.
    pub linewidth: f64,
    pub shape_mix: f64,
    /// Peak contrast of the xy, yz and xz lines. Derived from the kinetics
    /// model when absent.
    pub amplitudes: Option<[f64; 3]>,
    /// Drive rate used for kinetics-derived amplitudes, 1/μs.
    pub mw_rate: f64,
    pub noise_sigma: f64,
    /// Static field in the molecular frame, mT.
    pub field_mt: Option<[f64; 3]>,
    pub grid: GridSpec,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            d: 1392.0,
            e: 53.0,
            linewidth: 4.3,
            shape_mix: 0.0,
            amplitudes: None,
            mw_rate: 0.1,
            noise_sigma: 0.0,
            field_mt: None,
            grid: GridSpec::Windows { half_span: 15.0, step: 0.025 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    /// Full initial line models; take precedence over `centers`.
    pub guesses: Vec<LineModel>,
    /// Initial centers, MHz. Widths start at `guess_hwhm`.
    pub centers: Vec<f64>,
    pub guess_hwhm: f64,
    pub max_iterations: usize,
    pub fit_baseline: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            guesses: Vec::new(),
            centers: Vec::new(),
            guess_hwhm: 2.0,
            max_iterations: 200,
            fit_baseline: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutRequest {
    pub freq: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub segment: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub input: Option<PathBuf>,
    pub segments: usize,
    /// Report SSE for 1..=max_segments segments.
    pub max_segments: Option<usize>,
    pub readouts: Vec<ReadoutRequest>,
    /// With `input` holding the xz series, also report D(x) and E(x).
    pub yz_input: Option<PathBuf>,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self { input: None, segments: 1, max_segments: None, readouts: Vec::new(), yz_input: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZfsConfig {
    pub homo: Option<PathBuf>,
    pub lumo: Option<PathBuf>,
    pub method: Method,
    /// Å; defaults to the grid step.
    pub cutoff: Option<f64>,
    /// Second pair for a phase comparison (`homo`/`lumo` are the reference).
    pub tri_homo: Option<PathBuf>,
    pub tri_lumo: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    /// contrast/√Hz
    pub sigma: Option<f64>,
    /// s
    pub tau: f64,
    /// contrast/MHz; taken from `spectrum` when absent.
    pub signal_slope: Option<f64>,
    /// MHz per control unit; taken from `calibration` when absent.
    pub calib_slope: Option<f64>,
    pub spectrum: Option<PathBuf>,
    /// Calibration fit JSON as written by `calibrate`.
    pub calibration: Option<PathBuf>,
    pub segment: usize,
    pub unit: Option<String>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            tau: 1.0,
            signal_slope: None,
            calib_slope: None,
            spectrum: None,
            calibration: None,
            segment: 0,
            unit: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut self.out);
        fix(&mut self.fit.input);
        fix(&mut self.calibrate.input);
        fix(&mut self.calibrate.yz_input);
        fix(&mut self.zfs.homo);
        fix(&mut self.zfs.lumo);
        fix(&mut self.zfs.tri_homo);
        fix(&mut self.zfs.tri_lumo);
        fix(&mut self.sensitivity.spectrum);
        fix(&mut self.sensitivity.calibration);
    }
}
