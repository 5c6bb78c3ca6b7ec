use std::fmt;

use odmr_core::calibration::CalibrationError;
use odmr_core::kinetics::KineticsError;
use odmr_core::spectra::SpectraError;
use odmr_core::spin::SpinError;
use odmr_core::zfs_dft::ZfsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Non-convergence or another numerical failure on valid input.
    Compute,
    /// Bad config, flags or input files.
    Input,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Compute => 1,
            ExitKind::Input => 2,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Input, message: message.into() }
    }

    pub fn compute(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Compute, message: message.into() }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::NotConverged(_) | SpectraError::NoEdge { .. } | SpectraError::NoPeaks => {
                Self::compute(e.to_string())
            }
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::InvalidInput(_) | CalibrationError::Parse { .. } | CalibrationError::Io(_) => {
                Self::input(e.to_string())
            }
            _ => Self::compute(e.to_string()),
        }
    }
}

impl From<ZfsError> for CliError {
    fn from(e: ZfsError) -> Self {
        match e {
            ZfsError::Spin(s) => s.into(),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<SpinError> for CliError {
    fn from(e: SpinError) -> Self {
        match e {
            SpinError::InvalidParameter(_) => Self::input(e.to_string()),
            _ => Self::compute(e.to_string()),
        }
    }
}

impl From<KineticsError> for CliError {
    fn from(e: KineticsError) -> Self {
        match e {
            KineticsError::InvalidParameter(_) => Self::input(e.to_string()),
            _ => Self::compute(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::input(e.to_string())
    }
}
