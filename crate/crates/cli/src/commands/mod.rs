pub mod calibrate;
pub mod fit;
pub mod sensitivity;
pub mod simulate;
pub mod zfs;

use std::path::{Path, PathBuf};

use crate::error::CliError;

pub(crate) fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::input(format!("missing {what}")))
}

pub(crate) fn positive(v: f64, what: &str) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::input(format!("{what} must be finite and > 0, got {v}")))
    }
}
