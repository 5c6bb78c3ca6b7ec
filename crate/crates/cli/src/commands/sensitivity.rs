use std::fs;

use odmr_core::calibration::{sensitivity, PiecewiseLinearFit, SensitivityReport};
use odmr_core::spectra::{io, max_signal_slope};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::Output;

#[derive(Debug, Serialize)]
struct SensitivityOutput {
    #[serde(flatten)]
    report: SensitivityReport,
    /// Unit of `eta` per √Hz.
    unit: String,
    signal_slope_source: String,
    calib_slope_source: String,
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let s = &cfg.sensitivity;
    let sigma = s.sigma.ok_or_else(|| CliError::input("missing sigma (--sigma)"))?;
    let mut unit = s.unit.clone();

    let (signal_slope, signal_src) = match (s.signal_slope, &s.spectrum) {
        (Some(v), _) => (v, "given".to_owned()),
        (None, Some(p)) => (max_signal_slope(&io::read_spectrum(p)?), format!("max slope of {}", p.display())),
        (None, None) => return Err(CliError::input("need signal_slope or a spectrum")),
    };
    let (calib_slope, calib_src) = match (s.calib_slope, &s.calibration) {
        (Some(v), _) => (v, "given".to_owned()),
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            let fit: PiecewiseLinearFit =
                serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            let seg = fit.segments.get(s.segment).ok_or_else(|| {
                CliError::input(format!("segment {} not in a {}-segment fit", s.segment, fit.segments.len()))
            })?;
            unit.get_or_insert_with(|| fit.unit.clone());
            (seg.fit.slope, format!("segment {} of {}", s.segment, p.display()))
        }
        (None, None) => return Err(CliError::input("need calib_slope or a calibration fit")),
    };
    let report = sensitivity(sigma, s.tau, signal_slope, calib_slope)?;
    out.write_json(
        "sensitivity.json",
        &SensitivityOutput {
            report,
            unit: unit.unwrap_or_else(|| "control unit".to_owned()),
            signal_slope_source: signal_src,
            calib_slope_source: calib_src,
        },
    )?;
    Ok(())
}
