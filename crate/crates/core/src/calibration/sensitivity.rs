use serde::{Deserialize, Serialize};

use super::CalibrationError;

/// `eta = sigma·√tau / |signal_slope·calib_slope|`, in control units per √Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub eta: f64,
    /// contrast/√Hz
    pub sigma: f64,
    /// s
    pub tau: f64,
    /// contrast/MHz
    pub signal_slope: f64,
    /// MHz per control unit
    pub calib_slope: f64,
}

pub fn sensitivity(
    sigma: f64,
    tau: f64,
    signal_slope: f64,
    calib_slope: f64,
) -> Result<SensitivityReport, CalibrationError> {
    for (name, v) in [("sigma", sigma), ("tau", tau), ("signal_slope", signal_slope), ("calib_slope", calib_slope)] {
        if !v.is_finite() {
            return Err(CalibrationError::InvalidInput(format!("{name} = {v} is not finite")));
        }
    }
    if sigma < 0.0 || tau < 0.0 {
        return Err(CalibrationError::InvalidInput(format!("sigma ({sigma}) and tau ({tau}) must be >= 0")));
    }
    let denom = (signal_slope * calib_slope).abs();
    if denom == 0.0 {
        return Err(CalibrationError::DivisionDomain);
    }
    Ok(SensitivityReport { eta: sigma * tau.sqrt() / denom, sigma, tau, signal_slope, calib_slope })
}
