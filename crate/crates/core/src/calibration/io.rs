//! Calibration CSV (`control_value,frequency_mhz,sigma_mhz`) with a JSON
//! sidecar declaring the control unit, and fit JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CalibrationError, CalibrationSeries, PiecewiseLinearFit};

pub const HEADER: &str = "control_value,frequency_mhz,sigma_mhz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesMeta {
    pub unit: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub control_offset: f64,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn to_csv_string(s: &CalibrationSeries) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for ((c, f), e) in s.raw_control().iter().zip(s.freq()).zip(s.freq_sigma()) {
        out.push_str(&format!("{c},{f},{e}\n"));
    }
    out
}

pub fn parse_csv(text: &str, origin: &str) -> Result<[Vec<f64>; 3], CalibrationError> {
    let err = |line: usize, message: String| CalibrationError::Parse { path: origin.to_owned(), line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
        Some((_, h)) => return Err(err(1, format!("expected header `{HEADER}`, found `{h}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(idx + 1, format!("expected 3 columns, found {}", fields.len())));
        }
        for (col, v) in cols.iter_mut().zip(fields) {
            col.push(v.trim().parse::<f64>().map_err(|e| err(idx + 1, format!("invalid number `{v}`: {e}")))?);
        }
    }
    Ok(cols)
}

pub fn write_series(s: &CalibrationSeries, csv: &Path) -> Result<(), CalibrationError> {
    fs::write(csv, to_csv_string(s))?;
    let meta = SeriesMeta { unit: s.unit.clone(), label: s.label.clone(), control_offset: s.control_offset };
    fs::write(sidecar_path(csv), serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n")?;
    Ok(())
}

/// Reads a series; the sidecar is required because it carries the unit.
pub fn read_series(csv: &Path) -> Result<CalibrationSeries, CalibrationError> {
    let origin = csv.display().to_string();
    let [control, freq, sigma] = parse_csv(&fs::read_to_string(csv)?, &origin)?;
    let side = sidecar_path(csv);
    let text = fs::read_to_string(&side)
        .map_err(|e| CalibrationError::Io(format!("{}: {e} (sidecar declares the control unit)", side.display())))?;
    let meta: SeriesMeta = serde_json::from_str(&text).map_err(|e| CalibrationError::Parse {
        path: side.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(CalibrationSeries::new(control, freq, sigma, meta.label, meta.unit)?.with_offset(meta.control_offset))
}

pub fn fit_to_json(fit: &PiecewiseLinearFit) -> String {
    serde_json::to_string_pretty(fit).expect("fit serializes")
}
