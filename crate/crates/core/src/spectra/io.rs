//! Spectrum CSV (`frequency_mhz,signal`) with a JSON metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use super::{SpectraError, Spectrum, SpectrumMeta};

pub const HEADER: &str = "frequency_mhz,signal";

/// `spectrum.csv` -> `spectrum.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn to_csv_string(s: &Spectrum) -> String {
    let mut out = String::with_capacity(32 * s.len());
    out.push_str(HEADER);
    out.push('\n');
    for (f, y) in s.freqs().iter().zip(s.signal()) {
        out.push_str(&format!("{f},{y}\n"));
    }
    out
}

pub fn parse_csv(text: &str, origin: &str) -> Result<(Vec<f64>, Vec<f64>), SpectraError> {
    let err = |line: usize, message: String| SpectraError::Parse { path: origin.to_owned(), line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
        Some((_, h)) => return Err(err(1, format!("expected header `{HEADER}`, found `{h}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut freqs = Vec::new();
    let mut signal = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(err(idx + 1, format!("expected 2 columns, found `{line}`")));
        };
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| err(idx + 1, format!("invalid number `{v}`: {e}")));
        freqs.push(parse(a)?);
        signal.push(parse(b)?);
    }
    Ok((freqs, signal))
}

pub fn write_spectrum(s: &Spectrum, csv: &Path) -> Result<(), SpectraError> {
    fs::write(csv, to_csv_string(s))?;
    let meta = serde_json::to_string_pretty(&s.meta).expect("metadata serializes");
    fs::write(sidecar_path(csv), meta + "\n")?;
    Ok(())
}

/// Reads a spectrum CSV and, when present, its sidecar metadata.
pub fn read_spectrum(csv: &Path) -> Result<Spectrum, SpectraError> {
    let origin = csv.display().to_string();
    let text = fs::read_to_string(csv)?;
    let (freqs, signal) = parse_csv(&text, &origin)?;
    let side = sidecar_path(csv);
    let meta = if side.exists() {
        let text = fs::read_to_string(&side)?;
        serde_json::from_str::<SpectrumMeta>(&text).map_err(|e| SpectraError::Parse {
            path: side.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        SpectrumMeta::default()
    };
    Spectrum::new(freqs, signal, meta)
}
