use odmr_core::spectra::{fit_peaks, io, FitOptions, LineModel, PeakFitReport, SpectraError, Spectrum};
use odmr_core::spin::zfs_from_transitions;
use odmr_core::ZfsParameters;
use serde::Serialize;

use super::{positive, required};
use crate::config::{FitConfig, RunConfig};
use crate::error::CliError;
use crate::svg::{plot, Series, Style};
use crate::Output;

#[derive(Debug, Serialize)]
struct FitOutput<'a> {
    input: String,
    auto_initialized: bool,
    report: &'a PeakFitReport,
    /// From the two highest centers (xz, yz) and, with three peaks, the lowest (xy).
    zfs: Option<ZfsParameters>,
    /// `|f_xy - 2E|`, MHz.
    xy_residual: Option<f64>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Guesses from the config: full models, centers, or none (automatic).
pub fn guesses(fit: &FitConfig, spectrum: &Spectrum) -> Result<Vec<LineModel>, CliError> {
    if !fit.guesses.is_empty() {
        for g in &fit.guesses {
            g.validate()?;
        }
        return Ok(fit.guesses.clone());
    }
    if fit.centers.is_empty() {
        return Ok(Vec::new());
    }
    let hwhm = positive(fit.guess_hwhm, "guess_hwhm")?;
    let (f, y) = (spectrum.freqs(), spectrum.signal());
    let base = median(y);
    fit.centers
        .iter()
        .map(|&c| {
            let i = f.partition_point(|&v| v < c).min(f.len() - 1);
            let amp = y[i] - base;
            let amp = if amp == 0.0 { 1e-6 } else { amp };
            Ok(LineModel::symmetric(c, hwhm, amp, 0.0)?)
        })
        .collect()
}

fn zfs_of(report: &PeakFitReport) -> (Option<ZfsParameters>, Option<f64>) {
    let mut c: Vec<f64> = report.peaks.iter().map(|p| p.center).collect();
    c.sort_by(f64::total_cmp);
    let n = c.len();
    if n < 2 {
        return (None, None);
    }
    let xy = if n >= 3 { Some(c[0]) } else { None };
    match zfs_from_transitions(c[n - 1], c[n - 2], xy) {
        Ok((z, r)) => (Some(z), r),
        Err(_) => (None, None),
    }
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let input = required(&cfg.fit.input, "fit input (--input)")?;
    if cfg.fit.max_iterations == 0 {
        return Err(CliError::input("max_iterations must be >= 1"));
    }
    let spectrum = io::read_spectrum(input)?;
    let guesses = guesses(&cfg.fit, &spectrum)?;
    let opts =
        FitOptions { max_iterations: cfg.fit.max_iterations, fit_baseline: cfg.fit.fit_baseline, ..Default::default() };
    let (report, failure) = match fit_peaks(&spectrum, &guesses, &opts) {
        Ok(r) => (r, None),
        Err(SpectraError::NotConverged(r)) => {
            let msg = format!("fit did not converge after {} iterations", r.iterations);
            (*r, Some(CliError::compute(msg)))
        }
        Err(e) => return Err(e.into()),
    };

    let (zfs, xy_residual) = zfs_of(&report);
    out.write_json(
        "peaks.json",
        &FitOutput {
            input: input.display().to_string(),
            auto_initialized: guesses.is_empty(),
            report: &report,
            zfs,
            xy_residual,
        },
    )?;
    let mut csv = String::from("center_mhz,center_sigma_mhz,hwhm_mhz,amplitude,amplitude_sigma\n");
    for p in &report.peaks {
        csv.push_str(&format!("{},{},{},{},{}\n", p.center, p.center_sigma, p.width, p.amplitude, p.amplitude_sigma));
    }
    out.write("peaks.csv", &csv)?;
    if out.svg {
        let model: Vec<f64> = spectrum
            .freqs()
            .iter()
            .map(|&f| report.baseline + report.peaks.iter().map(|p| p.line.value(f)).sum::<f64>())
            .collect();
        let svg = plot(
            "Peak fit",
            "frequency (MHz)",
            "contrast",
            &[
                Series { name: "data", x: spectrum.freqs(), y: spectrum.signal(), style: Style::Line },
                Series { name: "model", x: spectrum.freqs(), y: &model, style: Style::Line },
            ],
        );
        out.write("fit.svg", &svg)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
