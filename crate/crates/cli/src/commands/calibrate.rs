use odmr_core::calibration::{invert_readout, io, segmented_fit, zfs_series, PiecewiseLinearFit};
use serde::Serialize;

use super::required;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::svg::{plot, Series, Style};
use crate::Output;

#[derive(Debug, Serialize)]
struct LadderRow {
    segments: usize,
    sse: f64,
    chi2: f64,
}

#[derive(Debug, Serialize)]
struct ReadoutRow {
    freq: f64,
    freq_sigma: f64,
    value: Option<f64>,
    sigma: Option<f64>,
    segment: Option<usize>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct CalibrationSummary<'a> {
    input: String,
    fit: &'a PiecewiseLinearFit,
    sse_ladder: Vec<LadderRow>,
    readouts: Vec<ReadoutRow>,
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let c = &cfg.calibrate;
    let input = required(&c.input, "calibration input (--input)")?;
    if c.segments == 0 {
        return Err(CliError::input("segments must be >= 1"));
    }
    let max_segments = c.max_segments.unwrap_or(c.segments).max(c.segments);
    for r in &c.readouts {
        if !r.freq.is_finite() || !r.sigma.is_finite() || r.sigma < 0.0 {
            return Err(CliError::input(format!("readout {} ± {} is not valid", r.freq, r.sigma)));
        }
    }
    let series = io::read_series(input)?;
    let yz = c.yz_input.as_deref().map(io::read_series).transpose()?;

    let fit = segmented_fit(&series, c.segments)?;
    let mut sse_ladder = Vec::new();
    for k in 1..=max_segments {
        let f = if k == c.segments { fit.clone() } else { segmented_fit(&series, k)? };
        sse_ladder.push(LadderRow { segments: k, sse: f.sse, chi2: f.chi2 });
    }
    let readouts: Vec<ReadoutRow> = c
        .readouts
        .iter()
        .map(|r| match invert_readout(&fit, r.freq, r.sigma, r.segment) {
            Ok(v) => ReadoutRow {
                freq: r.freq,
                freq_sigma: r.sigma,
                value: Some(v.value),
                sigma: Some(v.sigma),
                segment: Some(v.segment),
                error: None,
            },
            Err(e) => ReadoutRow {
                freq: r.freq,
                freq_sigma: r.sigma,
                value: None,
                sigma: None,
                segment: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    out.write("calibration.json", &(io::fit_to_json(&fit) + "\n"))?;
    let mut table = String::from("freq_mhz,freq_sigma_mhz,value,sigma,segment,error\n");
    for r in &readouts {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.freq,
            r.freq_sigma,
            opt(r.value),
            opt(r.sigma),
            r.segment.map(|s| s.to_string()).unwrap_or_default(),
            r.error.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    out.write("readout.csv", &table)?;

    let x = series.control();
    let predicted: Vec<f64> = x.iter().map(|&v| fit.predict(v)).collect();
    let mut curve = format!("control_{},measured_mhz,sigma_mhz,fit_mhz,segment\n", series.unit);
    for (i, &v) in x.iter().enumerate() {
        curve.push_str(&format!(
            "{v},{},{},{},{}\n",
            series.freq()[i],
            series.freq_sigma()[i],
            predicted[i],
            fit.segment_for(v)
        ));
    }
    out.write("calibration_curve.csv", &curve)?;
    out.write_json(
        "calibration_summary.json",
        &CalibrationSummary { input: input.display().to_string(), fit: &fit, sse_ladder, readouts },
    )?;

    if let Some(yz) = &yz {
        let z = zfs_series(&series, yz)?;
        let mut csv = format!("control_{},d_mhz,d_sigma_mhz,e_mhz,e_sigma_mhz\n", z.unit);
        for i in 0..z.control.len() {
            csv.push_str(&format!("{},{},{},{},{}\n", z.control[i], z.d[i], z.d_sigma[i], z.e[i], z.e_sigma[i]));
        }
        out.write("zfs_series.csv", &csv)?;
    }
    if out.svg {
        let label = format!("control ({})", series.unit);
        let svg = plot(
            &format!("Calibration: {}", series.label),
            &label,
            "frequency (MHz)",
            &[
                Series { name: "measured", x: &x, y: series.freq(), style: Style::Points },
                Series { name: "segmented fit", x: &x, y: &predicted, style: Style::Line },
            ],
        );
        out.write("calibration.svg", &svg)?;
    }
    Ok(())
}
