use super::{fit::robust_noise_sigma, SpectraError, Spectrum, MIN_SAMPLES};

/// Finite-difference derivative at sample midpoints: `(midpoint, dS/df)`.
fn midpoint_derivative(freqs: &[f64], signal: &[f64]) -> Vec<(f64, f64)> {
    freqs
        .windows(2)
        .zip(signal.windows(2))
        .map(|(f, s)| (f[0] + 0.5 * (f[1] - f[0]), (s[1] - s[0]) / (f[1] - f[0])))
        .collect()
}

/// Location of the steepest point of the spectrum inside `[lo, hi]`.
///
/// The vertex of the parabola through the largest `|dS/df|` sample and its
/// two neighbours gives sub-sample resolution. For a Lorentzian line this
/// is an inflection point at `center ± hwhm/√3`, not the peak itself.
pub fn steep_edge_center(spectrum: &Spectrum, lo: f64, hi: f64) -> Result<f64, SpectraError> {
    let freqs = spectrum.freqs();
    let start = freqs.partition_point(|&f| f < lo);
    let end = freqs.partition_point(|&f| f <= hi);
    if end.saturating_sub(start) < MIN_SAMPLES {
        return Err(SpectraError::InvalidInput(format!(
            "window [{lo}, {hi}] MHz holds {} samples, need {MIN_SAMPLES}",
            end.saturating_sub(start)
        )));
    }
    let f = &freqs[start..end];
    let s = &spectrum.signal()[start..end];
    let deriv = midpoint_derivative(f, s);

    let (k, max_slope) = deriv.iter().enumerate().map(|(i, &(_, d))| (i, d.abs())).fold((0, -1.0), |best, cur| {
        if cur.1 > best.1 {
            cur
        } else {
            best
        }
    });

    let sigma = if spectrum.meta.noise_sigma > 0.0 { spectrum.meta.noise_sigma } else { second_difference_noise(s) };
    let mut steps: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let floor = std::f64::consts::SQRT_2 * sigma / steps[steps.len() / 2];
    if max_slope <= 3.0 * floor {
        return Err(SpectraError::NoEdge { max_slope, floor });
    }

    if k == 0 || k + 1 == deriv.len() {
        return Ok(deriv[k].0);
    }
    // Work in coordinates relative to the central midpoint.
    let (x0, y0) = (deriv[k - 1].0 - deriv[k].0, deriv[k - 1].1.abs());
    let y1 = max_slope;
    let (x2, y2) = (deriv[k + 1].0 - deriv[k].0, deriv[k + 1].1.abs());
    let denom = x0 * x2 * (x0 - x2);
    let a = (x2 * (y0 - y1) - x0 * (y2 - y1)) / denom;
    let b = (x0 * x0 * (y2 - y1) - x2 * x2 * (y0 - y1)) / denom;
    let offset = if a < 0.0 { (-b / (2.0 * a)).clamp(x0, x2) } else { 0.0 };
    Ok(deriv[k].0 + offset)
}

fn second_difference_noise(s: &[f64]) -> f64 {
    let d2: Vec<f64> = s.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    if d2.is_empty() {
        return robust_noise_sigma(s);
    }
    // white noise: var(second difference) = 6σ²
    let mut abs: Vec<f64> = d2.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);
    abs[abs.len() / 2] / (0.674_489_750_196_08 * 6f64.sqrt())
}

/// Largest `|dS/df|` between adjacent samples.
pub fn max_signal_slope(spectrum: &Spectrum) -> f64 {
    midpoint_derivative(spectrum.freqs(), spectrum.signal()).into_iter().map(|(_, d)| d.abs()).fold(0.0, f64::max)
}
