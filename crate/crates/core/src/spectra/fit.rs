//! Damped least-squares (Levenberg-Marquardt) refinement of line models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LineModel, SpectraError, Spectrum};

const PARAMS_PER_LINE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once every parameter step is below this, relative to the
    /// parameter's own scale.
    pub relative_step: f64,
    /// Fit a constant baseline offset together with the lines.
    pub fit_baseline: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, relative_step: 1e-8, fit_baseline: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub center: f64,
    pub center_sigma: f64,
    /// Mean half width at half maximum of both sides.
    pub width: f64,
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub residual_rms: f64,
    pub line: LineModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFitReport {
    pub peaks: Vec<PeakFit>,
    pub baseline: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_rms: f64,
}

struct Problem<'a> {
    freqs: &'a [f64],
    signal: &'a [f64],
    n_lines: usize,
    fit_baseline: bool,
    f_lo: f64,
    f_hi: f64,
    min_width: f64,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.n_lines * PARAMS_PER_LINE + 1
    }

    fn line(p: &DVector<f64>, k: usize) -> LineModel {
        let o = 1 + k * PARAMS_PER_LINE;
        LineModel {
            center: p[o],
            width_left: p[o + 1],
            width_right: p[o + 2],
            amplitude: p[o + 3],
            shape_mix: p[o + 4],
        }
    }

    fn project(&self, p: &mut DVector<f64>) {
        if !self.fit_baseline {
            p[0] = 0.0;
        }
        for k in 0..self.n_lines {
            let o = 1 + k * PARAMS_PER_LINE;
            p[o] = p[o].clamp(self.f_lo, self.f_hi);
            p[o + 1] = p[o + 1].max(self.min_width);
            p[o + 2] = p[o + 2].max(self.min_width);
            p[o + 4] = p[o + 4].clamp(0.0, 1.0);
        }
    }

    /// `Some(-1)` / `Some(1)` when parameter `i` sits on its lower / upper bound.
    fn bound_side(&self, p: &DVector<f64>, i: usize) -> Option<i8> {
        if i == 0 {
            return None;
        }
        let (lo, hi) = match (i - 1) % PARAMS_PER_LINE {
            0 => (self.f_lo, self.f_hi),
            1 | 2 => (self.min_width, f64::INFINITY),
            4 => (0.0, 1.0),
            _ => return None,
        };
        if p[i] <= lo {
            Some(-1)
        } else if p[i] >= hi {
            Some(1)
        } else {
            None
        }
    }

    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let lines: Vec<LineModel> = (0..self.n_lines).map(|k| Self::line(p, k)).collect();
        DVector::from_iterator(
            self.freqs.len(),
            self.freqs.iter().zip(self.signal).map(|(&f, &y)| y - p[0] - lines.iter().map(|l| l.value(f)).sum::<f64>()),
        )
    }

    /// Jacobian of the model (not the residual).
    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let lines: Vec<LineModel> = (0..self.n_lines).map(|k| Self::line(p, k)).collect();
        let mut j = DMatrix::zeros(self.freqs.len(), self.n_params());
        for (row, &f) in self.freqs.iter().enumerate() {
            if self.fit_baseline {
                j[(row, 0)] = 1.0;
            }
            for (k, line) in lines.iter().enumerate() {
                let (_, grad) = line.value_and_gradient(f);
                for (c, g) in grad.iter().enumerate() {
                    j[(row, 1 + k * PARAMS_PER_LINE + c)] = *g;
                }
            }
        }
        j
    }

    fn scales(&self, p: &DVector<f64>, signal_scale: f64) -> Vec<f64> {
        let mut s = vec![signal_scale; self.n_params()];
        for k in 0..self.n_lines {
            let o = 1 + k * PARAMS_PER_LINE;
            let w = 0.5 * (p[o + 1] + p[o + 2]);
            s[o] = w;
            s[o + 1] = w;
            s[o + 2] = w;
            s[o + 3] = p[o + 3].abs().max(signal_scale);
            s[o + 4] = 1.0;
        }
        s
    }
}

/// Refines all parameters of `guesses` against `spectrum`.
///
/// An empty guess list falls back to [`auto_guesses`]; lines of that fit
/// which come out narrower than the scan's smoothing kernel or with an
/// amplitude below 3σ are then dropped and the rest refit.
pub fn fit_peaks(
    spectrum: &Spectrum,
    guesses: &[LineModel],
    options: &FitOptions,
) -> Result<PeakFitReport, SpectraError> {
    if !guesses.is_empty() {
        return refine(spectrum, guesses, options);
    }
    let min_hwhm = (smoothing_half(spectrum.len()) + 1) as f64 * median_step(spectrum.freqs());
    let mut guesses = auto_guesses(spectrum)?;
    loop {
        let result = refine(spectrum, &guesses, options);
        let report = match &result {
            Ok(r) => r,
            Err(SpectraError::NotConverged(r)) => r.as_ref(),
            Err(_) => return result,
        };
        let kept: Vec<LineModel> = report
            .peaks
            .iter()
            .filter(|p| p.width >= min_hwhm && p.amplitude.abs() >= 3.0 * p.amplitude_sigma)
            .map(|p| p.line)
            .collect();
        if kept.len() == report.peaks.len() {
            return result;
        }
        if kept.is_empty() {
            return Err(SpectraError::NoPeaks);
        }
        guesses = kept;
    }
}

fn smoothing_half(len: usize) -> usize {
    (len / 16).min(4)
}

fn median_step(freqs: &[f64]) -> f64 {
    median(&freqs.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())
}

fn refine(spectrum: &Spectrum, guesses: &[LineModel], options: &FitOptions) -> Result<PeakFitReport, SpectraError> {
    let freqs = spectrum.freqs();
    let (f_lo, f_hi) = (freqs[0], freqs[freqs.len() - 1]);
    let guesses = guesses.to_vec();
    for g in &guesses {
        g.validate()?;
        if g.center < f_lo || g.center > f_hi {
            return Err(SpectraError::InvalidInput(format!(
                "guess center {} MHz outside the spectrum range [{f_lo}, {f_hi}]",
                g.center
            )));
        }
    }

    let min_step = freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let problem = Problem {
        freqs,
        signal: spectrum.signal(),
        n_lines: guesses.len(),
        fit_baseline: options.fit_baseline,
        f_lo,
        f_hi,
        min_width: 1e-3 * min_step,
    };
    let m = problem.n_params();
    let n = freqs.len();
    if n <= m {
        return Err(SpectraError::InvalidInput(format!("{n} samples cannot constrain {m} parameters")));
    }

    let mut p = DVector::zeros(m);
    if options.fit_baseline {
        p[0] = median(spectrum.signal());
    }
    for (k, g) in guesses.iter().enumerate() {
        let o = 1 + k * PARAMS_PER_LINE;
        p[o] = g.center;
        p[o + 1] = g.width_left;
        p[o + 2] = g.width_right;
        p[o + 3] = g.amplitude;
        p[o + 4] = g.shape_mix;
    }
    problem.project(&mut p);

    let signal_scale = {
        let s = spectrum.signal();
        let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo).max(f64::MIN_POSITIVE)
    };

    let mut r = problem.residuals(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = problem.jacobian(&p);

    while iterations < options.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let scales = problem.scales(&p, signal_scale);
        // Parameters pinned on a bound with the descent direction pointing
        // outward are held fixed for this iteration.
        let frozen: Vec<bool> = (0..m)
            .map(|i| {
                (i == 0 && !options.fit_baseline)
                    || matches!(problem.bound_side(&p, i), Some(side) if f64::from(side) * g[i] > 0.0)
            })
            .collect();
        let mut stepped = false;
        let mut small_step = false;
        // Inner loop: raise damping until the cost decreases.
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..m {
                let d = jtj[(i, i)].max(1e-12 * (1.0 + jtj[(i, i)]));
                a[(i, i)] += lambda * d;
            }
            let mut rhs = g.clone();
            for i in (0..m).filter(|&i| frozen[i]) {
                a.row_mut(i).fill(0.0);
                a.column_mut(i).fill(0.0);
                a[(i, i)] = 1.0;
                rhs[i] = 0.0;
            }
            let Some(delta) = a.clone().cholesky().map(|c| c.solve(&rhs)).or_else(|| a.lu().solve(&rhs)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &p + &delta;
            problem.project(&mut trial);
            let actual = &trial - &p;
            small_step = (0..m).all(|i| actual[i].abs() <= options.relative_step * (p[i].abs() + scales[i]));
            let r_trial = problem.residuals(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial <= cost {
                // negligible decrease counts as convergence too
                small_step |= cost - cost_trial <= 1e-10 * cost;
                p = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-12);
                stepped = true;
                break;
            }
            if small_step {
                break;
            }
            lambda *= 4.0;
        }
        if small_step {
            converged = true;
            break;
        }
        if !stepped {
            break;
        }
        jac = problem.jacobian(&p);
    }

    let report = build_report(&problem, &p, &r, &jac, converged, iterations)?;
    if converged {
        Ok(report)
    } else {
        Err(SpectraError::NotConverged(Box::new(report)))
    }
}

fn build_report(
    problem: &Problem<'_>,
    p: &DVector<f64>,
    r: &DVector<f64>,
    jac: &DMatrix<f64>,
    converged: bool,
    iterations: usize,
) -> Result<PeakFitReport, SpectraError> {
    let n = r.len();
    let m = problem.n_params();
    let free = if problem.fit_baseline { m } else { m - 1 };
    let sse = r.norm_squared();
    let s2 = sse / (n - free) as f64;
    let mut jtj = jac.transpose() * jac;
    if !problem.fit_baseline {
        jtj.row_mut(0).fill(0.0);
        jtj.column_mut(0).fill(0.0);
        jtj[(0, 0)] = 1.0;
    }
    let cov = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-14).ok())
        .ok_or_else(|| SpectraError::InvalidInput("singular normal matrix".into()))?
        * s2;
    let rms = (sse / n as f64).sqrt();
    let peaks = (0..problem.n_lines)
        .map(|k| {
            let o = 1 + k * PARAMS_PER_LINE;
            let line = Problem::line(p, k);
            PeakFit {
                center: line.center,
                center_sigma: cov[(o, o)].abs().sqrt().max(f64::MIN_POSITIVE),
                width: line.hwhm(),
                amplitude: line.amplitude,
                amplitude_sigma: cov[(o + 3, o + 3)].abs().sqrt(),
                residual_rms: rms,
                line,
            }
        })
        .collect();
    Ok(PeakFitReport { peaks, baseline: p[0], converged, iterations, residual_rms: rms })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Noise σ from the median absolute deviation of first differences.
pub fn robust_noise_sigma(signal: &[f64]) -> f64 {
    let diffs: Vec<f64> = signal.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&diffs);
    let mad = median(&diffs.iter().map(|d| (d - med).abs()).collect::<Vec<_>>());
    mad / (0.674_489_750_196_08 * std::f64::consts::SQRT_2)
}

/// Prominence scan for peaks and dips.
///
/// The trace is split at sampling gaps; each contiguous sweep is smoothed with
/// a short moving average. Local extrema whose prominence above the baseline
/// clears the noise of the smoothed trace, and which fall to half height on
/// both sides inside their sweep, become symmetric Lorentzian guesses.
pub fn auto_guesses(spectrum: &Spectrum) -> Result<Vec<LineModel>, SpectraError> {
    let freqs = spectrum.freqs();
    let base = median(spectrum.signal());
    let raw: Vec<f64> = spectrum.signal().iter().map(|s| s - base).collect();
    let steps: Vec<f64> = freqs.windows(2).map(|w| w[1] - w[0]).collect();
    let typical = median_step(freqs);
    let min_step = steps.iter().copied().fold(f64::INFINITY, f64::min);

    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for (k, &d) in steps.iter().enumerate() {
        if d > 1.5 * typical {
            segments.push((start, k + 1));
            start = k + 1;
        }
    }
    segments.push((start, raw.len()));

    let half = smoothing_half(raw.len());
    let mut smooth = vec![0.0; raw.len()];
    for &(a, b) in &segments {
        for i in a..b {
            let lo = i.saturating_sub(half).max(a);
            let hi = (i + half + 1).min(b);
            smooth[i] = raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        }
    }
    // Extreme-value margin on the smoothed noise, plus a floor relative to the
    // strongest feature so that noiseless tails do not register.
    let n = raw.len() as f64;
    let sigma = robust_noise_sigma(spectrum.signal()) / ((2 * half + 1) as f64).sqrt();
    let strongest = smooth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = (sigma * ((2.0 * n.ln()).sqrt() + 2.0)).max(1e-2 * strongest);

    let mut found: Vec<LineModel> = Vec::new();
    for &(a, b) in &segments {
        if b - a < 3 {
            continue;
        }
        for sign in [1.0, -1.0] {
            // Clipped at the baseline: features of the other sign are not valleys.
            let y: Vec<f64> = smooth[a..b].iter().map(|v| (sign * v).max(0.0)).collect();
            for i in 1..y.len() - 1 {
                if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) || prominence(&y, i) <= threshold {
                    continue;
                }
                let halfmax = 0.5 * y[i];
                let Some(l) = (0..i).rev().find(|&k| y[k] <= halfmax) else { continue };
                let Some(r) = (i + 1..y.len()).find(|&k| y[k] <= halfmax) else { continue };
                let hwhm = (0.5 * (freqs[a + r] - freqs[a + l])).max(2.0 * min_step);
                found.push(LineModel {
                    center: freqs[a + i],
                    width_left: hwhm,
                    width_right: hwhm,
                    amplitude: sign * raw[a + i].abs().max(y[i]),
                    shape_mix: 0.0,
                });
            }
        }
    }
    if found.is_empty() {
        return Err(SpectraError::NoPeaks);
    }
    found.sort_by(|p, q| p.center.total_cmp(&q.center));
    Ok(found)
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for j in (0..i).rev() {
        if y[j] > peak {
            break;
        }
        left_min = left_min.min(y[j]);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}
