use serde::{Deserialize, Serialize};

use super::{CalibrationError, CalibrationSeries};

const MIN_SEGMENT_LEN: usize = 2;

/// Weighted least-squares line `f = intercept + slope·x` with absolute
/// (known-σ) parameter covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub covariance: f64,
    /// Σ w·r², dimensionless.
    pub chi2: f64,
    /// Σ r², MHz².
    pub sse: f64,
}

pub fn weighted_line_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> LineFit {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((w, x), y) in w.iter().zip(x).zip(y) {
        sxx += w * (x - xm) * (x - xm);
        sxy += w * (x - xm) * (y - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let (mut chi2, mut sse) = (0.0, 0.0);
    for ((w, x), y) in w.iter().zip(x).zip(y) {
        let r = y - intercept - slope * x;
        chi2 += w * r * r;
        sse += r * r;
    }
    LineFit {
        slope,
        intercept,
        slope_sigma: (1.0 / sxx).sqrt(),
        intercept_sigma: (1.0 / sw + xm * xm / sxx).sqrt(),
        covariance: -xm / sxx,
        chi2,
        sse,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Sample range `[start, end)` in ascending control order.
    pub start: usize,
    pub end: usize,
    pub control_min: f64,
    pub control_max: f64,
    pub fit: LineFit,
}

impl Segment {
    pub fn predict(&self, x: f64) -> f64 {
        self.fit.intercept + self.fit.slope * x
    }

    /// Predicted frequencies at the segment's control endpoints, ascending.
    pub fn freq_range(&self) -> (f64, f64) {
        let (a, b) = (self.predict(self.control_min), self.predict(self.control_max));
        (a.min(b), a.max(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFit {
    pub label: String,
    pub unit: String,
    /// Midpoints between the last sample of one segment and the first of
    /// the next, ascending.
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
    /// Σ r² over all segments, MHz².
    pub sse: f64,
    /// Weighted objective minimized by the breakpoint search.
    pub chi2: f64,
}

impl PiecewiseLinearFit {
    pub fn segment_for(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.segments[self.segment_for(x)].predict(x)
    }
}

/// Prefix sums of weighted moments for O(1) segment costs.
struct Moments {
    w: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    wxx: Vec<f64>,
    wxy: Vec<f64>,
    wyy: Vec<f64>,
}

impl Moments {
    fn new(x: &[f64], y: &[f64], sigma: &[f64]) -> Self {
        let n = x.len();
        // centering keeps the cancellation in `cost` benign
        let xc = x.iter().sum::<f64>() / n as f64;
        let yc = y.iter().sum::<f64>() / n as f64;
        let mut m = Self {
            w: vec![0.0; n + 1],
            wx: vec![0.0; n + 1],
            wy: vec![0.0; n + 1],
            wxx: vec![0.0; n + 1],
            wxy: vec![0.0; n + 1],
            wyy: vec![0.0; n + 1],
        };
        for i in 0..n {
            let w = 1.0 / (sigma[i] * sigma[i]);
            let (dx, dy) = (x[i] - xc, y[i] - yc);
            m.w[i + 1] = m.w[i] + w;
            m.wx[i + 1] = m.wx[i] + w * dx;
            m.wy[i + 1] = m.wy[i] + w * dy;
            m.wxx[i + 1] = m.wxx[i] + w * dx * dx;
            m.wxy[i + 1] = m.wxy[i] + w * dx * dy;
            m.wyy[i + 1] = m.wyy[i] + w * dy * dy;
        }
        m
    }

    /// Weighted residual sum of squares of the best line over `[i, j)`.
    fn cost(&self, i: usize, j: usize) -> f64 {
        let d = |v: &[f64]| v[j] - v[i];
        let sw = d(&self.w);
        let (sx, sy) = (d(&self.wx), d(&self.wy));
        let sxx = d(&self.wxx) - sx * sx / sw;
        let sxy = d(&self.wxy) - sx * sy / sw;
        let syy = d(&self.wyy) - sy * sy / sw;
        (syy - sxy * sxy / sxx).max(0.0)
    }
}

/// Globally optimal `n_segments`-piece fit over sample-index breakpoints
/// (dynamic programming). Segments are independent lines; continuity at
/// the breakpoints is not imposed.
pub fn segmented_fit(series: &CalibrationSeries, n_segments: usize) -> Result<PiecewiseLinearFit, CalibrationError> {
    let n = series.len();
    if n_segments == 0 {
        return Err(CalibrationError::InvalidInput("n_segments must be >= 1".into()));
    }
    if n < MIN_SEGMENT_LEN * n_segments {
        return Err(CalibrationError::InvalidInput(format!(
            "{n} points cannot support {n_segments} segments of at least {MIN_SEGMENT_LEN} points"
        )));
    }
    let x = series.control();
    let (y, sigma) = (series.freq(), series.freq_sigma());
    let moments = Moments::new(&x, y, sigma);

    // best[k][j]: minimal cost of covering [0, j) with k+1 segments.
    let mut best = vec![vec![f64::INFINITY; n + 1]; n_segments];
    let mut split = vec![vec![0usize; n + 1]; n_segments];
    for j in MIN_SEGMENT_LEN..=n {
        best[0][j] = moments.cost(0, j);
    }
    for k in 1..n_segments {
        for j in MIN_SEGMENT_LEN * (k + 1)..=n {
            let mut value = f64::INFINITY;
            let mut arg = 0;
            for i in MIN_SEGMENT_LEN * k..=j - MIN_SEGMENT_LEN {
                let c = best[k - 1][i] + moments.cost(i, j);
                if c < value {
                    value = c;
                    arg = i;
                }
            }
            best[k][j] = value;
            split[k][j] = arg;
        }
    }

    let mut bounds = vec![n];
    let mut j = n;
    for k in (1..n_segments).rev() {
        j = split[k][j];
        bounds.push(j);
    }
    bounds.push(0);
    bounds.reverse();

    let segments: Vec<Segment> = bounds
        .windows(2)
        .map(|b| {
            let (s, e) = (b[0], b[1]);
            Segment {
                start: s,
                end: e,
                control_min: x[s],
                control_max: x[e - 1],
                fit: weighted_line_fit(&x[s..e], &y[s..e], &sigma[s..e]),
            }
        })
        .collect();
    let breakpoints = bounds[1..bounds.len() - 1].iter().map(|&i| 0.5 * (x[i - 1] + x[i])).collect();
    Ok(PiecewiseLinearFit {
        label: series.label.clone(),
        unit: series.unit.clone(),
        breakpoints,
        sse: segments.iter().map(|s| s.fit.sse).sum(),
        chi2: segments.iter().map(|s| s.fit.chi2).sum(),
        segments,
    })
}
