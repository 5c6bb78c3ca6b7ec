use serde::{Deserialize, Serialize};

use super::{CalibrationError, CalibrationSeries, PiecewiseLinearFit};

/// Slopes smaller than this (MHz per control unit) cannot be inverted.
pub const MIN_READOUT_SLOPE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub value: f64,
    pub sigma: f64,
    pub segment: usize,
}

/// Control value for a measured frequency, `x = (f - intercept)/slope`,
/// with first-order propagation of the measurement and fit uncertainty.
pub fn invert_readout(
    fit: &PiecewiseLinearFit,
    freq: f64,
    freq_sigma: f64,
    segment_hint: Option<usize>,
) -> Result<Readout, CalibrationError> {
    if !freq.is_finite() || !freq_sigma.is_finite() || freq_sigma < 0.0 {
        return Err(CalibrationError::InvalidInput(format!(
            "frequency {freq} ± {freq_sigma} must be finite with sigma >= 0"
        )));
    }
    let contains = |k: usize| {
        let (lo, hi) = fit.segments[k].freq_range();
        let tol = 1e-9 * hi.abs().max(1.0);
        freq >= lo - tol && freq <= hi + tol
    };
    let segment = match segment_hint {
        Some(k) if k >= fit.segments.len() => {
            return Err(CalibrationError::InvalidInput(format!(
                "segment hint {k} but the fit has {} segments",
                fit.segments.len()
            )))
        }
        Some(k) => {
            if !contains(k) {
                return Err(CalibrationError::OutOfRange(freq));
            }
            k
        }
        None => {
            let hits: Vec<usize> = (0..fit.segments.len()).filter(|&k| contains(k)).collect();
            match hits.as_slice() {
                [] => return Err(CalibrationError::OutOfRange(freq)),
                [k] => *k,
                _ => return Err(CalibrationError::Ambiguous { freq, segments: hits }),
            }
        }
    };
    let line = &fit.segments[segment].fit;
    if line.slope.abs() < MIN_READOUT_SLOPE || line.slope.abs() < line.slope_sigma {
        return Err(CalibrationError::Unresolvable { segment, slope: line.slope });
    }
    let value = (freq - line.intercept) / line.slope;
    let var = freq_sigma * freq_sigma
        + line.intercept_sigma * line.intercept_sigma
        + value * value * line.slope_sigma * line.slope_sigma
        + 2.0 * value * line.covariance;
    Ok(Readout { value, sigma: var.max(0.0).sqrt() / line.slope.abs(), segment })
}

/// D and E along a control axis from the xz and yz transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZfsSeries {
    pub unit: String,
    pub control: Vec<f64>,
    pub d: Vec<f64>,
    pub d_sigma: Vec<f64>,
    pub e: Vec<f64>,
    pub e_sigma: Vec<f64>,
}

/// Pointwise `D = (f_xz + f_yz)/2`, `E = (f_xz - f_yz)/2` on the xz control
/// grid; yz values are linearly interpolated where the grids differ, and
/// xz points outside the yz range are dropped.
pub fn zfs_series(xz: &CalibrationSeries, yz: &CalibrationSeries) -> Result<ZfsSeries, CalibrationError> {
    let (cx, cy) = (xz.control(), yz.control());
    let (ylo, yhi) = (cy[0], cy[cy.len() - 1]);
    let mut out = ZfsSeries {
        unit: xz.unit.clone(),
        control: Vec::new(),
        d: Vec::new(),
        d_sigma: Vec::new(),
        e: Vec::new(),
        e_sigma: Vec::new(),
    };
    for (i, &x) in cx.iter().enumerate() {
        if x < ylo || x > yhi {
            continue;
        }
        let j = cy.partition_point(|&c| c < x);
        let (fy, sy) = if cy[j.min(cy.len() - 1)] == x {
            let j = j.min(cy.len() - 1);
            (yz.freq()[j], yz.freq_sigma()[j])
        } else {
            let t = (x - cy[j - 1]) / (cy[j] - cy[j - 1]);
            let lerp = |v: &[f64]| v[j - 1] + t * (v[j] - v[j - 1]);
            (lerp(yz.freq()), lerp(yz.freq_sigma()))
        };
        let (fx, sx) = (xz.freq()[i], xz.freq_sigma()[i]);
        let s = 0.5 * (sx * sx + sy * sy).sqrt();
        out.control.push(x);
        out.d.push(0.5 * (fx + fy));
        out.e.push(0.5 * (fx - fy));
        out.d_sigma.push(s);
        out.e_sigma.push(s);
    }
    if out.control.is_empty() {
        return Err(CalibrationError::InvalidInput(format!(
            "control ranges do not overlap: xz [{}, {}], yz [{ylo}, {yhi}]",
            cx[0],
            cx[cx.len() - 1]
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::segmented_fit;
    use crate::spin::zfs_from_transitions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(x: Vec<f64>, y: Vec<f64>, s: f64) -> CalibrationSeries {
        let n = x.len();
        CalibrationSeries::new(x, y, vec![s; n], "xz", "K").unwrap()
    }

    fn step_fit() -> PiecewiseLinearFit {
        let x: Vec<f64> = (0..20).map(|i| 100.0 + 5.0 * i as f64).collect();
        let y = x.iter().map(|&t| if t < 150.0 { 1450.0 - 0.04 * t } else { 1430.0 - 0.1 * t }).collect();
        segmented_fit(&series(x, y, 0.05), 2).unwrap()
    }

    #[test]
    fn calibration_points_read_back() {
        let fit = step_fit();
        for &t in &[100.0, 125.0, 145.0] {
            let r = invert_readout(&fit, fit.predict(t), 0.0, None).unwrap();
            assert!((r.value - t).abs() < 1e-9);
            assert_eq!(r.segment, 0);
        }
        for &t in &[150.0, 170.0, 195.0] {
            let f = fit.predict(t);
            let back = fit.predict(invert_readout(&fit, f, 0.01, Some(1)).unwrap().value);
            assert!((back - f).abs() < 1e-9);
        }
    }

    #[test]
    fn readout_sigma_includes_measurement() {
        let fit = step_fit();
        let f = fit.predict(120.0);
        let exact = invert_readout(&fit, f, 0.0, Some(0)).unwrap();
        let noisy = invert_readout(&fit, f, 0.02, Some(0)).unwrap();
        assert!(noisy.sigma > exact.sigma);
        assert!(noisy.sigma >= 0.02 / 0.04 * 0.999);
    }

    #[test]
    fn out_of_range_and_flat_segments() {
        let fit = step_fit();
        assert_eq!(invert_readout(&fit, 2000.0, 0.0, None), Err(CalibrationError::OutOfRange(2000.0)));
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let flat = segmented_fit(&series(x, vec![1400.0; 10], 0.05), 1).unwrap();
        assert!(matches!(invert_readout(&flat, 1400.0, 0.0, None), Err(CalibrationError::Unresolvable { .. })));
    }

    #[test]
    fn constant_transitions_give_constant_parameters() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let z =
            zfs_series(&series(x.clone(), vec![1445.0; 6], 0.05), &series(x.clone(), vec![1339.0; 6], 0.05)).unwrap();
        assert!(z.d.iter().all(|d| (d - 1392.0).abs() < 1e-12));
        assert!(z.e.iter().all(|e| (e - 53.0).abs() < 1e-12));
        let same = zfs_series(&series(x.clone(), vec![1400.0; 6], 0.05), &series(x, vec![1400.0; 6], 0.05)).unwrap();
        assert!(same.e.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn agrees_with_pointwise_inverse_map() {
        let x: Vec<f64> = (0..12).map(|i| 80.0 + 20.0 * i as f64).collect();
        let fxz: Vec<f64> = x.iter().map(|t| 1450.0 - 0.05 * t).collect();
        let fyz: Vec<f64> = x.iter().map(|t| 1342.0 - 0.01 * t).collect();
        let z = zfs_series(&series(x.clone(), fxz.clone(), 0.05), &series(x, fyz.clone(), 0.05)).unwrap();
        for i in 0..fxz.len() {
            let (p, _) = zfs_from_transitions(fxz[i], fyz[i], None).unwrap();
            assert!((p.d - z.d[i]).abs() < 1e-12 && (p.e - z.e[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_mismatched_grids_and_rejects_disjoint() {
        let xz = series(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![10.0, 12.0, 14.0, 16.0, 18.0], 0.1);
        let yz = series(vec![1.5, 2.5, 3.5, 4.5], vec![5.0, 6.0, 7.0, 8.0], 0.1);
        let z = zfs_series(&xz, &yz).unwrap();
        assert_eq!(z.control, vec![2.0, 3.0, 4.0]);
        assert!((z.d[0] - 0.5 * (12.0 + 5.5)).abs() < 1e-12);
        let far = series(vec![10.0, 11.0, 12.0, 13.0], vec![1.0; 4], 0.1);
        assert!(zfs_series(&xz, &far).is_err());
    }

    #[test]
    fn sigma_propagation_matches_monte_carlo() {
        let (sx, sy) = (0.08, 0.05);
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (nx, ny) = (Normal::new(0.0, sx).unwrap(), Normal::new(0.0, sy).unwrap());
        let trials = 20_000;
        let mut ds = Vec::with_capacity(trials);
        for _ in 0..trials {
            let a = series(x.clone(), vec![1445.0 + nx.sample(&mut rng); 4], sx);
            let b = series(x.clone(), vec![1339.0 + ny.sample(&mut rng); 4], sy);
            ds.push(zfs_series(&a, &b).unwrap().d[0]);
        }
        let mean = ds.iter().sum::<f64>() / trials as f64;
        let sd = (ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
        let predicted =
            zfs_series(&series(x.clone(), vec![1445.0; 4], sx), &series(x, vec![1339.0; 4], sy)).unwrap().d_sigma[0];
        assert!((sd / predicted - 1.0).abs() < 0.03, "{sd} vs {predicted}");
    }
}
