//! Browser bindings for three interactive views: a zero-field spectrum, the
//! kinetics contrast against drive strength, and a segmented calibration fit.
//!
//! Every export returns a JSON string; the `*_json` functions hold the logic
//! and run natively as well.

use odmr_core::calibration::{segmented_fit, CalibrationSeries};
use odmr_core::kinetics::{odmr_contrast, steady_state, KineticsParams, TransitionPair};
use odmr_core::spectra::{synthesize, uniform_grid, LineModel};
use odmr_core::spin::zero_field_transitions;
use odmr_core::{TransitionSet, ZfsParameters};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct SpectrumView {
    transitions: TransitionSet,
    freqs: Vec<f64>,
    signal: Vec<f64>,
}

/// Three zero-field lines of equal contrast on 50 to 1600 MHz.
pub fn spectrum_json(d: f64, e: f64, linewidth: f64, amplitude: f64, noise: f64, seed: u64) -> Result<String, String> {
    let zfs = ZfsParameters::new(d, e).map_err(|e| e.to_string())?;
    if !(linewidth > 0.0) {
        return Err(format!("linewidth must be > 0, got {linewidth}"));
    }
    let t = zero_field_transitions(zfs);
    let lines = [t.f_xy, t.f_yz, t.f_xz]
        .iter()
        .map(|&c| LineModel::symmetric(c, 0.5 * linewidth, amplitude, 0.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let grid = uniform_grid(50.0, 1600.0, 0.25);
    let s = synthesize(&lines, &grid, noise, seed).map_err(|e| e.to_string())?;
    to_json(&SpectrumView { transitions: t, freqs: s.freqs().to_vec(), signal: s.signal().to_vec() })
}

#[derive(Serialize)]
struct ContrastView {
    mw_rate: Vec<f64>,
    xy: Vec<f64>,
    yz: Vec<f64>,
    xz: Vec<f64>,
    /// Undriven Tx, Ty, Tz occupations.
    triplet: [f64; 3],
}

/// Contrast of each pair for drive rates `0..=mw_max` (1/μs), with sublevel
/// lifetimes in μs and x/y ISC branching (z takes the rest).
pub fn contrast_json(
    lifetimes: [f64; 3],
    branch_x: f64,
    branch_y: f64,
    mw_max: f64,
    points: usize,
) -> Result<String, String> {
    if lifetimes.iter().any(|t| !(*t > 0.0)) {
        return Err("lifetimes must be > 0".into());
    }
    if !(mw_max > 0.0) || points < 2 {
        return Err("need mw_max > 0 and at least 2 points".into());
    }
    let p = KineticsParams {
        isc_branching: [branch_x, branch_y, 1.0 - branch_x - branch_y],
        triplet_decay: lifetimes.map(|t| 1.0 / t),
        ..KineticsParams::default()
    };
    p.validate().map_err(|e| e.to_string())?;
    let ss = steady_state(&p).map_err(|e| e.to_string())?;
    let rates: Vec<f64> = (0..points).map(|i| mw_max * i as f64 / (points - 1) as f64).collect();
    let curve = |pair: TransitionPair| -> Result<Vec<f64>, String> {
        rates.iter().map(|&w| odmr_contrast(&p.clone().with_drive(pair, w), pair).map_err(|e| e.to_string())).collect()
    };
    to_json(&ContrastView {
        xy: curve(TransitionPair::Xy)?,
        yz: curve(TransitionPair::Yz)?,
        xz: curve(TransitionPair::Xz)?,
        mw_rate: rates,
        triplet: [ss.tx, ss.ty, ss.tz],
    })
}

#[derive(Serialize)]
struct CalibrationView {
    temperature: Vec<f64>,
    measured: Vec<f64>,
    fitted: Vec<f64>,
    breakpoints: Vec<f64>,
    /// kHz/K
    slopes_khz: Vec<f64>,
    sse: f64,
}

/// Synthetic 77 to 329 K xz series: -40 kHz/K up to 170 K, -247 kHz/K up to
/// 193 K, a 2 MHz step, then -101 kHz/K.
fn temperature_model(t: f64) -> f64 {
    let at170 = 1445.0 - 0.040 * (170.0 - 77.0);
    if t < 170.0 {
        1445.0 - 0.040 * (t - 77.0)
    } else if t < 193.0 {
        at170 - 0.247 * (t - 170.0)
    } else {
        at170 - 0.247 * 23.0 + 2.0 - 0.101 * (t - 193.0)
    }
}

pub fn calibration_json(noise: f64, seed: u64, segments: usize) -> Result<String, String> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    if !(noise > 0.0) {
        return Err("noise must be > 0".into());
    }
    let normal = Normal::new(0.0, noise).map_err(|e| e.to_string())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let temperature: Vec<f64> = (0..=126).map(|i| 77.0 + 2.0 * i as f64).collect();
    let measured: Vec<f64> = temperature.iter().map(|&t| temperature_model(t) + normal.sample(&mut rng)).collect();
    let series =
        CalibrationSeries::new(temperature.clone(), measured.clone(), vec![noise; temperature.len()], "xz", "K")
            .map_err(|e| e.to_string())?;
    let fit = segmented_fit(&series, segments).map_err(|e| e.to_string())?;
    to_json(&CalibrationView {
        fitted: temperature.iter().map(|&t| fit.predict(t)).collect(),
        temperature,
        measured,
        breakpoints: fit.breakpoints.clone(),
        slopes_khz: fit.segments.iter().map(|s| 1e3 * s.fit.slope).collect(),
        sse: fit.sse,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum(d: f64, e: f64, linewidth: f64, amplitude: f64, noise: f64, seed: u32) -> Result<String, JsValue> {
    js(spectrum_json(d, e, linewidth, amplitude, noise, u64::from(seed)))
}

#[wasm_bindgen]
pub fn contrast(
    tx: f64,
    ty: f64,
    tz: f64,
    branch_x: f64,
    branch_y: f64,
    mw_max: f64,
    points: u32,
) -> Result<String, JsValue> {
    js(contrast_json([tx, ty, tz], branch_x, branch_y, mw_max, points as usize))
}

#[wasm_bindgen]
pub fn calibration(noise: f64, seed: u32, segments: u32) -> Result<String, JsValue> {
    js(calibration_json(noise, u64::from(seed), segments as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn spectrum_peaks_at_transitions() {
        let v = parse(&spectrum_json(1392.0, 53.0, 4.3, 0.01, 0.0, 0).unwrap());
        let f: Vec<f64> = serde_json::from_value(v["freqs"].clone()).unwrap();
        let s: Vec<f64> = serde_json::from_value(v["signal"].clone()).unwrap();
        let at = |c: f64| s[f.iter().position(|&x| x == c).unwrap()];
        for c in [106.0, 1339.0, 1445.0] {
            assert!(at(c) > 0.0099, "{c}");
        }
        assert!(spectrum_json(1392.0, 53.0, 0.0, 0.01, 0.0, 0).is_err());
    }

    #[test]
    fn contrast_curves_start_at_zero() {
        let v = parse(&contrast_json([35.0, 166.0, 500.0], 0.76, 0.16, 0.2, 5).unwrap());
        for pair in ["xy", "yz", "xz"] {
            assert_eq!(v[pair][0].as_f64().unwrap(), 0.0);
        }
        assert!(v["xy"][4].as_f64().unwrap() * v["yz"][4].as_f64().unwrap() < 0.0);
        assert!(contrast_json([35.0, 166.0, 500.0], 0.9, 0.2, 0.2, 5).is_err());
    }

    #[test]
    fn calibration_demo_finds_the_step() {
        let v = parse(&calibration_json(0.05, 1, 3).unwrap());
        let bp = v["breakpoints"][1].as_f64().unwrap();
        assert!((bp - 193.0).abs() <= 2.0, "{bp}");
        assert!((v["slopes_khz"][1].as_f64().unwrap() + 247.0).abs() < 0.05 * 247.0);
    }
}
