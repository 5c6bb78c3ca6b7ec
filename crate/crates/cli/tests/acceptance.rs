//! End-to-end acceptance checks, one line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use odmr_core::calibration::{io as cal_io, segmented_fit, sensitivity, CalibrationSeries};
use odmr_core::kinetics::{evolve, odmr_contrast, steady_state, KineticsParams, PopulationState, TransitionPair};
use odmr_core::spectra::{fit_peaks, synthesize, windowed_grid, FitOptions, LineModel};
use odmr_core::spin::{zero_field_transitions, zfs_from_transitions};
use odmr_core::zfs_dft::cube::write_cube;
use odmr_core::zfs_dft::{compare_phases, delta_d_estimate, zfs_pair_tensor, Method, OrbitalGrid};
use odmr_core::{PhysicalConstants, ZfsParameters, ZfsTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// 1 -------------------------------------------------------------------------

fn zero_field_transitions_check() -> Outcome {
    let t = zero_field_transitions(ZfsParameters::new(1392.0, 53.0).unwrap());
    let err = rel(t.f_xy, 106.0).max(rel(t.f_yz, 1339.0)).max(rel(t.f_xz, 1445.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(100.0..3000.0);
        let e = rng.random_range(0.0..d / 3.0);
        let t = zero_field_transitions(ZfsParameters::new(d, e).unwrap());
        worst = worst.max(t.closure_residual().abs() / t.f_xz);
    }
    outcome(
        err <= 1e-9 && worst <= 1e-9,
        format!("(106, 1339, 1445) max rel err {err:.1e}; closure over 1000 random (D,E) max rel {worst:.1e}"),
    )
}

// 2 -------------------------------------------------------------------------

fn random_params(rng: &mut ChaCha8Rng) -> KineticsParams {
    let w: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
    let s: f64 = w.iter().sum();
    KineticsParams {
        pump_rate: rng.random_range(0.005..0.2),
        radiative_rate: rng.random_range(0.01..0.5),
        isc_rate: rng.random_range(0.01..0.5),
        isc_branching: [w[0] / s, w[1] / s, 1.0 - w[0] / s - w[1] / s],
        triplet_decay: std::array::from_fn(|_| rng.random_range(1.0 / 500.0..1.0 / 20.0)),
        mw_rate: rng.random_range(0.0..0.2),
        mw_pair: TransitionPair::ALL[rng.random_range(0..3)],
    }
}

fn kinetics_check() -> Outcome {
    let p = KineticsParams::default();
    let lifetimes: Vec<f64> = p.triplet_decay.iter().map(|k| 1.0 / k).collect();
    assert_eq!(p.isc_branching, [0.76, 0.16, 0.08]);
    let ss = steady_state(&p).unwrap();
    let driven = p.with_drive(TransitionPair::Xy, 0.1);
    let xy = odmr_contrast(&driven, TransitionPair::Xy).unwrap();
    let yz = odmr_contrast(&driven, TransitionPair::Yz).unwrap();
    let mut conserve = (ss.total() - 1.0).abs();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let q = random_params(&mut rng);
        let s = steady_state(&q).unwrap();
        let late = evolve(&q, &PopulationState::ground(), 1e4).unwrap();
        conserve = conserve.max((s.total() - 1.0).abs()).max((late.total() - 1.0).abs());
        worst = worst.max((late.to_vector() - s.to_vector()).abs().max());
    }
    let pass = ss.tz > ss.ty && xy.signum() != yz.signum() && conserve <= 1e-10 && worst <= 1e-8;
    outcome(
        pass,
        format!(
            "lifetimes {lifetimes:.0?} us: n_z {:.3e} > n_y {:.3e}; contrast xy {xy:+.2e}, yz {yz:+.2e}; \
             conservation {conserve:.1e}; steady vs t=1e4 us max {worst:.1e}",
            ss.tz, ss.ty
        ),
    )
}

// 3 -------------------------------------------------------------------------

fn spectrum_round_trip() -> Outcome {
    const AMPLITUDE: f64 = 0.01;
    let t = zero_field_transitions(ZfsParameters::new(1392.0, 53.0).unwrap());
    // l0 = 4.3 MHz FWHM.
    let lines: Vec<LineModel> =
        [t.f_xy, t.f_yz, t.f_xz].iter().map(|&c| LineModel::symmetric(c, 2.15, AMPLITUDE, 0.0).unwrap()).collect();
    let grid = windowed_grid(&[t.f_xy, t.f_yz, t.f_xz], 15.0, 0.025);
    let (mut hits, mut zfs_ok, mut worst) = (0, 0, 0.0f64);
    for seed in 0..100 {
        let s = synthesize(&lines, &grid, 0.1 * AMPLITUDE, seed).unwrap();
        let Ok(rep) = fit_peaks(&s, &[], &FitOptions::default()) else { continue };
        if rep.peaks.len() != 3 {
            continue;
        }
        let err = rep.peaks.iter().zip(&lines).map(|(p, l)| (p.center - l.center).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
        if err <= 0.2 {
            hits += 1;
        }
        let (z, _) = zfs_from_transitions(rep.peaks[2].center, rep.peaks[1].center, Some(rep.peaks[0].center)).unwrap();
        if (z.d - 1392.0).abs() <= 0.3 && (z.e - 53.0).abs() <= 0.3 {
            zfs_ok += 1;
        }
    }
    outcome(
        hits >= 95 && zfs_ok == 100,
        format!("centers within 0.2 MHz in {hits}/100 (worst {worst:.3} MHz); (D,E) within 0.3 MHz in {zfs_ok}/100"),
    )
}

// 4 -------------------------------------------------------------------------

fn noisy_series(x: &[f64], f: impl Fn(f64) -> f64, sigma: f64, unit: &str, rng: &mut ChaCha8Rng) -> CalibrationSeries {
    let y: Vec<f64> =
        x.iter().map(|&v| f(v) + sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect();
    CalibrationSeries::new(x.to_vec(), y, vec![sigma; x.len()], "xz", unit).unwrap()
}

/// Three regions: -40 kHz/K to 170 K, -247 kHz/K to 193 K, then a +2 MHz
/// step and -101 kHz/K.
fn temperature_model(t: f64) -> f64 {
    let at170 = 1445.0 - 0.040 * (170.0 - 77.0);
    if t < 170.0 {
        1445.0 - 0.040 * (t - 77.0)
    } else if t < 193.0 {
        at170 - 0.247 * (t - 170.0)
    } else {
        at170 - 0.247 * (193.0 - 170.0) + 2.0 - 0.101 * (t - 193.0)
    }
}

fn pressure_model(p: f64) -> f64 {
    if p < 2.0 {
        1445.0 + 1.8 * (p - 1.0)
    } else {
        1446.8 + 0.35 * (p - 2.0)
    }
}

fn calibration_check() -> Outcome {
    let temps: Vec<f64> = (0..=126).map(|i| 77.0 + 2.0 * i as f64).collect();
    let slopes = [-0.040, -0.247, -0.101];
    let mut rng = ChaCha8Rng::seed_from_u64(193);
    let (mut t_hits, mut monotone) = (0, true);
    for _ in 0..100 {
        let s = noisy_series(&temps, temperature_model, 0.05, "K", &mut rng);
        let fit = segmented_fit(&s, 3).unwrap();
        let bp_ok = (fit.breakpoints[1] - 193.0).abs() <= 2.0 && (fit.breakpoints[0] - 170.0).abs() <= 2.0;
        let slope_ok = fit.segments.iter().zip(slopes).all(|(g, w)| rel(g.fit.slope, w) <= 0.05);
        if bp_ok && slope_ok {
            t_hits += 1;
        }
        let sse: Vec<f64> = (1..=5).map(|k| segmented_fit(&s, k).unwrap().sse).collect();
        monotone &= sse.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    }
    let pressures: Vec<f64> = (0..=60).map(|i| 1.0 + 0.05 * i as f64).collect();
    let mut p_hits = 0;
    for _ in 0..100 {
        let s = noisy_series(&pressures, pressure_model, 0.02, "bar", &mut rng);
        let fit = segmented_fit(&s, 2).unwrap();
        if rel(fit.segments[0].fit.slope, 1.8) <= 0.05 && rel(fit.segments[1].fit.slope, 0.35) <= 0.05 {
            p_hits += 1;
        }
    }
    outcome(
        t_hits >= 90 && p_hits >= 90 && monotone,
        format!(
            "temperature (noise 0.05 MHz): breakpoints and slopes in tolerance {t_hits}/100, SSE monotone {monotone}; \
             pressure (noise 0.02 MHz): slopes within 5% {p_hits}/100"
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn gaussian(center: Vector3<f64>, w: f64) -> impl Fn(Vector3<f64>) -> f64 {
    move |r| (-(r - center).norm_squared() / (2.0 * w * w)).exp()
}

fn separated_pair(n: usize, step: f64, w: f64, d: f64) -> (OrbitalGrid, OrbitalGrid) {
    let g = |z: f64| {
        OrbitalGrid::sample(Vector3::zeros(), [n, n, n], step, gaussian(Vector3::new(0.0, 0.0, z), w)).unwrap()
    };
    (g(-d / 2.0), g(d / 2.0))
}

fn point_dipole(d: f64) -> Matrix3<f64> {
    let c = PhysicalConstants::default().pair_tensor_prefactor() / d.powi(3);
    Matrix3::from_diagonal(&Vector3::new(c, c, -2.0 * c))
}

fn zfs_oracle_check() -> Outcome {
    let d = 10.0;
    let (a, b) = separated_pair(48, 0.35, 0.7, d);
    let t = zfs_pair_tensor(&a, &b, Method::Convolution, None).unwrap();
    let m = t.matrix();
    let mut got: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    let mut want: Vec<f64> = point_dipole(d).diagonal().iter().copied().collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    let eig = got.iter().zip(&want).map(|(g, w)| rel(*g, *w)).fold(0.0, f64::max);
    let sym = (m - m.transpose()).norm() / m.norm();
    let trace = m.trace().abs() / m.norm();

    let dims = [16, 16, 16];
    let ha = OrbitalGrid::sample(Vector3::zeros(), dims, 0.5, gaussian(Vector3::new(0.3, 0.0, -1.0), 1.0)).unwrap();
    let g = gaussian(Vector3::new(0.0, 0.2, 1.0), 1.2);
    let hb = OrbitalGrid::sample(Vector3::zeros(), dims, 0.5, move |r| r.x * g(r)).unwrap();
    let direct = zfs_pair_tensor(&ha, &hb, Method::Direct, None).unwrap();
    let conv = zfs_pair_tensor(&ha, &hb, Method::Convolution, None).unwrap();
    let agree = (conv.matrix() - direct.matrix()).norm() / direct.matrix().norm();

    let ladder: Vec<f64> = [(24, 0.7, 1.4), (34, 0.5, 1.0), (48, 0.35, 0.7)]
        .iter()
        .map(|&(n, h, w)| {
            let (a, b) = separated_pair(n, h, w, d);
            let t = zfs_pair_tensor(&a, &b, Method::Convolution, None).unwrap();
            (t.matrix() - point_dipole(d)).norm() / point_dipole(d).norm()
        })
        .collect();
    let monotone = ladder.windows(2).all(|w| w[1] < w[0]);
    outcome(
        eig <= 0.02 && sym <= 1e-6 && trace <= 1e-6 && agree <= 1e-6 && monotone,
        format!(
            "48^3 pair eigenvalues max rel {eig:.1e}, asym {sym:.1e}, trace {trace:.1e}; \
             direct vs convolution {agree:.1e}; ladder [{}]",
            ladder.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn anisotropic(center: Vector3<f64>, s: [f64; 3]) -> impl Fn(Vector3<f64>) -> f64 {
    move |r| {
        let d = r - center;
        (-(d.x * d.x / (2.0 * s[0] * s[0]) + d.y * d.y / (2.0 * s[1] * s[1]) + d.z * d.z / (2.0 * s[2] * s[2]))).exp()
    }
}

/// HOMO: Gaussian elongated along x; LUMO: the same envelope times `(x - c)`.
fn phase_pair(homo_sx: f64, lumo_sx: f64, lumo_shift: f64) -> ZfsTensor {
    let dims = [64, 32, 24];
    let homo =
        OrbitalGrid::sample(Vector3::zeros(), dims, 0.35, anisotropic(Vector3::zeros(), [homo_sx, 1.2, 0.9])).unwrap();
    let c = Vector3::new(lumo_shift, 0.0, 0.0);
    let g = anisotropic(c, [lumo_sx, 1.2, 0.9]);
    let lumo = OrbitalGrid::sample(Vector3::zeros(), dims, 0.35, move |r| (r.x - c.x) * g(r)).unwrap();
    zfs_pair_tensor(&homo, &lumo, Method::Convolution, None).unwrap()
}

fn phase_check() -> Outcome {
    // 3 pm spreads and a 3 pm LUMO offset.
    let c = compare_phases(&phase_pair(2.5, 2.5, 0.0), &phase_pair(2.53, 2.48, 0.03)).unwrap();
    let largest = c.delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    outcome(
        c.dominant_axis == "x" && (4.0 / 3.0..=12.0).contains(&largest),
        format!(
            "delta (x, y, z) = {:.3?} MHz; dominant {}; |max| {largest:.2} MHz vs the 4 MHz factor-of-3 band",
            c.delta, c.dominant_axis
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn delta_d_check() -> Outcome {
    let v = delta_d_estimate(4.0, 3.7).unwrap();
    outcome((0.3..=10.0).contains(&v), format!("delta_d_estimate(4 pm, 3.7 Å) = {v:.4} MHz"))
}

// 8 -------------------------------------------------------------------------

fn sensitivity_check() -> Outcome {
    let scenarios = [
        ("pressure", (2.52e-4, 1.0, 2e-3, 1.8), 0.07),
        ("temperature", (1e-4, 1.0, 1e-3, 0.247), 0.404_858_299_595_141_7),
        ("short-window", (2e-4, 0.25, 5e-4, 0.101), 1.980_198_019_801_980_2),
    ];
    let mut exact = true;
    let mut parts = Vec::new();
    for (name, (s, t, a, b), want) in scenarios {
        let eta = sensitivity(s, t, a, b).unwrap().eta;
        exact &= rel(eta, want) <= 4.0 * f64::EPSILON;
        parts.push(format!("{name} {eta}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut homogeneous = true;
    for _ in 0..1000 {
        let (s, t, a, b) = (
            rng.random_range(1e-6..1e-2),
            rng.random_range(0.01..100.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-5.0..5.0),
        );
        let k: f64 = rng.random_range(0.1..10.0);
        let base = sensitivity(s, t, a, b).unwrap().eta;
        let checks = [
            (sensitivity(k * s, t, a, b).unwrap().eta, k * base),
            (sensitivity(s, k * t, a, b).unwrap().eta, k.sqrt() * base),
            (sensitivity(s, t, k * a, b).unwrap().eta, base / k),
            (sensitivity(s, t, a, -k * b).unwrap().eta, base / k),
        ];
        homogeneous &= checks.iter().all(|(g, w)| rel(*g, *w) <= 1e-12);
    }
    outcome(exact && homogeneous, format!("{}; homogeneity on 1000 random inputs {homogeneous}", parts.join(", ")))
}

// 9 -------------------------------------------------------------------------

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
    }
    out
}

fn odmr(args: &[String]) -> bool {
    let o = Command::new(env!("CARGO_BIN_EXE_odmr"))
        .args(args)
        .env_remove("ODMR_SEED")
        .env_remove("ODMR_OUT")
        .output()
        .unwrap();
    if !o.status.success() {
        eprintln!("odmr {args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    o.status.success()
}

fn pipelines(inputs: &Path, out: &Path, threads: usize) -> bool {
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    let base = |sub: &str| {
        vec!["--threads".to_owned(), threads.to_string(), "--svg".to_owned(), "--out".to_owned(), s(out.join(sub))]
    };
    let mut ok = true;
    let mut sim = base("sim");
    sim.extend(["--seed", "7", "--config", &s(inputs.join("run.json")), "simulate"].map(String::from));
    ok &= odmr(&sim);
    let mut fit = base("fit");
    fit.extend(["fit".to_owned(), "--input".to_owned(), s(out.join("sim/spectrum.csv"))]);
    ok &= odmr(&fit);
    let mut cal = base("cal");
    cal.extend(
        [
            "calibrate",
            "--input",
            &s(inputs.join("temperature.csv")),
            "--segments",
            "3",
            "--max-segments",
            "5",
            "--readout",
            "1440",
            "--readout",
            "1420",
        ]
        .map(String::from),
    );
    ok &= odmr(&cal);
    for method in ["convolution", "direct"] {
        let mut z = base(&format!("zfs_{method}"));
        z.extend(
            [
                "zfs",
                "--method",
                method,
                "--homo",
                &s(inputs.join("h.cube")),
                "--lumo",
                &s(inputs.join("l.cube")),
                "--tri-homo",
                &s(inputs.join("th.cube")),
                "--tri-lumo",
                &s(inputs.join("tl.cube")),
            ]
            .map(String::from),
        );
        ok &= odmr(&z);
    }
    let mut sens = base("sens");
    sens.extend(
        [
            "sensitivity",
            "--sigma",
            "1e-4",
            "--spectrum",
            &s(out.join("sim/spectrum.csv")),
            "--calibration",
            &s(out.join("cal/calibration.json")),
        ]
        .map(String::from),
    );
    ok &= odmr(&sens);
    ok
}

fn determinism_check() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    fs::create_dir_all(&inputs).unwrap();
    fs::write(inputs.join("run.json"), r#"{"simulate": {"amplitudes": [0.01, 0.01, 0.01], "noise_sigma": 0.001}}"#)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let temps: Vec<f64> = (0..=126).map(|i| 77.0 + 2.0 * i as f64).collect();
    cal_io::write_series(
        &noisy_series(&temps, temperature_model, 0.05, "K", &mut rng),
        &inputs.join("temperature.csv"),
    )
    .unwrap();
    let dims = [14, 12, 16];
    let cube = |name: &str, f: &dyn Fn(Vector3<f64>) -> f64| {
        let g = OrbitalGrid::sample(Vector3::zeros(), dims, 0.45, f).unwrap();
        write_cube(&g, &inputs.join(name), name).unwrap();
    };
    let homo = anisotropic(Vector3::new(0.1, 0.0, 0.0), [1.6, 1.1, 0.9]);
    cube("h.cube", &homo);
    let lumo_env = anisotropic(Vector3::zeros(), [1.5, 1.1, 0.9]);
    cube("l.cube", &|r| r.x * lumo_env(r));
    let tri_homo = anisotropic(Vector3::new(0.13, 0.0, 0.0), [1.63, 1.1, 0.9]);
    cube("th.cube", &tri_homo);
    cube("tl.cube", &|r| r.x * lumo_env(r - Vector3::new(0.02, 0.0, 0.0)));

    let runs = [("t1", 1), ("t4", 4), ("t1_again", 1), ("t3", 3)];
    let mut trees = Vec::new();
    // Every run writes to the same path (outputs embed their input paths)
    // and is moved aside afterwards.
    let work = dir.path().join("run");
    for (name, threads) in runs {
        if !pipelines(&inputs, &work, threads) {
            return outcome(false, format!("pipeline run {name} failed"));
        }
        let out = dir.path().join(name);
        fs::rename(&work, &out).unwrap();
        let mut all = BTreeMap::new();
        for sub in fs::read_dir(&out).unwrap() {
            let sub = sub.unwrap().path();
            for (k, v) in read_tree(&sub) {
                all.insert(format!("{}/{k}", sub.file_name().unwrap().to_string_lossy()), v);
            }
        }
        trees.push(all);
    }
    let files = trees[0].len();
    let identical = trees.iter().all(|t| t == &trees[0]);
    outcome(
        identical && files >= 20,
        format!("{files} files from simulate/fit/calibrate/zfs x2/sensitivity identical across runs with --threads 1, 4, 1, 3: {identical}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("zero-field transitions", Duration::from_secs(1), zero_field_transitions_check),
        ("kinetics sign structure", Duration::from_secs(5), kinetics_check),
        ("spectrum round trip", Duration::from_secs(30), spectrum_round_trip),
        ("calibration recovery", Duration::from_secs(60), calibration_check),
        ("ZFS integrator oracle", Duration::from_secs(300), zfs_oracle_check),
        ("phase-comparison scale", Duration::from_secs(120), phase_check),
        ("delta D estimate", Duration::from_secs(1), delta_d_check),
        ("sensitivity arithmetic", Duration::from_secs(1), sensitivity_check),
        ("determinism", Duration::from_secs(300), determinism_check),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let dt = start.elapsed();
        let pass = o.pass && dt <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {} [{name}] {:.2} s (budget {} s): {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
