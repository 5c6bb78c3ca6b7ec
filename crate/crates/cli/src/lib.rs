//! Reproducible pipelines over `odmr-core`: simulate spectra, fit peaks,
//! fit calibration curves, compute orbital-pair ZFS tensors and evaluate
//! sensitivities.
//!
//! Settings come from an optional JSON config (`--config`) and are overridden
//! by flags; the global flags can also be set through `ODMR_CONFIG`,
//! `ODMR_SEED`, `ODMR_THREADS` and `ODMR_OUT`. Exit status is 0 on success,
//! 1 when a computation fails on valid input and 2 for input errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use odmr_core::zfs_dft::Method;

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "odmr", version, about = "Triplet ODMR sensor modeling pipelines")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = "ODMR_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for synthetic noise.
    #[arg(long, global = true, env = "ODMR_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "ODMR_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "ODMR_OUT")]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a zero-field ODMR spectrum.
    Simulate(SimulateArgs),
    /// Fit line models to a spectrum CSV.
    Fit(FitArgs),
    /// Fit a segmented calibration curve and invert readouts.
    Calibrate(CalibrateArgs),
    /// Spin-spin tensor of a HOMO/LUMO pair from cube files.
    Zfs(ZfsArgs),
    /// Noise-limited sensitivity.
    Sensitivity(SensitivityArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long)]
    pub e: Option<f64>,
    /// FWHM, MHz.
    #[arg(long)]
    pub linewidth: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub mw_rate: Option<f64>,
    #[arg(long)]
    pub shape_mix: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Spectrum CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Initial center, MHz; repeatable. Automatic when none are given.
    #[arg(long = "center")]
    pub centers: Vec<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Calibration series CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub max_segments: Option<usize>,
    /// Frequency to invert, MHz; repeatable.
    #[arg(long = "readout")]
    pub readouts: Vec<f64>,
    /// yz series for D(x), E(x); `--input` is then the xz series.
    #[arg(long)]
    pub yz_input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZfsArgs {
    #[arg(long)]
    pub homo: Option<PathBuf>,
    #[arg(long)]
    pub lumo: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Å
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub tri_homo: Option<PathBuf>,
    #[arg(long)]
    pub tri_lumo: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub signal_slope: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub calib_slope: Option<f64>,
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub segment: Option<usize>,
}

impl Cli {
    /// Config file merged with flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.threads, self.threads);
        set(&mut cfg.out, self.out.clone());
        cfg.svg |= self.svg;
        match &self.command {
            Command::Simulate(a) => {
                let s = &mut cfg.simulate;
                over(&mut s.d, a.d);
                over(&mut s.e, a.e);
                over(&mut s.linewidth, a.linewidth);
                over(&mut s.noise_sigma, a.noise);
                over(&mut s.mw_rate, a.mw_rate);
                over(&mut s.shape_mix, a.shape_mix);
            }
            Command::Fit(a) => {
                let f = &mut cfg.fit;
                set(&mut f.input, a.input.clone());
                if !a.centers.is_empty() {
                    f.centers = a.centers.clone();
                    f.guesses.clear();
                }
                over(&mut f.max_iterations, a.max_iterations);
            }
            Command::Calibrate(a) => {
                let c = &mut cfg.calibrate;
                set(&mut c.input, a.input.clone());
                over(&mut c.segments, a.segments);
                set(&mut c.max_segments, a.max_segments);
                if !a.readouts.is_empty() {
                    c.readouts = a
                        .readouts
                        .iter()
                        .map(|&freq| config::ReadoutRequest { freq, sigma: 0.0, segment: None })
                        .collect();
                }
                set(&mut c.yz_input, a.yz_input.clone());
            }
            Command::Zfs(a) => {
                let z = &mut cfg.zfs;
                set(&mut z.homo, a.homo.clone());
                set(&mut z.lumo, a.lumo.clone());
                over(&mut z.method, a.method);
                set(&mut z.cutoff, a.cutoff);
                set(&mut z.tri_homo, a.tri_homo.clone());
                set(&mut z.tri_lumo, a.tri_lumo.clone());
            }
            Command::Sensitivity(a) => {
                let s = &mut cfg.sensitivity;
                set(&mut s.sigma, a.sigma);
                over(&mut s.tau, a.tau);
                set(&mut s.signal_slope, a.signal_slope);
                set(&mut s.calib_slope, a.calib_slope);
                set(&mut s.spectrum, a.spectrum.clone());
                set(&mut s.calibration, a.calibration.clone());
                over(&mut s.segment, a.segment);
            }
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn over<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Output directory; files are created on first write.
pub struct Output {
    dir: PathBuf,
    pub svg: bool,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: impl Into<PathBuf>, svg: bool) -> Self {
        Self { dir: dir.into(), svg, written: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::input(format!("{}: {e}", self.dir.display())))?;
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        self.record(p.clone());
        Ok(p)
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Notes a file written by other means.
    pub fn record(&mut self, p: PathBuf) {
        self.written.push(p);
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let cfg = cli.resolve()?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::input("--threads must be >= 1"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut out = Output::new(cfg.out.clone().unwrap_or_else(|| PathBuf::from("out")), cfg.svg);
    match &cli.command {
        Command::Simulate(_) => commands::simulate::run(&cfg, &mut out)?,
        Command::Fit(_) => commands::fit::run(&cfg, &mut out)?,
        Command::Calibrate(_) => commands::calibrate::run(&cfg, &mut out)?,
        Command::Zfs(_) => commands::zfs::run(&cfg, &mut out)?,
        Command::Sensitivity(_) => commands::sensitivity::run(&cfg, &mut out)?,
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"seed": 3, "simulate": {"d": 1000, "noise_sigma": 0.5}}"#).unwrap();
        let cli =
            Cli::parse_from(["odmr", "--config", path.to_str().unwrap(), "--seed", "9", "simulate", "--noise", "0.1"]);
        let cfg = cli.resolve().unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.simulate.d, 1000.0);
        assert_eq!(cfg.simulate.noise_sigma, 0.1);
    }

    #[test]
    fn readout_flags_replace_config_list() {
        let cli = Cli::parse_from(["odmr", "calibrate", "--readout", "1440", "--readout", "1441.5", "--segments", "2"]);
        let cfg = cli.resolve().unwrap();
        assert_eq!(cfg.calibrate.segments, 2);
        assert_eq!(cfg.calibrate.readouts.iter().map(|r| r.freq).collect::<Vec<_>>(), vec![1440.0, 1441.5]);
    }
}
