use odmr_core::zfs_dft::compare_phases;
use odmr_core::zfs_dft::cube::load_cube;
use odmr_core::zfs_dft::report::{eigen_csv, pair_report, phase_csv};

use super::required;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::Output;

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let z = &cfg.zfs;
    let homo_path = required(&z.homo, "HOMO cube (--homo)")?;
    let lumo_path = required(&z.lumo, "LUMO cube (--lumo)")?;
    let tri = match (&z.tri_homo, &z.tri_lumo) {
        (Some(h), Some(l)) => Some((h.as_path(), l.as_path())),
        (None, None) => None,
        _ => return Err(CliError::input("tri_homo and tri_lumo must be given together")),
    };
    if let Some(c) = z.cutoff {
        if !c.is_finite() || c <= 0.0 {
            return Err(CliError::input(format!("cutoff must be > 0, got {c}")));
        }
    }
    let load = |p: &std::path::Path| load_cube(p).map_err(CliError::from);
    let (homo, lumo) = (load(homo_path)?, load(lumo_path)?);
    let tri_grids = tri.map(|(h, l)| Ok::<_, CliError>((load(h)?, load(l)?))).transpose()?;

    let mono = pair_report(&homo, &lumo, z.method, z.cutoff)?;
    out.write_json("zfs.json", &mono)?;
    out.write("eigen.csv", &eigen_csv(&mono.frame))?;
    if let Some((th, tl)) = tri_grids {
        let tri = pair_report(&th, &tl, z.method, z.cutoff)?;
        out.write_json("zfs_tri.json", &tri)?;
        out.write("eigen_tri.csv", &eigen_csv(&tri.frame))?;
        let cmp = compare_phases(&mono.tensor()?, &tri.tensor()?)?;
        out.write_json("phases.json", &cmp)?;
        out.write("phases.csv", &phase_csv(&cmp))?;
    }
    Ok(())
}
