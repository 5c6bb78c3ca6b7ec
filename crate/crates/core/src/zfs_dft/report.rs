//! JSON and CSV reports for orbital-pair tensors.

use serde::{Deserialize, Serialize};

use super::{
    homo_lumo_shift, orbital_stats, zfs_pair_tensor, LabeledEigenvalues, Method, OrbitalGrid, OrbitalStats,
    PhaseComparison, ZfsError,
};
use crate::spin::{tensor_to_parameters, ZfsParameters, ZfsTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub method: Method,
    /// Å
    pub cutoff: f64,
    /// MHz, row-major.
    pub tensor: [[f64; 3]; 3],
    /// Canonical principal values, `|λx| <= |λy| <= |λz|`.
    pub principal_values: [f64; 3],
    /// Canonical principal axes; `principal_axes[i]` belongs to `principal_values[i]`.
    pub principal_axes: [[f64; 3]; 3],
    pub zfs: ZfsParameters,
    pub frame: LabeledEigenvalues,
    pub homo: OrbitalStats,
    pub lumo: OrbitalStats,
    /// LUMO minus HOMO centroid, pm.
    pub shift_pm: [f64; 3],
}

impl PairReport {
    pub fn tensor(&self) -> Result<ZfsTensor, ZfsError> {
        Ok(ZfsTensor::new(nalgebra::Matrix3::from_fn(|i, j| self.tensor[i][j]))?)
    }
}

pub fn pair_report(
    homo: &OrbitalGrid,
    lumo: &OrbitalGrid,
    method: Method,
    cutoff: Option<f64>,
) -> Result<PairReport, ZfsError> {
    let t = zfs_pair_tensor(homo, lumo, method, cutoff)?;
    let (zfs, axes) = tensor_to_parameters(&t)?;
    let (hs, ls) = (orbital_stats(homo)?, orbital_stats(lumo)?);
    Ok(PairReport {
        method,
        cutoff: cutoff.unwrap_or(homo.min_step()),
        tensor: t.to_rows(),
        principal_values: axes.values,
        principal_axes: std::array::from_fn(|i| {
            let v = axes.axis(i);
            [v.x, v.y, v.z]
        }),
        zfs,
        frame: LabeledEigenvalues::of(&t),
        homo: hs,
        lumo: ls,
        shift_pm: homo_lumo_shift(&hs, &ls),
    })
}

pub const EIGEN_HEADER: &str = "axis,eigenvalue_mhz,vx,vy,vz,overlap";

pub fn eigen_csv(labels: &LabeledEigenvalues) -> String {
    let mut out = format!("{EIGEN_HEADER}\n");
    for (a, name) in ["x", "y", "z"].iter().enumerate() {
        let v = labels.vectors[a];
        out.push_str(&format!("{name},{},{},{},{},{}\n", labels.values[a], v[0], v[1], v[2], labels.overlap[a]));
    }
    out
}

pub const PHASE_HEADER: &str = "axis,mono_mhz,tri_mhz,delta_mhz";

pub fn phase_csv(c: &PhaseComparison) -> String {
    let mut out = format!("{PHASE_HEADER}\n");
    for (a, name) in ["x", "y", "z"].iter().enumerate() {
        out.push_str(&format!("{name},{},{},{}\n", c.mono.values[a], c.tri.values[a], c.delta[a]));
    }
    out
}
