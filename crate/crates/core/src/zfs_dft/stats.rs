use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{OrbitalGrid, ZfsError};

/// Moments of the normalized density `ρ = |φ|²/∫|φ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalStats {
    /// `∫|φ|² dV` before normalization.
    pub norm: f64,
    /// Å
    pub centroid: [f64; 3],
    /// Per-axis standard deviation of ρ, Å.
    pub spread: [f64; 3],
}

pub fn orbital_stats(g: &OrbitalGrid) -> Result<OrbitalStats, ZfsError> {
    let norm = g.norm_integral();
    if norm <= 0.0 {
        return Err(ZfsError::InvalidInput("orbital has zero norm".into()));
    }
    let total: f64 = g.values().iter().map(|v| v * v).sum();
    let mut c = Vector3::zeros();
    for (idx, v) in g.values().iter().enumerate() {
        c += g.position_of(idx) * (v * v);
    }
    c /= total;
    let mut m2 = Vector3::zeros();
    for (idx, v) in g.values().iter().enumerate() {
        let d = g.position_of(idx) - c;
        m2 += d.component_mul(&d) * (v * v);
    }
    m2 /= total;
    Ok(OrbitalStats {
        norm,
        centroid: [c.x, c.y, c.z],
        spread: [m2.x.max(0.0).sqrt(), m2.y.max(0.0).sqrt(), m2.z.max(0.0).sqrt()],
    })
}

/// `centroid(lumo) - centroid(homo)` in pm.
pub fn homo_lumo_shift(homo: &OrbitalStats, lumo: &OrbitalStats) -> [f64; 3] {
    std::array::from_fn(|a| (lumo.centroid[a] - homo.centroid[a]) * 100.0)
}
