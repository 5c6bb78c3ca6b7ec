use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::ZfsError;
use crate::spin::{tensor_to_parameters, ZfsParameters, ZfsTensor};

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// Eigenvalues assigned to the frame axes x, y, z by largest total
/// eigenvector overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledEigenvalues {
    /// MHz, indexed by frame axis.
    pub values: [f64; 3],
    /// Unit eigenvector for each frame axis.
    pub vectors: [[f64; 3]; 3],
    /// Squared projection of each eigenvector on its axis.
    pub overlap: [f64; 3],
}

impl LabeledEigenvalues {
    pub fn of(t: &ZfsTensor) -> Self {
        let eig = SymmetricEigen::new(*t.matrix());
        let v = &eig.eigenvectors;
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        // perm[axis] = eigen index
        let score = |p: &[usize; 3]| (0..3).map(|a| v[(a, p[a])].powi(2)).sum::<f64>();
        let best = perms.iter().fold(perms[0], |b, p| if score(p) > score(&b) { *p } else { b });
        let mut out = Self { values: [0.0; 3], vectors: [[0.0; 3]; 3], overlap: [0.0; 3] };
        for a in 0..3 {
            let e = best[a];
            let sign = if v[(a, e)] < 0.0 { -1.0 } else { 1.0 };
            out.values[a] = eig.eigenvalues[e];
            out.vectors[a] = [v[(0, e)] * sign, v[(1, e)] * sign, v[(2, e)] * sign];
            out.overlap[a] = v[(a, e)].powi(2);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseComparison {
    pub mono: LabeledEigenvalues,
    pub tri: LabeledEigenvalues,
    /// `tri - mono` per frame axis, MHz.
    pub delta: [f64; 3],
    /// `tri - mono` of principal values in canonical `|λ|` order.
    pub canonical_delta: [f64; 3],
    pub mono_zfs: ZfsParameters,
    pub tri_zfs: ZfsParameters,
    /// Frame axis with the largest `|delta|`.
    pub dominant_axis: String,
}

pub fn compare_phases(mono: &ZfsTensor, tri: &ZfsTensor) -> Result<PhaseComparison, ZfsError> {
    let (mono_zfs, mono_axes) = tensor_to_parameters(mono)?;
    let (tri_zfs, tri_axes) = tensor_to_parameters(tri)?;
    let (lm, lt) = (LabeledEigenvalues::of(mono), LabeledEigenvalues::of(tri));
    let delta: [f64; 3] = std::array::from_fn(|a| lt.values[a] - lm.values[a]);
    let canonical_delta = std::array::from_fn(|a| tri_axes.values[a] - mono_axes.values[a]);
    let dominant = (0..3).fold(0, |b, a| if delta[a].abs() > delta[b].abs() { a } else { b });
    Ok(PhaseComparison {
        mono: lm,
        tri: lt,
        delta,
        canonical_delta,
        mono_zfs,
        tri_zfs,
        dominant_axis: AXIS_NAMES[dominant].to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Rotation3, Vector3};

    fn diag(a: f64, b: f64, c: f64) -> ZfsTensor {
        ZfsTensor::new(Matrix3::from_diagonal(&Vector3::new(a, b, c))).unwrap()
    }

    #[test]
    fn identical_tensors() {
        let t = ZfsTensor::from_parameters(ZfsParameters::new(1392.0, 53.0).unwrap());
        let c = compare_phases(&t, &t).unwrap();
        assert_eq!(c.delta, [0.0; 3]);
        assert_eq!(c.canonical_delta, [0.0; 3]);
    }

    #[test]
    fn known_shifts_recovered() {
        let mono = diag(-517.0, -411.0, 928.0);
        let tri = diag(-517.0 + 3.0, -411.0 - 1.0, 928.0 - 2.0);
        let c = compare_phases(&mono, &tri).unwrap();
        for (got, want) in c.delta.iter().zip([3.0, -1.0, -2.0]) {
            assert!((got - want).abs() < 1e-9, "{:?}", c.delta);
        }
        assert_eq!(c.dominant_axis, "x");
        // canonical order: |−411| < |−517| < |928|
        assert!((c.canonical_delta[0] + 1.0).abs() < 1e-9);
        assert!((c.canonical_delta[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn labels_follow_slightly_rotated_axes() {
        let r = Rotation3::from_euler_angles(0.05, -0.03, 0.08);
        let mono = diag(-517.0, -411.0, 928.0).rotated(&r);
        let tri = diag(-510.0, -412.0, 922.0).rotated(&r);
        let c = compare_phases(&mono, &tri).unwrap();
        assert!((c.delta[0] - 7.0).abs() < 1e-9 && (c.delta[2] + 6.0).abs() < 1e-9, "{:?}", c.delta);
        assert!(c.mono.overlap.iter().all(|&o| o > 0.98));
    }
}
