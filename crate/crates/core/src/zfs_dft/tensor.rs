use nalgebra::{Matrix3, Vector3};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft3::Fft3;
use super::{map_chunks, OrbitalGrid, ZfsError};
use crate::constants::CODATA_2018;
use crate::spin::ZfsTensor;

/// Lattice-sum evaluation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// O(N²) double sum.
    Direct,
    /// Zero-padded FFT correlation of the same kernel samples.
    #[default]
    Convolution,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(Method::Direct),
            "convolution" => Ok(Method::Convolution),
            other => Err(format!("unknown method `{other}` (expected direct or convolution)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Convolution => "convolution",
        })
    }
}

// Component order of the packed symmetric kernel.
const COMPONENTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// `(r²δ_ab - 3 r_a r_b)/r⁵` on every lattice displacement, zero where
/// `|r| < cutoff`.
struct KernelTable {
    /// Extent per axis: displacement `d_a` in `-(n_a-1)..=(n_a-1)`.
    dims: [usize; 3],
    values: Vec<[f64; 6]>,
}

impl KernelTable {
    fn new(grid: &OrbitalGrid, cutoff: f64) -> Self {
        let n = grid.dims();
        let dims = n.map(|v| 2 * v - 1);
        let at = grid.axes().transpose();
        let cut2 = cutoff * cutoff * (1.0 - 1e-9);
        let mut values = Vec::with_capacity(dims.iter().product());
        for di in 0..dims[0] {
            for dj in 0..dims[1] {
                for dk in 0..dims[2] {
                    let d = Vector3::new(
                        di as f64 - (n[0] - 1) as f64,
                        dj as f64 - (n[1] - 1) as f64,
                        dk as f64 - (n[2] - 1) as f64,
                    );
                    values.push(kernel(&(at * d), cut2));
                }
            }
        }
        Self { dims, values }
    }

    fn get(&self, n: [usize; 3], d: [isize; 3]) -> &[f64; 6] {
        let i = (d[0] + n[0] as isize - 1) as usize;
        let j = (d[1] + n[1] as isize - 1) as usize;
        let k = (d[2] + n[2] as isize - 1) as usize;
        &self.values[(i * self.dims[1] + j) * self.dims[2] + k]
    }
}

fn kernel(r: &Vector3<f64>, cut2: f64) -> [f64; 6] {
    let r2 = r.norm_squared();
    if r2 < cut2 || r2 == 0.0 {
        return [0.0; 6];
    }
    let inv5 = (r2 * r2 * r2.sqrt()).recip();
    COMPONENTS.map(|(a, b)| (if a == b { r2 } else { 0.0 } - 3.0 * r[a] * r[b]) * inv5)
}

/// Spin-spin tensor (MHz) of the triplet built from real orbitals `phi_i`
/// and `phi_j`: `½(μ0/4π)(g_e μ_B)²/h · (direct - exchange)` with the
/// dipolar kernel, both orbitals normalized to `∫φ² dV = 1`.
///
/// Displacements shorter than `cutoff` (default: the shortest grid step)
/// are dropped from the lattice sum.
pub fn zfs_pair_tensor(
    phi_i: &OrbitalGrid,
    phi_j: &OrbitalGrid,
    method: Method,
    cutoff: Option<f64>,
) -> Result<ZfsTensor, ZfsError> {
    phi_i.check_commensurate(phi_j)?;
    let step = phi_i.min_step();
    let cutoff = cutoff.unwrap_or(step);
    if !cutoff.is_finite() || cutoff < step * (1.0 - 1e-9) {
        return Err(ZfsError::Cutoff { cutoff, step });
    }
    let a = phi_i.normalized()?;
    let b = phi_j.normalized()?;
    let rho_i: Vec<f64> = a.values().iter().map(|v| v * v).collect();
    let rho_j: Vec<f64> = b.values().iter().map(|v| v * v).collect();
    let pair: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x * y).collect();

    let table = KernelTable::new(phi_i, cutoff);
    let sums = match method {
        Method::Direct => direct_sum(phi_i.dims(), &table, &rho_i, &rho_j, &pair),
        Method::Convolution => fft_sum(phi_i.dims(), &table, &rho_i, &rho_j, &pair),
    };
    let dv = phi_i.voxel_volume();
    let scale = CODATA_2018.pair_tensor_prefactor() * dv * dv;
    let mut m = Matrix3::zeros();
    for (c, &(p, q)) in COMPONENTS.iter().enumerate() {
        m[(p, q)] = sums[c] * scale;
        m[(q, p)] = sums[c] * scale;
    }
    Ok(ZfsTensor::new(m)?)
}

fn direct_sum(n: [usize; 3], table: &KernelTable, rho_i: &[f64], rho_j: &[f64], pair: &[f64]) -> [f64; 6] {
    let total = rho_i.len();
    let idx: Vec<usize> = (0..total).collect();
    let coords = |p: usize| [(p / (n[1] * n[2])) as isize, ((p / n[2]) % n[1]) as isize, (p % n[2]) as isize];
    let partials = map_chunks(&idx, 64, |_, chunk| {
        let mut acc = [0.0; 6];
        for &p in chunk {
            if rho_i[p] == 0.0 && pair[p] == 0.0 {
                continue;
            }
            let c1 = coords(p);
            for q in 0..total {
                let w = rho_i[p] * rho_j[q] - pair[p] * pair[q];
                if w == 0.0 {
                    continue;
                }
                let c2 = coords(q);
                let k = table.get(n, [c1[0] - c2[0], c1[1] - c2[1], c1[2] - c2[2]]);
                for c in 0..6 {
                    acc[c] += w * k[c];
                }
            }
        }
        acc
    });
    sum_partials(&partials)
}

fn fft_sum(n: [usize; 3], table: &KernelTable, rho_i: &[f64], rho_j: &[f64], pair: &[f64]) -> [f64; 6] {
    let m = n.map(|v| 2 * v);
    let len = m[0] * m[1] * m[2];
    let fft = Fft3::new(m);
    let pad = |src: &[f64]| {
        let mut out = vec![Complex64::default(); len];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    out[(i * m[1] + j) * m[2] + k].re = src[(i * n[1] + j) * n[2] + k];
                }
            }
        }
        fft.forward(&mut out);
        out
    };
    let (fa, fb, fx) = (pad(rho_i), pad(rho_j), pad(pair));
    // Re[conj(Â)·B̂ - |X̂|²]; the kernel transform is real because the
    // kernel is even.
    let weight: Vec<f64> = (0..len).map(|t| (fa[t].conj() * fb[t]).re - fx[t].norm_sqr()).collect();
    drop((fa, fb, fx));

    let mut out = [0.0; 6];
    // Two real kernel components per complex transform.
    for pass in 0..3 {
        let (c0, c1) = (2 * pass, 2 * pass + 1);
        let mut kern = vec![Complex64::default(); len];
        for di in -(n[0] as isize - 1)..n[0] as isize {
            for dj in -(n[1] as isize - 1)..n[1] as isize {
                for dk in -(n[2] as isize - 1)..n[2] as isize {
                    let wrap = |d: isize, size: usize| d.rem_euclid(size as isize) as usize;
                    let t = (wrap(di, m[0]) * m[1] + wrap(dj, m[1])) * m[2] + wrap(dk, m[2]);
                    let k = table.get(n, [di, dj, dk]);
                    kern[t] = Complex64::new(k[c0], k[c1]);
                }
            }
        }
        fft.forward(&mut kern);
        let partials = map_chunks(&kern, 4096, |b, chunk| {
            let off = b * 4096;
            chunk.iter().enumerate().fold([0.0; 2], |acc, (t, z)| {
                let w = weight[off + t];
                [acc[0] + z.re * w, acc[1] + z.im * w]
            })
        });
        let (mut s0, mut s1) = (0.0, 0.0);
        for p in &partials {
            s0 += p[0];
            s1 += p[1];
        }
        out[c0] = s0 / len as f64;
        out[c1] = s1 / len as f64;
    }
    out
}

fn sum_partials(partials: &[[f64; 6]]) -> [f64; 6] {
    partials.iter().fold([0.0; 6], |mut acc, p| {
        for c in 0..6 {
            acc[c] += p[c];
        }
        acc
    })
}

/// `ΔD ≈ ½(μ0/4π)(g_e μ_B)²/h · Δr/r⁴` in MHz for a centroid change `Δr`
/// (pm) at electron separation `r` (Å).
pub fn delta_d_estimate(delta_r_pm: f64, r_angstrom: f64) -> Result<f64, ZfsError> {
    if !(r_angstrom > 0.0) || !r_angstrom.is_finite() || !delta_r_pm.is_finite() {
        return Err(ZfsError::InvalidInput(format!(
            "need finite Δr and r > 0, got Δr = {delta_r_pm} pm, r = {r_angstrom} Å"
        )));
    }
    Ok(CODATA_2018.pair_tensor_prefactor() * (delta_r_pm * 0.01) / r_angstrom.powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(center: Vector3<f64>, w: f64) -> impl Fn(Vector3<f64>) -> f64 {
        move |r| (-(r - center).norm_squared() / (2.0 * w * w)).exp()
    }

    #[test]
    fn kernel_is_traceless_and_even() {
        let r = Vector3::new(0.3, -1.2, 2.1);
        let k = kernel(&r, 0.0);
        assert!((k[0] + k[1] + k[2]).abs() < 1e-15);
        assert_eq!(k, kernel(&-r, 0.0));
        assert_eq!(kernel(&r, r.norm_squared() * 1.01), [0.0; 6]);
    }

    #[test]
    fn cutoff_below_step_rejected() {
        let g = OrbitalGrid::sample(Vector3::zeros(), [4, 4, 4], 0.5, gauss(Vector3::zeros(), 1.0)).unwrap();
        assert!(matches!(zfs_pair_tensor(&g, &g, Method::Direct, Some(0.2)), Err(ZfsError::Cutoff { .. })));
        assert!(zfs_pair_tensor(&g, &g, Method::Direct, Some(0.5)).is_ok());
    }

    #[test]
    fn paths_agree_on_small_grid() {
        let a =
            OrbitalGrid::sample(Vector3::zeros(), [7, 6, 5], 0.6, gauss(Vector3::new(0.4, 0.0, -0.3), 0.9)).unwrap();
        let b =
            OrbitalGrid::sample(Vector3::zeros(), [7, 6, 5], 0.6, |r| r.x * gauss(Vector3::zeros(), 1.1)(r)).unwrap();
        let d = zfs_pair_tensor(&a, &b, Method::Direct, None).unwrap();
        let c = zfs_pair_tensor(&a, &b, Method::Convolution, None).unwrap();
        let rel = (d.matrix() - c.matrix()).norm() / d.matrix().norm();
        assert!(rel < 1e-10, "{rel:e}");
    }

    #[test]
    fn delta_d_scale() {
        assert_eq!(delta_d_estimate(0.0, 3.7).unwrap(), 0.0);
        let v = delta_d_estimate(4.0, 3.7).unwrap();
        // 26 020.5 MHz·Å³ · 0.04 Å / 3.7⁴ Å⁴
        assert!((v - 26_020.508 * 0.04 / 187.4161).abs() < 1e-3, "{v}");
        assert!((delta_d_estimate(8.0, 3.7).unwrap() - 2.0 * v).abs() < 1e-12);
        assert!(delta_d_estimate(1.0, 0.0).is_err());
    }
}
