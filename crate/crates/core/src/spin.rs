//! Spin-1 triplet Hamiltonian in the zero-field basis {Tx, Ty, Tz}.
//!
//! The zero-field Hamiltonian is diagonal in the Cartesian triplet basis with
//! entries `(D/3 + E, D/3 - E, -2D/3)`, so `Tx` is the upper level and the
//! zero-field transitions are `f_xy = 2E`, `f_yz = D - E`, `f_xz = D + E`.
//! Written in terms of a spin-spin tensor `Dt`, `H = S·Dt·S`, the zero-field
//! matrix is `-Dt` in this basis.
//!
//! An optional Zeeman term `g_e μ_B B·S` uses `(S_a)_bc = -i ε_abc`.

use nalgebra::{Complex, Matrix3, Rotation3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::CODATA_2018;

pub type Complex64 = Complex<f64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACELESS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SpinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),
    #[error("transition labels out of order: f_xz = {f_xz} MHz < f_yz = {f_yz} MHz")]
    LabelOrder { f_xz: f64, f_yz: f64 },
    #[error("tensor is not traceless (|trace|/norm = {0:e})")]
    InvalidTensor(f64),
}

/// Zero-field splitting parameters in MHz.
///
/// Canonical form keeps the sign of `d` and enforces `0 <= e <= |d|/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZfsParameters {
    pub d: f64,
    pub e: f64,
}

impl ZfsParameters {
    pub fn new(d: f64, e: f64) -> Result<Self, SpinError> {
        if !d.is_finite() || !e.is_finite() {
            return Err(SpinError::InvalidParameter(format!("ZFS parameters must be finite (D = {d}, E = {e})")));
        }
        Ok(Self { d, e })
    }

    pub fn is_canonical(&self) -> bool {
        self.e >= 0.0 && self.e <= self.d.abs() / 3.0 * (1.0 + 1e-12)
    }

    /// Relabels axes so that the parameters satisfy the canonical convention.
    pub fn canonical(&self) -> Self {
        let (zfs, _) = tensor_to_parameters(&ZfsTensor::from_parameters(*self))
            .expect("tensor built from parameters is traceless");
        zfs
    }
}

/// Static magnetic field in mT, molecular frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    pub b_mt: [f64; 3],
}

impl MagneticField {
    pub fn new(b_mt: [f64; 3]) -> Result<Self, SpinError> {
        if b_mt.iter().any(|b| !b.is_finite()) {
            return Err(SpinError::InvalidParameter(format!("field components must be finite: {b_mt:?}")));
        }
        Ok(Self { b_mt })
    }

    pub fn zero() -> Self {
        Self { b_mt: [0.0; 3] }
    }
}

/// Symmetric, traceless spin-spin tensor in MHz (`H = S·Dt·S`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZfsTensor {
    matrix: Matrix3<f64>,
}

impl ZfsTensor {
    /// Wraps a symmetric matrix, symmetrizing away rounding-level asymmetry.
    pub fn new(matrix: Matrix3<f64>) -> Result<Self, SpinError> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(SpinError::InvalidParameter("tensor entries must be finite".into()));
        }
        let scale = matrix.norm().max(f64::MIN_POSITIVE);
        let asym = (matrix - matrix.transpose()).norm() / scale;
        if asym > HERMITIAN_TOL {
            return Err(SpinError::InvalidParameter(format!("tensor is not symmetric (relative asymmetry {asym:e})")));
        }
        Ok(Self { matrix: (matrix + matrix.transpose()) * 0.5 })
    }

    pub fn from_parameters(zfs: ZfsParameters) -> Self {
        let ZfsParameters { d, e } = zfs;
        Self { matrix: Matrix3::from_diagonal(&Vector3::new(-d / 3.0 - e, -d / 3.0 + e, 2.0 * d / 3.0)) }
    }

    /// Tensor of a real zero-field Hamiltonian (`Dt = -H`).
    pub fn from_zero_field_hamiltonian(h: &TripletHamiltonian) -> Result<Self, SpinError> {
        if h.matrix.iter().any(|z| z.im.abs() > HERMITIAN_TOL * h.matrix.norm().max(1.0)) {
            return Err(SpinError::InvalidParameter("Hamiltonian has a field-dependent (imaginary) part".into()));
        }
        Self::new(-h.matrix.map(|z| z.re))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `R · Dt · Rᵀ`.
    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        let r = rotation.matrix();
        Self { matrix: r * self.matrix * r.transpose() }
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
    }
}

impl Serialize for ZfsTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

/// Hermitian 3×3 Hamiltonian in MHz, basis {Tx, Ty, Tz}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletHamiltonian {
    matrix: Matrix3<Complex64>,
}

impl TripletHamiltonian {
    /// Wraps an arbitrary matrix; Hermiticity is checked by [`eigenlevels`].
    pub fn from_matrix(matrix: Matrix3<Complex64>) -> Result<Self, SpinError> {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SpinError::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { matrix })
    }

    /// `-Dt + g_e μ_B B·S`.
    pub fn from_tensor(tensor: &ZfsTensor, field: Option<&MagneticField>) -> Self {
        let mut matrix = (-tensor.matrix).map(|v| Complex64::new(v, 0.0));
        if let Some(field) = field {
            matrix += zeeman_matrix(field);
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.matrix
    }
}

/// Zeeman matrix `γ B·S` in MHz, with `(S_a)_bc = -i ε_abc`.
pub fn zeeman_matrix(field: &MagneticField) -> Matrix3<Complex64> {
    let gamma = CODATA_2018.zeeman_mhz_per_mt();
    let [bx, by, bz] = field.b_mt.map(|b| b * gamma);
    let i = |v: f64| Complex64::new(0.0, v);
    let z = Complex64::new(0.0, 0.0);
    Matrix3::new(z, i(-bz), i(by), i(bz), z, i(-bx), i(-by), i(bx), z)
}

pub fn build_hamiltonian(zfs: ZfsParameters, field: Option<&MagneticField>) -> Result<TripletHamiltonian, SpinError> {
    let zfs = ZfsParameters::new(zfs.d, zfs.e)?;
    if let Some(f) = field {
        MagneticField::new(f.b_mt)?;
    }
    Ok(TripletHamiltonian::from_tensor(&ZfsTensor::from_parameters(zfs), field))
}

/// Eigenlevels sorted ascending; eigenvectors are stored as columns and
/// phased so that their largest-magnitude component is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletLevels {
    pub energies: [f64; 3],
    pub vectors: Matrix3<Complex64>,
}

impl TripletLevels {
    /// Weight `|⟨T_axis|level⟩|²` of each zero-field axis in each level.
    pub fn character(&self, level: usize) -> [f64; 3] {
        let col = self.vectors.column(level);
        [col[0].norm_sqr(), col[1].norm_sqr(), col[2].norm_sqr()]
    }
}

pub fn eigenlevels(h: &TripletHamiltonian) -> Result<TripletLevels, SpinError> {
    let m = h.matrix;
    let scale = m.norm();
    if scale > 0.0 {
        let dev = (m - m.adjoint()).norm() / scale;
        if dev > HERMITIAN_TOL {
            return Err(SpinError::NotHermitian(dev));
        }
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = Matrix3::<Complex64>::zeros();
    let mut energies = [0.0; 3];
    for (slot, &src) in order.iter().enumerate() {
        energies[slot] = eig.eigenvalues[src];
        let mut v = eig.eigenvectors.column(src).into_owned();
        let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let pivot = v.iter().position(|c| c.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
        let phase = v[pivot].conj() / v[pivot].norm();
        v *= phase;
        v[pivot] = Complex64::new(v[pivot].re, 0.0);
        vectors.set_column(slot, &v);
    }
    Ok(TripletLevels { energies, vectors })
}

/// Transition frequencies labeled by the zero-field character of the levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    pub f_xy: f64,
    pub f_yz: f64,
    pub f_xz: f64,
}

impl TransitionSet {
    /// `f_xz - f_xy - f_yz`; zero at zero field when `Tx` is the upper level.
    pub fn closure_residual(&self) -> f64 {
        self.f_xz - self.f_xy - self.f_yz
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Each level is assigned the zero-field axis that maximizes the total
/// overlap; near-degenerate field-mixed levels may swap labels.
pub fn transition_frequencies(levels: &TripletLevels) -> TransitionSet {
    let chars: Vec<[f64; 3]> = (0..3).map(|l| levels.character(l)).collect();
    let best = PERMUTATIONS
        .iter()
        .max_by(|a, b| {
            let score = |p: &[usize; 3]| (0..3).map(|l| chars[l][p[l]]).sum::<f64>();
            score(a).total_cmp(&score(b))
        })
        .copied()
        .unwrap_or([0, 1, 2]);
    let mut by_axis = [0.0; 3];
    for (level, &axis) in best.iter().enumerate() {
        by_axis[axis] = levels.energies[level];
    }
    let [ex, ey, ez] = by_axis;
    TransitionSet { f_xy: (ex - ey).abs(), f_yz: (ey - ez).abs(), f_xz: (ex - ez).abs() }
}

/// Zero-field transitions directly from (D, E).
pub fn zero_field_transitions(zfs: ZfsParameters) -> TransitionSet {
    let h = TripletHamiltonian::from_tensor(&ZfsTensor::from_parameters(zfs), None);
    let levels = eigenlevels(&h).expect("diagonal matrix is Hermitian");
    transition_frequencies(&levels)
}

/// Inverts the zero-field map; with `f_xy` also returns `|f_xy - 2E|`.
pub fn zfs_from_transitions(
    f_xz: f64,
    f_yz: f64,
    f_xy: Option<f64>,
) -> Result<(ZfsParameters, Option<f64>), SpinError> {
    if !f_xz.is_finite() || !f_yz.is_finite() || f_yz <= 0.0 {
        return Err(SpinError::InvalidParameter(format!(
            "transitions must be finite and positive (f_xz = {f_xz}, f_yz = {f_yz})"
        )));
    }
    if f_xz < f_yz {
        return Err(SpinError::LabelOrder { f_xz, f_yz });
    }
    let zfs = ZfsParameters { d: 0.5 * (f_xz + f_yz), e: 0.5 * (f_xz - f_yz) };
    Ok((zfs, f_xy.map(|f| (f - 2.0 * zfs.e).abs())))
}

/// Principal values and axes (columns) in canonical x, y, z order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalAxes {
    pub values: [f64; 3],
    pub axes: Matrix3<f64>,
}

impl PrincipalAxes {
    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.axes.column(i).into_owned()
    }
}

/// Canonical axes satisfy `|λ_z| >= |λ_y| >= |λ_x|`; `D = 3λ_z/2` and
/// `E = |λ_x - λ_y|/2`, which guarantees `0 <= E <= |D|/3`.
pub fn tensor_to_parameters(t: &ZfsTensor) -> Result<(ZfsParameters, PrincipalAxes), SpinError> {
    let norm = t.matrix.norm();
    if norm > 0.0 {
        let ratio = t.trace().abs() / norm;
        if ratio > TRACELESS_TOL {
            return Err(SpinError::InvalidTensor(ratio));
        }
    }
    let eig = SymmetricEigen::new(t.matrix);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));

    let mut values = [0.0; 3];
    let mut axes = Matrix3::zeros();
    for (slot, &src) in order.iter().enumerate() {
        values[slot] = eig.eigenvalues[src];
        let mut v = eig.eigenvectors.column(src).into_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        axes.set_column(slot, &v);
    }
    let zfs = ZfsParameters { d: 1.5 * values[2], e: 0.5 * (values[0] - values[1]).abs() };
    Ok((zfs, PrincipalAxes { values, axes }))
}
