use nalgebra::{Matrix3, Vector3};

use super::ZfsError;

/// Real orbital amplitudes on a lattice.
///
/// Row `a` of `axes` is the step vector along index `a`; the value at
/// `(i, j, k)` sits at `origin + i·axes[0] + j·axes[1] + k·axes[2]` and is
/// stored at `(i·ny + j)·nz + k` (z fastest, as in cube files).
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalGrid {
    origin: Vector3<f64>,
    axes: Matrix3<f64>,
    dims: [usize; 3],
    values: Vec<f64>,
}

impl OrbitalGrid {
    pub fn new(origin: Vector3<f64>, axes: Matrix3<f64>, dims: [usize; 3], values: Vec<f64>) -> Result<Self, ZfsError> {
        if dims.iter().any(|&n| n == 0) {
            return Err(ZfsError::InvalidInput(format!("grid dimensions {dims:?} must be positive")));
        }
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(ZfsError::InvalidInput(format!(
                "{} values for a {}×{}×{} grid",
                values.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        if origin.iter().chain(axes.iter()).chain(&values).any(|v| !v.is_finite()) {
            return Err(ZfsError::InvalidInput("grid geometry and values must be finite".into()));
        }
        let scale = (0..3).map(|a| axes.row(a).norm()).product::<f64>();
        if scale == 0.0 || axes.determinant().abs() <= 1e-12 * scale {
            return Err(ZfsError::InvalidInput("grid axes are singular".into()));
        }
        Ok(Self { origin, axes, dims, values })
    }

    /// Samples `f(r)` on an orthogonal grid with spacing `step` (Å),
    /// centered on `center`.
    pub fn sample(
        center: Vector3<f64>,
        dims: [usize; 3],
        step: f64,
        f: impl Fn(Vector3<f64>) -> f64,
    ) -> Result<Self, ZfsError> {
        let axes = Matrix3::from_diagonal_element(step);
        let half = Vector3::new(dims[0] as f64 - 1.0, dims[1] as f64 - 1.0, dims[2] as f64 - 1.0) * (0.5 * step);
        let origin = center - half;
        let mut values = Vec::with_capacity(dims.iter().product());
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    values.push(f(origin + Vector3::new(i as f64, j as f64, k as f64) * step));
                }
            }
        }
        Self::new(origin, axes, dims, values)
    }

    pub fn origin(&self) -> &Vector3<f64> {
        &self.origin
    }

    pub fn axes(&self) -> &Matrix3<f64> {
        &self.axes
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin + self.axes.transpose() * Vector3::new(i as f64, j as f64, k as f64)
    }

    /// Position of the linear index `idx`.
    pub fn position_of(&self, idx: usize) -> Vector3<f64> {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        let i = idx / (self.dims[1] * self.dims[2]);
        self.position(i, j, k)
    }

    pub fn voxel_volume(&self) -> f64 {
        self.axes.determinant().abs()
    }

    /// Shortest step vector length.
    pub fn min_step(&self) -> f64 {
        (0..3).map(|a| self.axes.row(a).norm()).fold(f64::INFINITY, f64::min)
    }

    /// `∫|φ|² dV` as a lattice sum.
    pub fn norm_integral(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.voxel_volume()
    }

    /// Copy scaled to `∫|φ|² dV = 1`.
    pub fn normalized(&self) -> Result<Self, ZfsError> {
        let n = self.norm_integral();
        if n <= 0.0 {
            return Err(ZfsError::InvalidInput("orbital has zero norm".into()));
        }
        let s = n.sqrt().recip();
        Ok(Self { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() })
    }

    pub fn translated(&self, shift: Vector3<f64>) -> Self {
        Self { origin: self.origin + shift, ..self.clone() }
    }

    /// Same lattice, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, ZfsError> {
        Self::new(self.origin, self.axes, self.dims, values)
    }

    /// Same dims, axes and origin (to a tolerance of 1e-9 of the step).
    pub fn check_commensurate(&self, other: &Self) -> Result<(), ZfsError> {
        if self.dims != other.dims {
            return Err(ZfsError::GridMismatch(format!("dims {:?} vs {:?}", self.dims, other.dims)));
        }
        let tol = 1e-9 * self.min_step();
        if (self.axes - other.axes).abs().max() > tol {
            return Err(ZfsError::GridMismatch("step vectors differ".into()));
        }
        if (self.origin - other.origin).abs().max() > tol {
            return Err(ZfsError::GridMismatch(format!(
                "origins differ: {:?} vs {:?}",
                self.origin.as_slice(),
                other.origin.as_slice()
            )));
        }
        Ok(())
    }
}
