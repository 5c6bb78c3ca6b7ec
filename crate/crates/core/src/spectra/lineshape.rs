use serde::{Deserialize, Serialize};

use super::SpectraError;

const LN2: f64 = std::f64::consts::LN_2;

/// Asymmetric pseudo-Voigt line.
///
/// `width_left`/`width_right` are half widths at half maximum (MHz) on the
/// low/high frequency side. `shape_mix` is the Gaussian fraction: 0 is a pure
/// Lorentzian, 1 a pure Gaussian. `amplitude` is the peak contrast and may be
/// negative for inverted lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineModel {
    pub center: f64,
    pub width_left: f64,
    pub width_right: f64,
    pub amplitude: f64,
    pub shape_mix: f64,
}

impl LineModel {
    pub fn new(
        center: f64,
        width_left: f64,
        width_right: f64,
        amplitude: f64,
        shape_mix: f64,
    ) -> Result<Self, SpectraError> {
        let line = Self { center, width_left, width_right, amplitude, shape_mix };
        line.validate()?;
        Ok(line)
    }

    pub fn symmetric(center: f64, hwhm: f64, amplitude: f64, shape_mix: f64) -> Result<Self, SpectraError> {
        Self::new(center, hwhm, hwhm, amplitude, shape_mix)
    }

    pub fn validate(&self) -> Result<(), SpectraError> {
        let all = [self.center, self.width_left, self.width_right, self.amplitude, self.shape_mix];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SpectraError::InvalidInput(format!("non-finite line parameter: {self:?}")));
        }
        if self.width_left <= 0.0 || self.width_right <= 0.0 {
            return Err(SpectraError::InvalidInput(format!("line widths must be > 0: {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.shape_mix) {
            return Err(SpectraError::InvalidInput(format!("shape_mix must lie in [0, 1], got {}", self.shape_mix)));
        }
        Ok(())
    }

    pub fn hwhm(&self) -> f64 {
        0.5 * (self.width_left + self.width_right)
    }

    fn side_width(&self, f: f64) -> f64 {
        if f < self.center {
            self.width_left
        } else {
            self.width_right
        }
    }

    pub fn value(&self, f: f64) -> f64 {
        let u = (f - self.center) / self.side_width(f);
        self.amplitude * profile(u, self.shape_mix)
    }

    /// `dS/df` at `f`.
    pub fn slope(&self, f: f64) -> f64 {
        let w = self.side_width(f);
        self.amplitude * profile_du((f - self.center) / w, self.shape_mix) / w
    }

    /// Value and partial derivatives with respect to
    /// `(center, width_left, width_right, amplitude, shape_mix)`.
    pub(crate) fn value_and_gradient(&self, f: f64) -> (f64, [f64; 5]) {
        let left = f < self.center;
        let w = if left { self.width_left } else { self.width_right };
        let u = (f - self.center) / w;
        let (g, l) = (gaussian(u), lorentzian(u));
        let shape = self.shape_mix * g + (1.0 - self.shape_mix) * l;
        let ds = profile_du(u, self.shape_mix);
        let dw = -self.amplitude * ds * u / w;
        let mut grad = [0.0; 5];
        grad[0] = -self.amplitude * ds / w;
        grad[if left { 1 } else { 2 }] = dw;
        grad[3] = shape;
        grad[4] = self.amplitude * (g - l);
        (self.amplitude * shape, grad)
    }

    /// Maximum of `|dS/df|`. Closed form for pure Lorentzian and Gaussian
    /// profiles; blended profiles maximize the closed-form derivative in u.
    pub fn max_slope(&self) -> f64 {
        self.amplitude.abs() * max_profile_slope(self.shape_mix) / self.width_left.min(self.width_right)
    }
}

fn gaussian(u: f64) -> f64 {
    (-LN2 * u * u).exp()
}

fn lorentzian(u: f64) -> f64 {
    1.0 / (1.0 + u * u)
}

fn profile(u: f64, mix: f64) -> f64 {
    mix * gaussian(u) + (1.0 - mix) * lorentzian(u)
}

fn profile_du(u: f64, mix: f64) -> f64 {
    let l = lorentzian(u);
    mix * (-2.0 * LN2 * u * gaussian(u)) + (1.0 - mix) * (-2.0 * u * l * l)
}

/// `max_u |d profile/du|` over `u >= 0`.
pub(crate) fn max_profile_slope(mix: f64) -> f64 {
    if mix == 0.0 {
        return 3.0 * 3f64.sqrt() / 8.0;
    }
    if mix == 1.0 {
        return (2.0 * LN2).sqrt() * (-0.5f64).exp();
    }
    // The maximizer lies between the Lorentzian and Gaussian inflections.
    let f = |u: f64| profile_du(u, mix).abs();
    let (mut a, mut b) = (0.5, 0.9);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-12 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    f(0.5 * (a + b))
}
