//! CODATA 2018 constants and the prefactors derived from them.

use serde::Serialize;

/// Fixed SI constants used by the Zeeman term and the dipolar integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Vacuum permeability over 4π, in T²·m³/J.
    pub mu0_over_4pi: f64,
    /// Free-electron g factor (magnitude).
    pub g_e: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Planck constant, J·s.
    pub h: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    mu0_over_4pi: 1.000_000_000_55e-7,
    g_e: 2.002_319_304_362_56,
    mu_b: 9.274_010_078_3e-24,
    h: 6.626_070_15e-34,
};

/// Bohr radius in Å.
pub const BOHR_IN_ANGSTROM: f64 = 0.529_177_210_903;

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

impl PhysicalConstants {
    /// Electron Zeeman coefficient g_e μ_B / h in MHz per mT.
    pub fn zeeman_mhz_per_mt(&self) -> f64 {
        self.g_e * self.mu_b / self.h * 1e-3 * 1e-6
    }

    /// Dipolar coupling constant (μ0/4π)(g_e μ_B)²/h in MHz·Å³.
    pub fn dipolar_mhz_a3(&self) -> f64 {
        let gm = self.g_e * self.mu_b;
        // Hz·m³ -> MHz·Å³
        self.mu0_over_4pi * gm * gm / self.h * 1e30 * 1e-6
    }

    /// Prefactor ½(μ0/4π)(g_e μ_B)²/h of the triplet spin-spin tensor, MHz·Å³.
    pub fn pair_tensor_prefactor(&self) -> f64 {
        0.5 * self.dipolar_mhz_a3()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeeman_coefficient_matches_tabulated_value() {
        // μ_B/h = 13 996.244 936 MHz/T (CODATA 2018)
        let expected = 2.002_319_304_362_56 * 13_996.244_936_1e-3;
        let got = CODATA_2018.zeeman_mhz_per_mt();
        assert!((got - expected).abs() < 1e-7, "{got} vs {expected}");
    }

    #[test]
    fn dipolar_prefactor_by_hand() {
        // (g μB)² = (1.856 952e-23 J/T)² = 3.448 27e-46; × 1e-7 / 6.626e-34
        // = 5.204 e-20 Hz·m³ = 52 040 MHz·Å³
        let c = CODATA_2018.dipolar_mhz_a3();
        let gm: f64 = 2.002_319_304_362_56 * 9.274_010_078_3e-24;
        let by_hand = 1e-7 * gm.powi(2) / 6.626_070_15e-34 / 1e6 * 1e30;
        assert!((c - by_hand).abs() / by_hand < 1e-8);
        assert!((c - 52_040.0).abs() < 50.0, "{c}");
        assert!((CODATA_2018.pair_tensor_prefactor() * 2.0 - c).abs() < 1e-9);
    }
}
