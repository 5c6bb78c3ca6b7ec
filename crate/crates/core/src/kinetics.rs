//! Five-level photophysics: S0, S1 and the triplet sublevels Tx, Ty, Tz.
//!
//! Populations evolve as `dn/dt = M n` with a generator whose columns sum to
//! zero. Flows are S0→S1 (pump), S1→S0 (radiative), S1→T_i (ISC with
//! branching p_i), T_i→S0 (decay k_i) and an incoherent symmetric microwave
//! rate between the driven pair of triplet sublevels.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const S0: usize = 0;
const S1: usize = 1;
const TX: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum KineticsError {
    #[error("invalid kinetics parameter: {0}")]
    InvalidParameter(String),
    #[error("generator has a {0}-dimensional null space; steady state is not unique")]
    Degenerate(usize),
    #[error("contrast undefined: fluorescence without drive is zero")]
    DivisionDomain,
}

/// Driven pair of zero-field sublevels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionPair {
    Xy,
    Yz,
    Xz,
}

impl TransitionPair {
    pub const ALL: [TransitionPair; 3] = [TransitionPair::Xy, TransitionPair::Yz, TransitionPair::Xz];

    fn levels(self) -> (usize, usize) {
        match self {
            TransitionPair::Xy => (TX, TX + 1),
            TransitionPair::Yz => (TX + 1, TX + 2),
            TransitionPair::Xz => (TX, TX + 2),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TransitionPair::Xy => "xy",
            TransitionPair::Yz => "yz",
            TransitionPair::Xz => "xz",
        }
    }
}

/// Rates in 1/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticsParams {
    pub pump_rate: f64,
    pub radiative_rate: f64,
    pub isc_rate: f64,
    pub isc_branching: [f64; 3],
    pub triplet_decay: [f64; 3],
    pub mw_rate: f64,
    pub mw_pair: TransitionPair,
}

impl Default for KineticsParams {
    /// Sublevel lifetimes of 35, 166 and 500 μs with x-dominant ISC.
    fn default() -> Self {
        Self {
            pump_rate: 0.01,
            radiative_rate: 0.05,
            isc_rate: 0.05,
            isc_branching: [0.76, 0.16, 0.08],
            triplet_decay: [1.0 / 35.0, 1.0 / 166.0, 1.0 / 500.0],
            mw_rate: 0.0,
            mw_pair: TransitionPair::Xy,
        }
    }
}

impl KineticsParams {
    pub fn validate(&self) -> Result<(), KineticsError> {
        let rates = [self.pump_rate, self.radiative_rate, self.isc_rate, self.mw_rate]
            .into_iter()
            .chain(self.triplet_decay)
            .chain(self.isc_branching);
        for r in rates {
            if !r.is_finite() || r < 0.0 {
                return Err(KineticsError::InvalidParameter(format!(
                    "rates and branching ratios must be finite and non-negative, got {r}"
                )));
            }
        }
        let sum: f64 = self.isc_branching.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(KineticsError::InvalidParameter(format!("ISC branching must sum to 1, got {sum}")));
        }
        Ok(())
    }

    pub fn with_drive(mut self, pair: TransitionPair, mw_rate: f64) -> Self {
        self.mw_pair = pair;
        self.mw_rate = mw_rate;
        self
    }
}

/// Occupations of S0, S1, Tx, Ty, Tz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub s0: f64,
    pub s1: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl PopulationState {
    pub fn ground() -> Self {
        Self::from_vector(&Vector5::new(1.0, 0.0, 0.0, 0.0, 0.0))
    }

    pub fn from_vector(v: &Vector5<f64>) -> Self {
        Self { s0: v[0], s1: v[1], tx: v[2], ty: v[3], tz: v[4] }
    }

    pub fn to_vector(&self) -> Vector5<f64> {
        Vector5::new(self.s0, self.s1, self.tx, self.ty, self.tz)
    }

    pub fn total(&self) -> f64 {
        self.to_vector().sum()
    }

    pub fn validate(&self) -> Result<(), KineticsError> {
        let v = self.to_vector();
        if v.iter().any(|x| !x.is_finite() || *x < -1e-12) {
            return Err(KineticsError::InvalidParameter(format!(
                "populations must be finite and non-negative: {self:?}"
            )));
        }
        if (v.sum() - 1.0).abs() > 1e-10 {
            return Err(KineticsError::InvalidParameter(format!("populations must sum to 1, got {}", v.sum())));
        }
        Ok(())
    }
}

/// Generator `M` in 1/μs; `M[(to, from)]` holds the rate of each flow.
pub fn rate_matrix(p: &KineticsParams) -> Result<Matrix5<f64>, KineticsError> {
    p.validate()?;
    let mut m = Matrix5::zeros();
    let mut flow = |from: usize, to: usize, rate: f64| {
        m[(to, from)] += rate;
        m[(from, from)] -= rate;
    };
    flow(S0, S1, p.pump_rate);
    flow(S1, S0, p.radiative_rate);
    for i in 0..3 {
        flow(S1, TX + i, p.isc_rate * p.isc_branching[i]);
        flow(TX + i, S0, p.triplet_decay[i]);
    }
    let (a, b) = p.mw_pair.levels();
    flow(a, b, p.mw_rate);
    flow(b, a, p.mw_rate);
    Ok(m)
}

/// Unique normalized null vector of the generator.
pub fn steady_state(p: &KineticsParams) -> Result<PopulationState, KineticsError> {
    let m = rate_matrix(p)?;
    if p.pump_rate == 0.0 {
        return Ok(PopulationState::ground());
    }
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    let nullity = svd.singular_values.iter().filter(|&&s| s <= 1e-12 * smax).count();
    if nullity != 1 {
        return Err(KineticsError::Degenerate(nullity));
    }
    // Replace the (redundant) S0 balance row with the normalization.
    let mut a = m;
    a.row_mut(S0).fill(1.0);
    let mut rhs = Vector5::zeros();
    rhs[S0] = 1.0;
    let n = a.lu().solve(&rhs).ok_or(KineticsError::Degenerate(nullity))?;
    // One refinement step tightens ‖M n‖ on stiff parameter sets.
    let r = rhs - a * n;
    let n = n + a.lu().solve(&r).unwrap_or_else(Vector5::zeros);
    Ok(PopulationState::from_vector(&n))
}

/// Exact propagation `exp(M t) n0`.
pub fn evolve(p: &KineticsParams, initial: &PopulationState, t_us: f64) -> Result<PopulationState, KineticsError> {
    if !t_us.is_finite() || t_us < 0.0 {
        return Err(KineticsError::InvalidParameter(format!("time must be >= 0, got {t_us}")));
    }
    initial.validate()?;
    let m = rate_matrix(p)?;
    if t_us == 0.0 {
        return Ok(*initial);
    }
    let propagator = (m * t_us).exp();
    Ok(PopulationState::from_vector(&(propagator * initial.to_vector())))
}

/// Fluorescence rate `radiative_rate · n_S1` at steady state.
pub fn fluorescence(p: &KineticsParams) -> Result<f64, KineticsError> {
    Ok(p.radiative_rate * steady_state(p)?.s1)
}

/// `(F_on - F_off)/F_off` with the drive applied to `pair` at `p.mw_rate`.
pub fn odmr_contrast(p: &KineticsParams, pair: TransitionPair) -> Result<f64, KineticsError> {
    let off = fluorescence(&p.with_drive(pair, 0.0))?;
    if off == 0.0 {
        return Err(KineticsError::DivisionDomain);
    }
    let on = fluorescence(&p.with_drive(pair, p.mw_rate))?;
    Ok((on - off) / off)
}
