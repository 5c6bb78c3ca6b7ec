use nalgebra::Vector5;
use odmr_core::kinetics::{
    evolve, odmr_contrast, rate_matrix, steady_state, KineticsParams, PopulationState, TransitionPair,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng) -> KineticsParams {
    let w: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
    let s: f64 = w.iter().sum();
    KineticsParams {
        pump_rate: rng.random_range(0.005..0.2),
        radiative_rate: rng.random_range(0.01..0.5),
        isc_rate: rng.random_range(0.01..0.5),
        isc_branching: [w[0] / s, w[1] / s, 1.0 - w[0] / s - w[1] / s],
        triplet_decay: std::array::from_fn(|_| rng.random_range(1.0 / 500.0..1.0 / 20.0)),
        mw_rate: rng.random_range(0.0..0.2),
        mw_pair: [TransitionPair::Xy, TransitionPair::Yz, TransitionPair::Xz][rng.random_range(0..3)],
    }
}

#[test]
fn steady_state_matches_long_time_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let ss = steady_state(&p).unwrap();
        let m = rate_matrix(&p).unwrap();
        assert!((m * ss.to_vector()).norm() <= 1e-10);
        assert!((ss.total() - 1.0).abs() <= 1e-10);
        let late = evolve(&p, &PopulationState::ground(), 1e4).unwrap();
        let diff = (late.to_vector() - ss.to_vector()).abs().max();
        assert!(diff <= 1e-8, "{diff:e} for {p:?}");
    }
}

/// Classical RK4 on dn/dt = M n.
fn rk4(p: &KineticsParams, t_end: f64, dt: f64) -> Vector5<f64> {
    let m = rate_matrix(p).unwrap();
    let mut n = PopulationState::ground().to_vector();
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let k1 = m * n;
        let k2 = m * (n + k1 * (dt / 2.0));
        let k3 = m * (n + k2 * (dt / 2.0));
        let k4 = m * (n + k3 * dt);
        n += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    n
}

#[test]
fn default_steady_state_against_ode_integration() {
    let p = KineticsParams::default();
    let ss = steady_state(&p).unwrap();
    let ode = rk4(&p, 2e4, 0.5);
    assert!((ode - ss.to_vector()).abs().max() < 1e-8, "{ode:?} vs {ss:?}");
    assert!(ss.tz > ss.ty);
}

#[test]
fn default_contrast_signs() {
    let p = KineticsParams::default().with_drive(TransitionPair::Xy, 0.1);
    let xy = odmr_contrast(&p, TransitionPair::Xy).unwrap();
    let yz = odmr_contrast(&p, TransitionPair::Yz).unwrap();
    assert!(xy.signum() != yz.signum(), "xy {xy} yz {yz}");
    assert_eq!(odmr_contrast(&p.with_drive(TransitionPair::Yz, 0.0), TransitionPair::Yz).unwrap(), 0.0);
}
