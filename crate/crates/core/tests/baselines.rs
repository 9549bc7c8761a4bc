use proptest::prelude::*;
use rampc_core::baselines::{adaptive_control, adaptive_update, ampc_no_explore, pid_step, AdaptiveGains, AdaptiveState, PidGains, PidState};
use rampc_core::plant::{AffineModel, PlantConfig};
use rampc_core::tube_mpc::MpcConfig;

const LO: [f64; 3] = [0.2, 0.3, 1.5];
const HI: [f64; 3] = [0.8, 1.0, 3.5];

#[test]
fn pid_is_silent_at_the_target() {
    let mut st = PidState::new(PidGains::default());
    let u = pid_step(&[0.0, 0.0], 0.0, &mut st, 0.05);
    assert_eq!(u, [0.0; 6]);
}

#[test]
fn pid_integral_is_clamped() {
    let mut st = PidState::new(PidGains::default());
    for _ in 0..10_000 {
        pid_step(&[1.0, 0.0], 0.0, &mut st, 0.05);
    }
    assert_eq!(st.integral, -5.0);
    // Proportional −8 plus clamped integral −2.5, applied through f_y = −τ.
    let u = pid_step(&[1.0, 0.0], 0.0, &mut st, 0.05);
    assert!((u[1] - 10.5).abs() < 1e-12);
}

#[test]
fn zero_residual_leaves_estimate_unchanged() {
    let plant = PlantConfig::default();
    let model = AffineModel::new(&plant);
    let mut st = AdaptiveState::new(AdaptiveGains::default(), [0.5, 0.6, 2.5], LO, HI);
    let x = [0.3, -0.1];
    let u = adaptive_control(&x, &[0.0, 0.0], &st, &plant);
    let xn = model.predict(&x, &u, &st.rho_hat);
    let before = st.rho_hat;
    adaptive_update(&mut st, &model, &x, &u, &xn);
    for i in 0..3 {
        assert!((st.rho_hat[i] - before[i]).abs() < 1e-12);
    }
}

#[test]
fn arm_estimate_is_floored() {
    let plant = PlantConfig::default();
    let st = AdaptiveState { gains: AdaptiveGains::default(), rho_hat: [0.5, 0.6, 0.0], lo: LO, hi: HI };
    let u = adaptive_control(&[0.2, 0.0], &[0.0, 0.0], &st, &plant);
    assert!(u.iter().all(|v| v.is_finite()));
}

#[test]
fn ablation_only_touches_exploration_and_dilation() {
    let cfg = MpcConfig::default();
    let (out, phi) = ampc_no_explore(&cfg);
    assert_eq!(phi, 0.0);
    assert_eq!(out.upsilon, [0.0; 3]);
    let mut back = out.clone();
    back.upsilon = cfg.upsilon;
    assert_eq!(back, cfg);
}

proptest! {
    #[test]
    fn projection_keeps_estimate_in_box(
        x in [-1.0f64..1.0, -0.5f64..0.5],
        xn in [-1.0f64..1.0, -0.5f64..0.5],
        u in prop::array::uniform6(-50.0f64..50.0),
        rho in [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..5.0],
        eta in 0.0f64..5.0,
    ) {
        let model = AffineModel::new(&PlantConfig::default());
        let gains = AdaptiveGains { eta, ..AdaptiveGains::default() };
        let mut st = AdaptiveState::new(gains, rho, LO, HI);
        prop_assert!(st.contains_estimate());
        adaptive_update(&mut st, &model, &x, &u, &xn);
        prop_assert!(st.contains_estimate());
    }
}
