//! Comparison controllers: PID, certainty-equivalence adaptive control, and
//! the no-exploration tube MPC.

use crate::estimator::{regressor, Regressor};
use crate::plant::{coulomb_friction, AffineModel, Params, PlantConfig, State, Wrench, NP, NU};
use crate::tube_mpc::MpcConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral accumulator.
    pub i_clamp: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains { kp: 8.0, ki: 0.5, kd: 2.0, i_clamp: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PidState {
    pub gains: PidGains,
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl PidState {
    pub fn new(gains: PidGains) -> Self {
        PidState { gains, integral: 0.0, prev_error: None }
    }
}

/// Torque demand through `f_y` (unit arm): `τ_h = −f_y`.
pub fn pid_step(x: &State, target: f64, st: &mut PidState, h: f64) -> Wrench {
    assert!(h > 0.0);
    let e = target - x[0];
    st.integral = (st.integral + e * h).clamp(-st.gains.i_clamp, st.gains.i_clamp);
    // Derivative on the measured rate avoids a kick on the first sample.
    let de = -x[1];
    st.prev_error = Some(e);
    let tau = st.gains.kp * e + st.gains.ki * st.integral + st.gains.kd * de;
    let mut u = [0.0; NU];
    u[1] = -tau;
    u
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdaptiveGains {
    pub eta: f64,
    pub k1: f64,
    pub k2: f64,
    pub arm_floor: f64,
    /// Regularizer of the normalized gradient.
    pub nu: f64,
}

impl Default for AdaptiveGains {
    fn default() -> Self {
        AdaptiveGains { eta: 0.05, k1: 4.0, k2: 4.0, arm_floor: 0.1, nu: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveState {
    pub gains: AdaptiveGains,
    pub rho_hat: Params,
    /// Projection box.
    pub lo: Params,
    pub hi: Params,
}

impl AdaptiveState {
    pub fn new(gains: AdaptiveGains, rho0: Params, lo: Params, hi: Params) -> Self {
        let mut s = AdaptiveState { gains, rho_hat: rho0, lo, hi };
        s.project();
        s
    }

    pub fn project(&mut self) {
        for i in 0..NP {
            self.rho_hat[i] = self.rho_hat[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    pub fn contains_estimate(&self) -> bool {
        (0..NP).all(|i| self.rho_hat[i] >= self.lo[i] && self.rho_hat[i] <= self.hi[i])
    }
}

/// Computed-torque law applied through `f_x` with the estimated arm.
pub fn adaptive_control(x: &State, target: &State, st: &AdaptiveState, plant: &PlantConfig) -> Wrench {
    let [k, zeta, arm] = st.rho_hat;
    let m = plant.inertia();
    let tau = k * x[0] + zeta * x[1] - coulomb_friction(x[1], plant)
        + m * (-st.gains.k1 * (x[0] - target[0]) - st.gains.k2 * (x[1] - target[1]));
    let mut u = [0.0; NU];
    u[0] = -tau / arm.max(st.gains.arm_floor);
    u
}

/// Normalized projected-gradient step on the one-step residual.
/// `x_next` must have the friction contribution removed.
pub fn adaptive_update(st: &mut AdaptiveState, model: &AffineModel, x: &State, u: &Wrench, x_next: &State) {
    let reg: Regressor = regressor(model, x, u, x_next);
    // Residual x̂⁺ − x⁺ = Dρ̂ + d.
    let mut res = reg.d;
    let mut norm = st.gains.nu;
    for r in 0..2 {
        for i in 0..NP {
            res[r] += reg.d_mat[r][i] * st.rho_hat[i];
            norm += reg.d_mat[r][i] * reg.d_mat[r][i];
        }
    }
    for i in 0..NP {
        let g = reg.d_mat[0][i] * res[0] + reg.d_mat[1][i] * res[1];
        st.rho_hat[i] -= st.gains.eta * g / norm;
    }
    st.project();
}

/// Tube-MPC and dilation settings of the constant-parameter ablation.
/// Returns the MPC config and the dilation budget to use.
pub fn ampc_no_explore(cfg: &MpcConfig) -> (MpcConfig, f64) {
    let mut out = cfg.clone();
    out.upsilon = [0.0; NP];
    (out, 0.0)
}
