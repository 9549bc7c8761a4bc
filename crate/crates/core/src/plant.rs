//! Jammed-hinge plant: parametric dynamics, truth schedules, disturbances.

use rand::Rng;

pub const NX: usize = 2;
pub const NU: usize = 6;
pub const NP: usize = 3;

/// `[θ, θ̇]`.
pub type State = [f64; NX];
/// `[f_x, f_y, f_z, τ_x, τ_y, τ_z]`.
pub type Wrench = [f64; NU];
/// `[𝒦, ζ, 𝒟]`: stiffness, viscous coefficient, moment arm.
pub type Params = [f64; NP];
pub type Mat2 = [[f64; NX]; NX];
pub type Mat2x6 = [[f64; NU]; NX];

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlantConfig {
    /// Client mass (kg).
    pub m: f64,
    /// Center-of-mass distance (m).
    pub d_s: f64,
    /// Contact distance (m).
    pub d_g: f64,
    /// Coulomb coefficient.
    pub mu: f64,
    /// Effective rotor radius (m).
    pub r_e: f64,
    /// Link inertia (kg·m²).
    pub i_cm: f64,
    /// Motor-side inertia (kg·m²).
    pub j_m: f64,
    /// Friction smoothing (rad/s).
    pub eps: f64,
    /// Sample period (s).
    pub h: f64,
    /// Bound on the exogenous hinge torque (N·m).
    pub w_bound: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            m: 1.8,
            d_s: 1.2,
            d_g: 2.5,
            mu: 0.3,
            r_e: 0.2,
            i_cm: 1.5,
            j_m: 4.1,
            eps: 1e-3,
            h: 0.05,
            w_bound: 0.2,
        }
    }
}

impl PlantConfig {
    /// Reflected inertia `J_m + I_cm + m·d_s²`.
    pub fn inertia(&self) -> f64 {
        self.j_m + self.i_cm + self.m * self.d_s * self.d_s
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let pos = [
            (self.m, "plant.m"),
            (self.d_s, "plant.d_s"),
            (self.d_g, "plant.d_g"),
            (self.r_e, "plant.r_e"),
            (self.i_cm, "plant.i_cm"),
            (self.j_m, "plant.j_m"),
            (self.eps, "plant.eps"),
        ];
        for (v, name) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(name);
            }
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err("plant.h");
        }
        if !(self.w_bound >= 0.0 && self.w_bound.is_finite()) {
            return Err("plant.w_bound");
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err("plant.mu");
        }
        Ok(())
    }

    /// Friction magnitude bound `μ·r_e`.
    pub fn friction_bound(&self) -> f64 {
        self.mu * self.r_e
    }

    /// Disturbance bound on the `θ̇` channel in state units.
    pub fn w_state(&self) -> f64 {
        self.h * self.w_bound / self.inertia()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Sinusoid {
    pub base: f64,
    pub amp: f64,
    pub rate: f64,
}

impl Sinusoid {
    pub fn at(&self, k: usize) -> f64 {
        self.base + self.amp * libm::sin(self.rate * k as f64)
    }

    pub fn constant(base: f64) -> Self {
        Sinusoid { base, amp: 0.0, rate: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TruthSchedule {
    pub stiffness: Sinusoid,
    pub viscous: Sinusoid,
    pub arm: Sinusoid,
}

impl Default for TruthSchedule {
    fn default() -> Self {
        TruthSchedule {
            stiffness: Sinusoid { base: 0.45, amp: 0.1, rate: 0.1 },
            viscous: Sinusoid { base: 0.6, amp: 0.15, rate: 0.1 },
            arm: Sinusoid { base: 2.5, amp: 0.2, rate: 0.1 },
        }
    }
}

impl TruthSchedule {
    /// Same schedule with amplitudes zeroed.
    pub fn frozen(&self) -> Self {
        TruthSchedule {
            stiffness: Sinusoid::constant(self.stiffness.base),
            viscous: Sinusoid::constant(self.viscous.base),
            arm: Sinusoid::constant(self.arm.base),
        }
    }

    /// Upper bound on `‖ρ*ₖ₊₁ − ρ*ₖ‖₂` (`|sin a − sin b| ≤ |a − b|`).
    pub fn max_step_change(&self) -> f64 {
        let c = |s: &Sinusoid| (s.amp * s.rate) * (s.amp * s.rate);
        libm::sqrt(c(&self.stiffness) + c(&self.viscous) + c(&self.arm))
    }
}

pub fn true_params(schedule: &TruthSchedule, k: usize) -> Params {
    [schedule.stiffness.at(k), schedule.viscous.at(k), schedule.arm.at(k)]
}

/// Smoothed Coulomb friction torque; opposes the motion.
pub fn coulomb_friction(theta_dot: f64, cfg: &PlantConfig) -> f64 {
    -cfg.friction_bound() * theta_dot / (theta_dot.abs() + cfg.eps)
}

/// Effective hinge torque `−𝒟 f_x − f_y + τ_z`.
pub fn hinge_torque(u: &Wrench, arm: f64) -> f64 {
    -arm * u[0] - u[1] + u[5]
}

/// Continuous-time `A(ρ)`, `B(ρ)`.
pub fn build_matrices(rho: &Params, cfg: &PlantConfig) -> (Mat2, Mat2x6) {
    let m = cfg.inertia();
    assert!(m > 0.0, "non-positive inertia");
    let a = [[0.0, 1.0], [-rho[0] / m, -rho[1] / m]];
    let mut b = [[0.0; NU]; NX];
    b[1] = [-rho[2] / m, -1.0 / m, 0.0, 0.0, 0.0, 1.0 / m];
    (a, b)
}

/// Discrete model `x⁺ = Φ₀x + Γ₀u + Σᵢ ρᵢ(Φᵢx + Γᵢu)` with the sample period
/// folded in. Index 0 is the parameter-free part.
#[derive(Clone, Debug)]
pub struct AffineModel {
    pub phi: [Mat2; NP + 1],
    pub gam: [Mat2x6; NP + 1],
}

impl AffineModel {
    pub fn new(cfg: &PlantConfig) -> Self {
        let h = cfg.h;
        let (a0, b0) = build_matrices(&[0.0; NP], cfg);
        let mut phi = [[[0.0; NX]; NX]; NP + 1];
        let mut gam = [[[0.0; NU]; NX]; NP + 1];
        for r in 0..NX {
            for c in 0..NX {
                phi[0][r][c] = if r == c { 1.0 } else { 0.0 } + h * a0[r][c];
            }
            for c in 0..NU {
                gam[0][r][c] = h * b0[r][c];
            }
        }
        for i in 0..NP {
            let mut e = [0.0; NP];
            e[i] = 1.0;
            let (a, b) = build_matrices(&e, cfg);
            for r in 0..NX {
                for c in 0..NX {
                    phi[i + 1][r][c] = h * (a[r][c] - a0[r][c]);
                }
                for c in 0..NU {
                    gam[i + 1][r][c] = h * (b[r][c] - b0[r][c]);
                }
            }
        }
        AffineModel { phi, gam }
    }

    /// `Φᵢx + Γᵢu` for term `i` (0 = constant part).
    pub fn term(&self, i: usize, x: &State, u: &Wrench) -> State {
        let mut out = [0.0; NX];
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.phi[i][r][0] * x[0] + self.phi[i][r][1] * x[1];
            *o += self.gam[i][r].iter().zip(u).map(|(g, v)| g * v).sum::<f64>();
        }
        out
    }

    /// Prediction without friction and disturbance.
    pub fn predict(&self, x: &State, u: &Wrench, rho: &Params) -> State {
        let mut out = self.term(0, x, u);
        for i in 0..NP {
            let t = self.term(i + 1, x, u);
            out[0] += rho[i] * t[0];
            out[1] += rho[i] * t[1];
        }
        out
    }

    /// Closed-loop `Φ(ρ) + Γ(ρ)K` for `u = Kx`.
    pub fn closed_loop(&self, rho: &Params, k: &[[f64; NX]; NU]) -> Mat2 {
        let mut out = [[0.0; NX]; NX];
        for i in 0..=NP {
            let w = if i == 0 { 1.0 } else { rho[i - 1] };
            for r in 0..NX {
                for c in 0..NX {
                    let gk: f64 = (0..NU).map(|j| self.gam[i][r][j] * k[j][c]).sum();
                    out[r][c] += w * (self.phi[i][r][c] + gk);
                }
            }
        }
        out
    }
}

/// Friction contribution to the next state: `[0, h·τ_f/M]`.
pub fn friction_offset(theta_dot: f64, cfg: &PlantConfig) -> State {
    [0.0, cfg.h * coulomb_friction(theta_dot, cfg) / cfg.inertia()]
}

pub fn step_truth(
    x: &State,
    u: &Wrench,
    k: usize,
    w: &State,
    cfg: &PlantConfig,
    schedule: &TruthSchedule,
) -> Result<State, &'static str> {
    let rho = true_params(schedule, k);
    let (a, b) = build_matrices(&rho, cfg);
    let f = friction_offset(x[1], cfg);
    let mut out = [0.0; NX];
    for r in 0..NX {
        let ax = a[r][0] * x[0] + a[r][1] * x[1];
        let bu: f64 = b[r].iter().zip(u).map(|(p, q)| p * q).sum();
        out[r] = x[r] + cfg.h * (ax + bu) + f[r] + w[r];
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err("non-finite state")
    }
}

/// Uniform on `[−δ, δ]` in the `θ̇` channel, zero in `θ`.
pub fn sample_disturbance<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> State {
    if delta <= 0.0 {
        return [0.0, 0.0];
    }
    [0.0, rng.random_range(-delta..=delta)]
}
