//! Scenario definition, the closed-loop runner and log metrics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    adaptive_control, adaptive_update, ampc_no_explore, pid_step, AdaptiveGains, AdaptiveState, PidGains, PidState,
};
use crate::estimator::{nonfalsified_set, point_estimate, regressor, update_param_set, ParamSet, UpdateKind};
use crate::lp::LpSolver;
use crate::plant::{
    friction_offset, hinge_torque, sample_disturbance, step_truth, true_params, AffineModel, Params, PlantConfig,
    State, TruthSchedule, Wrench, NP, NU,
};
use crate::polytope::{dot, Polytope};
use crate::tube_mpc::{solve_step, ConfigError, Limits, MpcConfig, SolveStatus, TubeController};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EstimatorConfig {
    pub template_rows: usize,
    /// Per-step dilation budget `φ_ρ`.
    pub phi: f64,
    /// Dilation steps per update.
    pub sigma: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { template_rows: 45, phi: 0.03, sigma: 1 }
    }
}

/// Axis-aligned prior parameter box.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PriorBox {
    pub lo: Params,
    pub hi: Params,
}

impl Default for PriorBox {
    fn default() -> Self {
        PriorBox { lo: [0.2, 0.3, 1.5], hi: [0.8, 1.0, 3.5] }
    }
}

impl PriorBox {
    pub fn polytope(&self) -> Polytope {
        Polytope::from_box(&self.lo, &self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DisturbanceMode {
    /// Uniform on `𝕎`.
    Uniform,
    /// Random `𝕎` vertex each step.
    Vertex,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    Rampc,
    Ampc0,
    Pid,
    Adaptive,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] =
        [ControllerKind::Rampc, ControllerKind::Ampc0, ControllerKind::Pid, ControllerKind::Adaptive];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Rampc => "rampc",
            ControllerKind::Ampc0 => "ampc0",
            ControllerKind::Pid => "pid",
            ControllerKind::Adaptive => "adaptive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Scenario {
    pub steps: usize,
    pub seeds: usize,
    pub x0: State,
    pub rho_hat0: Params,
    pub disturbance: DisturbanceMode,
    pub plant: PlantConfig,
    pub schedule: TruthSchedule,
    pub prior: PriorBox,
    pub algorithm: Limits,
    pub hardware: Limits,
    pub mpc: MpcConfig,
    pub estimator: EstimatorConfig,
    pub pid: PidGains,
    pub adaptive: AdaptiveGains,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            steps: 800,
            seeds: 20,
            x0: [0.6, 0.2],
            rho_hat0: [0.2, 0.5, 2.0],
            disturbance: DisturbanceMode::Uniform,
            plant: PlantConfig::default(),
            schedule: TruthSchedule::default(),
            prior: PriorBox::default(),
            algorithm: Limits::algorithm(),
            hardware: Limits::hardware(),
            mpc: MpcConfig::default(),
            estimator: EstimatorConfig::default(),
            pid: PidGains::default(),
            adaptive: AdaptiveGains::default(),
        }
    }
}

impl Scenario {
    /// Field-level validation; the error names the offending field.
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.steps == 0 {
            return Err("steps");
        }
        if self.seeds == 0 {
            return Err("seeds");
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err("x0");
        }
        self.plant.validate()?;
        self.algorithm.validate().map_err(|_| "algorithm")?;
        self.hardware.validate().map_err(|_| "hardware")?;
        if !self.algorithm.strictly_inside(&self.hardware) {
            return Err("algorithm");
        }
        self.mpc.validate()?;
        if self.estimator.template_rows < 6 {
            return Err("estimator.template_rows");
        }
        if !(self.estimator.phi >= 0.0 && self.estimator.phi.is_finite()) {
            return Err("estimator.phi");
        }
        for i in 0..NP {
            if !(self.prior.lo[i] < self.prior.hi[i]) {
                return Err("prior");
            }
            if !(self.rho_hat0[i] >= self.prior.lo[i] && self.rho_hat0[i] <= self.prior.hi[i]) {
                return Err("rho_hat0");
            }
        }
        let s = [&self.schedule.stiffness, &self.schedule.viscous, &self.schedule.arm];
        for i in 0..NP {
            let a = s[i].amp.abs();
            if s[i].base - a < self.prior.lo[i] || s[i].base + a > self.prior.hi[i] {
                return Err("schedule");
            }
        }
        if self.schedule.max_step_change() > self.estimator.phi && self.estimator.phi > 0.0 {
            return Err("estimator.phi");
        }
        if self.pid.i_clamp < 0.0 {
            return Err("pid.i_clamp");
        }
        if !(self.adaptive.eta >= 0.0 && self.adaptive.arm_floor > 0.0 && self.adaptive.nu > 0.0) {
            return Err("adaptive");
        }
        Ok(())
    }

    /// MPC config and dilation budget for a controller kind.
    pub fn mpc_for(&self, kind: ControllerKind) -> (MpcConfig, f64) {
        match kind {
            ControllerKind::Ampc0 => ampc_no_explore(&self.mpc),
            _ => (self.mpc.clone(), self.estimator.phi),
        }
    }

    pub fn controller(&self, kind: ControllerKind) -> Result<TubeController, ConfigError> {
        let (mpc, _) = self.mpc_for(kind);
        TubeController::new(&mpc, &self.plant, &self.algorithm, &self.prior.polytope())
    }

    /// `𝕎` on the θ̇ channel as seen by the estimator (friction removed).
    pub fn w_est(&self) -> Polytope {
        let w = self.plant.w_state();
        Polytope::from_box(&[0.0, -w], &[0.0, w])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub k: usize,
    pub t: f64,
    pub x: State,
    pub u: Wrench,
    pub tau_h: f64,
    pub rho_true: Params,
    pub rho_hat: Params,
    pub lo: Params,
    pub hi: Params,
    pub feasible: bool,
    pub viol_algo: bool,
    pub viol_hw: bool,
    pub cost: f64,
    pub solve_ms: f64,
}

impl LogRow {
    pub fn set_width(&self) -> f64 {
        (0..NP).map(|i| self.hi[i] - self.lo[i]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    Infeasible { k: usize },
    Halted { k: usize },
    Failed { k: usize, reason: String },
}

impl RunStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Per-step diagnostics not part of the CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepCheck {
    /// `min(δ − H_ρ ρ*)`; negative means `ρ*` left the set.
    pub soundness_slack: f64,
    /// Largest template-row excess of `x_{k+1}` over `z₁ ⊕ ϑ₁𝕏₀`.
    pub tube_excess: f64,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub controller: ControllerKind,
    pub seed: u64,
    pub h: f64,
    pub rows: Vec<LogRow>,
    pub checks: Vec<StepCheck>,
    pub status: RunStatus,
}

/// Milliseconds from an external clock; the core crate has no timer.
pub trait Clock {
    fn now_ms(&mut self) -> f64;
}

pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&mut self) -> f64 {
        0.0
    }
}

enum Ctl {
    Tube { ctl: TubeController, set: ParamSet },
    Pid(PidState),
    Adaptive(AdaptiveState),
}

const NAN3: Params = [f64::NAN; NP];

/// Runs one closed-loop simulation. Deterministic in `(cfg, kind, seed)`
/// apart from `solve_ms`.
pub fn run_scenario(
    cfg: &Scenario,
    kind: ControllerKind,
    seed: u64,
    solver: &mut dyn LpSolver,
    clock: &mut dyn Clock,
) -> Result<TrajectoryLog, ConfigError> {
    cfg.validate().map_err(ConfigError::Invalid)?;
    let model = AffineModel::new(&cfg.plant);
    let mut ctl = match kind {
        ControllerKind::Rampc | ControllerKind::Ampc0 => {
            let (mpc, phi) = cfg.mpc_for(kind);
            let prior = cfg.prior.polytope();
            let ctl = TubeController::new(&mpc, &cfg.plant, &cfg.algorithm, &prior)?;
            let set = ParamSet::new(&prior, cfg.estimator.template_rows, phi)?;
            Ctl::Tube { ctl, set }
        }
        ControllerKind::Pid => Ctl::Pid(PidState::new(cfg.pid)),
        ControllerKind::Adaptive => {
            Ctl::Adaptive(AdaptiveState::new(cfg.adaptive, cfg.rho_hat0, cfg.prior.lo, cfg.prior.hi))
        }
    };
    let w_est = cfg.w_est();
    let w_bound = cfg.plant.w_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = TrajectoryLog {
        controller: kind,
        seed,
        h: cfg.plant.h,
        rows: Vec::with_capacity(cfg.steps),
        checks: Vec::with_capacity(cfg.steps),
        status: RunStatus::Completed,
    };
    let mut x = cfg.x0;
    for k in 0..cfg.steps {
        let rho_true = true_params(&cfg.schedule, k);
        let mut check = StepCheck::default();
        let (rho_hat, lo, hi) = match &ctl {
            Ctl::Tube { set, .. } => {
                check.soundness_slack = set.polytope().slack(&rho_true);
                let b = set.axis_bounds();
                let c = point_estimate(set).unwrap_or(NAN3);
                (c, [b[0].0, b[1].0, b[2].0], [b[0].1, b[1].1, b[2].1])
            }
            Ctl::Pid(_) => (NAN3, NAN3, NAN3),
            Ctl::Adaptive(a) => (a.rho_hat, a.lo, a.hi),
        };
        let t0 = clock.now_ms();
        let mut tube = None;
        let (u, feasible, cost) = match &mut ctl {
            Ctl::Tube { ctl, set } => {
                let (u, sol) = solve_step(ctl, &x, set, solver);
                match u {
                    Some(u) => {
                        let z1 = sol.z[1];
                        tube = Some((z1, sol.theta[1]));
                        (u, true, sol.cost)
                    }
                    None => {
                        log.status = if sol.status == SolveStatus::Infeasible {
                            RunStatus::Infeasible { k }
                        } else {
                            RunStatus::Failed { k, reason: String::from("solver error") }
                        };
                        ([0.0; NU], false, f64::NAN)
                    }
                }
            }
            Ctl::Pid(p) => (pid_step(&x, 0.0, p, cfg.plant.h), true, f64::NAN),
            Ctl::Adaptive(a) => (adaptive_control(&x, &[0.0, 0.0], a, &cfg.plant), true, f64::NAN),
        };
        let solve_ms = clock.now_ms() - t0;
        let tau_h = hinge_torque(&u, rho_true[2]);
        let viol_algo = cfg.algorithm.violation(&x, &u, tau_h) > 1e-9;
        let viol_hw = cfg.hardware.violation(&x, &u, tau_h) > 1e-9;
        log.rows.push(LogRow {
            k,
            t: k as f64 * cfg.plant.h,
            x,
            u,
            tau_h,
            rho_true,
            rho_hat,
            lo,
            hi,
            feasible,
            viol_algo,
            viol_hw,
            cost,
            solve_ms,
        });
        if !feasible {
            log.checks.push(check);
            break;
        }
        if viol_hw {
            log.checks.push(check);
            log.status = RunStatus::Halted { k };
            break;
        }
        let w = match cfg.disturbance {
            DisturbanceMode::Uniform => sample_disturbance(&mut rng, w_bound),
            DisturbanceMode::Vertex => {
                let s = if rand::Rng::random_bool(&mut rng, 0.5) { 1.0 } else { -1.0 };
                [0.0, s * w_bound]
            }
            DisturbanceMode::None => [0.0, 0.0],
        };
        let x_next = match step_truth(&x, &u, k, &w, &cfg.plant, &cfg.schedule) {
            Ok(v) => v,
            Err(e) => {
                log.checks.push(check);
                log.status = RunStatus::Failed { k, reason: String::from(e) };
                break;
            }
        };
        let f = friction_offset(x[1], &cfg.plant);
        let x_corr = [x_next[0] - f[0], x_next[1] - f[1]];
        match &mut ctl {
            Ctl::Tube { ctl, set } => {
                if let Some((z1, th1)) = tube {
                    let d = [x_next[0] - z1[0], x_next[1] - z1[1]];
                    check.tube_excess = (0..ctl.template.num_rows())
                        .map(|l| dot(ctl.template.row(l), &d) - th1 * ctl.template.offsets()[l])
                        .fold(f64::NEG_INFINITY, f64::max);
                }
                let delta = nonfalsified_set(&regressor(&model, &x, &u, &x_corr), &w_est);
                match update_param_set(set, &delta, cfg.estimator.sigma) {
                    Ok((next, kind)) => {
                        check.fallback = kind == UpdateKind::DilationOnly;
                        *set = next;
                    }
                    Err(e) => {
                        log.checks.push(check);
                        log.status = RunStatus::Failed { k, reason: alloc::format!("estimator: {e}") };
                        break;
                    }
                }
            }
            Ctl::Adaptive(a) => adaptive_update(a, &model, &x, &u, &x_corr),
            Ctl::Pid(_) => {}
        }
        log.checks.push(check);
        x = x_next;
    }
    Ok(log)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// `‖x* − x_K‖₂` with `x* = 0`.
    pub e_x: f64,
    pub e_rho: Vec<f64>,
    /// Mean of the finite entries of `e_rho` (NaN when none).
    pub e_rho_avg: f64,
    /// First time after which `‖x‖∞` stays within 5% of `‖x₀‖∞`.
    pub settling_time: Option<f64>,
    /// First time `‖x‖∞ ≤ 0.05`.
    pub reach_time: Option<f64>,
    pub viol_algo: usize,
    pub viol_hw: usize,
    pub mean_solve_ms: f64,
    pub width_initial: f64,
    pub width_final: f64,
}

fn inf_norm(x: &State) -> f64 {
    x[0].abs().max(x[1].abs())
}

/// Total set width at time `t` (nearest earlier row).
pub fn width_at(log: &TrajectoryLog, t: f64) -> Option<f64> {
    log.rows.iter().rev().find(|r| r.t <= t + 1e-9).map(|r| r.set_width())
}

pub fn settling_time(log: &TrajectoryLog, frac: f64) -> Option<f64> {
    if log.rows.len() < 2 {
        return None;
    }
    let band = frac * inf_norm(&log.rows[0].x);
    let last_out = log.rows.iter().rposition(|r| inf_norm(&r.x) > band);
    match last_out {
        None => Some(0.0),
        Some(i) if i + 1 < log.rows.len() => Some(log.rows[i + 1].t),
        Some(_) => None,
    }
}

pub fn metrics(log: &TrajectoryLog) -> Metrics {
    let e_rho: Vec<f64> = log
        .rows
        .iter()
        .map(|r| {
            let s: f64 = (0..NP).map(|i| (r.rho_true[i] - r.rho_hat[i]) * (r.rho_true[i] - r.rho_hat[i])).sum();
            libm::sqrt(s)
        })
        .collect();
    let finite: Vec<f64> = e_rho.iter().copied().filter(|v| v.is_finite()).collect();
    let e_rho_avg = if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    let last = log.rows.last();
    let e_x = last.map(|r| libm::sqrt(r.x[0] * r.x[0] + r.x[1] * r.x[1])).unwrap_or(f64::NAN);
    let n = log.rows.len().max(1) as f64;
    Metrics {
        e_x,
        e_rho,
        e_rho_avg,
        settling_time: settling_time(log, 0.05),
        reach_time: log.rows.iter().find(|r| inf_norm(&r.x) <= 0.05).map(|r| r.t),
        viol_algo: log.rows.iter().filter(|r| r.viol_algo).count(),
        viol_hw: log.rows.iter().filter(|r| r.viol_hw).count(),
        mean_solve_ms: log.rows.iter().map(|r| r.solve_ms).sum::<f64>() / n,
        width_initial: log.rows.first().map(|r| r.set_width()).unwrap_or(f64::NAN),
        width_final: last.map(|r| r.set_width()).unwrap_or(f64::NAN),
    }
}
