//! Robust adaptive tube MPC.
//!
//! The tube is `z ⊕ ϑ𝕏₀` with `u = Kx + v`. Inclusion of the successor set
//! is encoded with non-negative multipliers `Γ` (LP duality over the
//! parameter template), so the per-step problem is a single LP.

mod assemble;
pub mod terminal;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use assemble::{
    assemble_step_lp, closed_loop_terms, exploration_term, push_inclusion, Layout, StageData, StageSets, StepVars,
};

use crate::estimator::{predict_param_sets, ParamSet};
use crate::lp::{LpSolver, LpStatus};
use crate::plant::{AffineModel, Mat2, Params, PlantConfig, State, Wrench, NP, NU, NX};
use crate::polytope::{dot, PolyError, Polytope};
use terminal::{max_control_invariant, scale_interval, InvariantSet, ReachModel, TerminalError};

pub type Gain = [[f64; NX]; NU];

/// Cross-section template `{x | Hx ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum Template {
    Box { half_widths: [f64; 2] },
    Rows { rows: Vec<[f64; 2]> },
}

impl Template {
    pub fn polytope(&self) -> Polytope {
        match self {
            Template::Box { half_widths: [a, b] } => {
                Polytope::from_rows(&[&[1.0 / a, 0.0], &[0.0, 1.0 / b], &[-1.0 / a, 0.0], &[0.0, -1.0 / b]], &[1.0; 4])
                    .expect("planar rows")
            }
            Template::Rows { rows } => {
                let r: Vec<&[f64]> = rows.iter().map(|r| &r[..]).collect();
                Polytope::from_rows(&r, &vec![1.0; rows.len()]).expect("planar rows")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TerminalMode {
    /// Stage-N tube inside the maximal robust control invariant polygon.
    Invariant,
    /// `z_N = 0`, `ϑ_N ≤ ϑ̄` with `ϑ̄𝕏₀` robust positively invariant under `K`.
    Scaled,
}

/// Box-type constraint tier.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Limits {
    pub theta: [f64; 2],
    pub theta_dot: [f64; 2],
    /// `|f_i|` bound (N).
    pub force: f64,
    /// `|τ_i|` bound (N·m).
    pub torque: f64,
    /// `|τ_h|` bound on the effective hinge torque, if enforced.
    #[cfg_attr(feature = "serde", serde(default))]
    pub hinge_torque: Option<f64>,
}

impl Limits {
    pub fn algorithm() -> Self {
        Limits { theta: [-0.7, 0.7], theta_dot: [-0.2, 0.2], force: 20.0, torque: 2.0, hinge_torque: Some(2.0) }
    }

    pub fn hardware() -> Self {
        Limits { theta: [-1.57, 1.57], theta_dot: [-0.5, 0.5], force: 50.0, torque: 10.0, hinge_torque: None }
    }

    /// True iff every bound of `self` lies strictly inside `outer`.
    pub fn strictly_inside(&self, outer: &Limits) -> bool {
        let iv = |a: [f64; 2], b: [f64; 2]| a[0] > b[0] && a[1] < b[1];
        let hinge = match (self.hinge_torque, outer.hinge_torque) {
            (_, None) => true,
            (Some(a), Some(b)) => a < b,
            (None, Some(_)) => false,
        };
        iv(self.theta, outer.theta)
            && iv(self.theta_dot, outer.theta_dot)
            && self.force < outer.force
            && self.torque < outer.torque
            && hinge
    }

    /// Largest violation (0 when inside).
    pub fn violation(&self, x: &State, u: &Wrench, tau_h: f64) -> f64 {
        let mut v: f64 = 0.0;
        v = v.max(self.theta[0] - x[0]).max(x[0] - self.theta[1]);
        v = v.max(self.theta_dot[0] - x[1]).max(x[1] - self.theta_dot[1]);
        for &f in &u[..3] {
            v = v.max(f.abs() - self.force);
        }
        for &t in &u[3..] {
            v = v.max(t.abs() - self.torque);
        }
        if let Some(b) = self.hinge_torque {
            v = v.max(tau_h.abs() - b);
        }
        v
    }

    /// Bound on the effective hinge torque reachable without using `f_x`.
    pub fn effective_torque(&self) -> f64 {
        self.hinge_torque.unwrap_or(self.force + self.torque)
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.theta[0] < 0.0 && self.theta[1] > 0.0) {
            return Err("theta");
        }
        if !(self.theta_dot[0] < 0.0 && self.theta_dot[1] > 0.0) {
            return Err("theta_dot");
        }
        if !(self.force > 0.0 && self.torque > 0.0 && self.hinge_torque.is_none_or(|b| b > 0.0)) {
            return Err("input bounds");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MpcConfig {
    pub horizon: usize,
    pub explore_horizon: usize,
    /// Rows map the state to `f_x, f_y, f_z, τ_x, τ_y, τ_z`.
    pub gain: Gain,
    pub q: [f64; NX],
    pub r: [f64; NU],
    pub upsilon: [f64; NP],
    pub template: Template,
    pub terminal: TerminalMode,
    pub lambda: f64,
    /// Multiplier on the stage-N state penalty.
    pub terminal_weight: f64,
    /// Tightening applied to every constraint row of the LP.
    pub margin: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            horizon: 6,
            explore_horizon: 6,
            gain: [[0.0; NX]; NU],
            q: [1.47, 1.35],
            r: [0.94, 1.0, 0.97, 0.97, 0.97, 0.97],
            upsilon: [1.15, 1.25, 1.20],
            template: Template::Box { half_widths: [0.8, 0.25] },
            terminal: TerminalMode::Invariant,
            lambda: 0.95,
            terminal_weight: 100.0,
            margin: 1e-6,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.horizon == 0 {
            return Err("mpc.horizon");
        }
        if self.explore_horizon == 0 || self.explore_horizon > self.horizon {
            return Err("mpc.explore_horizon");
        }
        if self.q.iter().any(|v| !(*v > 0.0)) {
            return Err("mpc.q");
        }
        if self.r.iter().any(|v| !(*v > 0.0)) {
            return Err("mpc.r");
        }
        if self.upsilon.iter().any(|v| !(*v >= 0.0)) {
            return Err("mpc.upsilon");
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err("mpc.lambda");
        }
        if !(self.terminal_weight >= 1.0) {
            return Err("mpc.terminal_weight");
        }
        if !(self.margin >= 0.0 && self.margin < 1e-2) {
            return Err("mpc.margin");
        }
        if self.gain.iter().flatten().any(|v| !v.is_finite()) {
            return Err("mpc.gain");
        }
        let t = self.template.polytope();
        match t.bounds() {
            Ok(b) if b.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite() && *lo < 0.0 && *hi > 0.0) => Ok(()),
            _ => Err("mpc.template"),
        }
    }
}

/// One constraint row `f·x + (g₀ + 𝒟 g₁)·u ≤ b` of ℤ.
#[derive(Clone, Debug, PartialEq)]
pub struct ZRow {
    pub f: [f64; NX],
    pub g0: [f64; NU],
    pub g1: [f64; NU],
    pub b: f64,
}

impl ZRow {
    pub fn state_only(&self) -> bool {
        self.g0.iter().chain(&self.g1).all(|v| *v == 0.0)
    }

    /// Row coefficients for a fixed moment arm.
    pub fn at(&self, arm: f64) -> ([f64; NX], [f64; NU]) {
        let mut g = self.g0;
        for (gi, g1) in g.iter_mut().zip(&self.g1) {
            *gi += arm * g1;
        }
        (self.f, g)
    }

    pub fn depends_on_arm(&self) -> bool {
        self.g1.iter().any(|v| *v != 0.0)
    }
}

pub fn constraint_rows(limits: &Limits) -> Vec<ZRow> {
    let mut out = Vec::new();
    let mut push = |f: [f64; NX], g0: [f64; NU], g1: [f64; NU], b: f64| out.push(ZRow { f, g0, g1, b });
    let z = [0.0; NU];
    push([1.0, 0.0], z, z, limits.theta[1]);
    push([-1.0, 0.0], z, z, -limits.theta[0]);
    push([0.0, 1.0], z, z, limits.theta_dot[1]);
    push([0.0, -1.0], z, z, -limits.theta_dot[0]);
    for ch in 0..NU {
        let b = if ch < 3 { limits.force } else { limits.torque };
        for s in [1.0, -1.0] {
            let mut g = [0.0; NU];
            g[ch] = s;
            push([0.0; NX], g, z, b);
        }
    }
    if let Some(b) = limits.hinge_torque {
        for s in [1.0, -1.0] {
            let mut g0 = [0.0; NU];
            g0[1] = -s;
            g0[5] = s;
            let mut g1 = [0.0; NU];
            g1[0] = -s;
            push([0.0; NX], g0, g1, b);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub enum TerminalSet {
    Invariant { set: InvariantSet, polytope: Polytope },
    Scaled { theta_bar: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    Invalid(&'static str),
    Poly(PolyError),
    Terminal(TerminalError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Invalid(s) => write!(f, "invalid field `{s}`"),
            ConfigError::Poly(e) => write!(f, "{e}"),
            ConfigError::Terminal(TerminalError::Empty) => f.write_str("terminal set is empty"),
            ConfigError::Terminal(TerminalError::NotConverged) => {
                f.write_str("terminal set iteration did not converge")
            }
            ConfigError::Terminal(TerminalError::NoScale) => {
                f.write_str("no template scaling is invariant under the gain (terminal set empty)")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

impl From<PolyError> for ConfigError {
    fn from(e: PolyError) -> Self {
        ConfigError::Poly(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainReport {
    pub worst_radius: f64,
    pub worst_rho: Params,
    pub stable: bool,
}

fn spectral_radius(m: &Mat2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = libm::sqrt(disc);
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        libm::sqrt(det)
    }
}

/// Spectral radius of the closed loop over the vertices of `prior` and a
/// 5³ grid of its bounding box (grid points outside `prior` are skipped).
pub fn validate_gain(model: &AffineModel, k: &Gain, prior: &Polytope) -> Result<GainReport, PolyError> {
    let mut pts: Vec<Params> = prior.vertices()?.into_iter().map(|v| [v[0], v[1], v[2]]).collect();
    let b = prior.bounds()?;
    for i in 0..5 {
        for j in 0..5 {
            for l in 0..5 {
                let g = |t: usize, (lo, hi): (f64, f64)| lo + (hi - lo) * t as f64 / 4.0;
                let p = [g(i, b[0]), g(j, b[1]), g(l, b[2])];
                if prior.contains(&p) {
                    pts.push(p);
                }
            }
        }
    }
    let mut rep = GainReport { worst_radius: 0.0, worst_rho: [0.0; NP], stable: true };
    for p in pts {
        let r = spectral_radius(&model.closed_loop(&p, k));
        if r > rep.worst_radius {
            rep.worst_radius = r;
            rep.worst_rho = p;
        }
    }
    rep.stable = rep.worst_radius < 1.0;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportBounds {
    /// `max over 𝕏₀ of [F + G(𝒟)K]ᵢ x` per constraint row, for the lower and
    /// upper moment-arm bound.
    pub fbar: Vec<[f64; 2]>,
    /// `max over 𝕎 of [H_x]ⱼ w`.
    pub wbar: Vec<f64>,
}

/// Offline data for one controller instance.
#[derive(Clone, Debug)]
pub struct TubeController {
    pub cfg: MpcConfig,
    pub model: AffineModel,
    pub template: Polytope,
    pub template_vertices: Vec<State>,
    pub zrows: Vec<ZRow>,
    /// Per-template-row disturbance support.
    pub wbar: Vec<f64>,
    /// Disturbance bound on `θ̇` (state units) used by the controller,
    /// covering the exogenous torque and the friction torque.
    pub w_ctrl: f64,
    /// Template rows whose successor depends on ρ.
    pub active_rows: Vec<usize>,
    pub terminal: TerminalSet,
    pub prior: Polytope,
}

/// Parameter vertices projected to distinct closed-loop matrices.
fn reach_model(model: &AffineModel, prior: &Polytope, limits: &Limits, w_ctrl: f64, margin: f64) -> Result<ReachModel, PolyError> {
    let mut phis: Vec<Mat2> = Vec::new();
    for v in prior.vertices()? {
        let rho = [v[0], v[1], v[2]];
        let phi = model.closed_loop(&rho, &[[0.0; NX]; NU]);
        if !phis.iter().any(|p| p == &phi) {
            phis.push(phi);
        }
    }
    // Effective torque enters through the τ_z column.
    let b = [model.gam[0][0][5], model.gam[0][1][5]];
    Ok(ReachModel { phis, b, tau_max: limits.effective_torque() - margin, w_max: w_ctrl })
}

impl TubeController {
    pub fn new(cfg: &MpcConfig, plant: &PlantConfig, limits: &Limits, prior: &Polytope) -> Result<Self, ConfigError> {
        cfg.validate().map_err(ConfigError::Invalid)?;
        plant.validate().map_err(ConfigError::Invalid)?;
        limits.validate().map_err(ConfigError::Invalid)?;
        let model = AffineModel::new(plant);
        let template = cfg.template.polytope();
        let template_vertices: Vec<State> = template.vertices()?.into_iter().map(|v| [v[0], v[1]]).collect();
        let zrows = constraint_rows(limits);
        let w_ctrl = plant.h * (plant.w_bound + plant.friction_bound()) / plant.inertia();
        let wbar = (0..template.num_rows()).map(|l| template.row(l)[1].abs() * w_ctrl).collect();
        let active_rows = (0..template.num_rows())
            .filter(|&l| {
                let c = template.row(l);
                (1..=NP).any(|i| {
                    let hp = (0..NX).any(|col| c[0] * model.phi[i][0][col] + c[1] * model.phi[i][1][col] != 0.0);
                    let hg = (0..NU).any(|col| c[0] * model.gam[i][0][col] + c[1] * model.gam[i][1][col] != 0.0);
                    hp || hg
                })
            })
            .collect();
        let prior = prior.normalized();
        let mut ctl = TubeController {
            cfg: cfg.clone(),
            model,
            template,
            template_vertices,
            zrows,
            wbar,
            w_ctrl,
            active_rows,
            terminal: TerminalSet::Scaled { theta_bar: 0.0 },
            prior,
        };
        ctl.terminal = match cfg.terminal {
            TerminalMode::Invariant => {
                let m = reach_model(&ctl.model, &ctl.prior, limits, w_ctrl, cfg.margin)?;
                let lo = [limits.theta[0] + cfg.margin, limits.theta_dot[0] + cfg.margin];
                let hi = [limits.theta[1] - cfg.margin, limits.theta_dot[1] - cfg.margin];
                let set = max_control_invariant(lo, hi, &m, 20_000).map_err(ConfigError::Terminal)?;
                let polytope = set.polygon.to_polytope();
                TerminalSet::Invariant { set, polytope }
            }
            TerminalMode::Scaled => TerminalSet::Scaled { theta_bar: ctl.terminal_scale()? },
        };
        Ok(ctl)
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    /// Reach model matching the invariant terminal set.
    pub fn reach_model(&self, limits: &Limits) -> Result<ReachModel, PolyError> {
        reach_model(&self.model, &self.prior, limits, self.w_ctrl, self.cfg.margin)
    }

    pub fn arm_range(&self) -> Result<(f64, f64), PolyError> {
        Ok(self.prior.bounds()?[2])
    }

    fn fbar_for(&self, row: &ZRow, arm: f64) -> f64 {
        let (f, g) = row.at(arm);
        let mut coef = f;
        for c in 0..NX {
            coef[c] += (0..NU).map(|j| g[j] * self.cfg.gain[j][c]).sum::<f64>();
        }
        self.template_vertices.iter().map(|x| dot(&coef, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `f̄` for one constraint row at a fixed moment arm.
    pub fn fbar(&self, row: usize, arm: f64) -> f64 {
        self.fbar_for(&self.zrows[row], arm)
    }

    pub fn support_bounds(&self) -> Result<SupportBounds, PolyError> {
        let (lo, hi) = self.arm_range()?;
        let fbar = self.zrows.iter().map(|r| [self.fbar_for(r, lo), self.fbar_for(r, hi)]).collect();
        let w = Polytope::from_box(&[0.0, -self.w_ctrl], &[0.0, self.w_ctrl]);
        let mut wbar = Vec::with_capacity(self.template.num_rows());
        for l in 0..self.template.num_rows() {
            wbar.push(w.support(self.template.row(l))?);
        }
        Ok(SupportBounds { fbar, wbar })
    }

    /// Largest `ϑ̄` with `ϑ̄𝕏₀` robust positively invariant and λ-contractive
    /// under `K` for every prior vertex, and `(x, Kx) ∈ ℤ` on it.
    pub fn terminal_scale(&self) -> Result<f64, ConfigError> {
        let verts = self.prior.vertices()?;
        let nrow = self.template.num_rows();
        let mut growth = vec![f64::NEG_INFINITY; nrow];
        for v in &verts {
            let acl = self.model.closed_loop(&[v[0], v[1], v[2]], &self.cfg.gain);
            for x in &self.template_vertices {
                let y = [acl[0][0] * x[0] + acl[0][1] * x[1], acl[1][0] * x[0] + acl[1][1] * x[1]];
                for (l, g) in growth.iter_mut().enumerate() {
                    *g = g.max(dot(self.template.row(l), &y));
                }
            }
        }
        let (lo, hi) = self.arm_range()?;
        let mut fbar = Vec::new();
        let mut bounds = Vec::new();
        for r in &self.zrows {
            for arm in [lo, hi] {
                fbar.push(self.fbar_for(r, arm));
                bounds.push(r.b);
            }
        }
        let (_, top) = scale_interval(&growth, &self.wbar, &fbar, &bounds, self.cfg.lambda).map_err(ConfigError::Terminal)?;
        Ok(top)
    }

    /// Builds the per-stage parameter data for one LP from the current set.
    pub fn stage_sets(&self, pset: &ParamSet) -> Result<StageSets, PolyError> {
        let n = self.cfg.horizon;
        let preds = predict_param_sets(pset, n);
        let nominal = StageData::from_polytope(pset.polytope(), &self.cfg.upsilon)?;
        let mut predicted = Vec::with_capacity(n);
        for (s, p) in preds.iter().enumerate() {
            let mut d = if s == 0 { nominal.clone() } else { StageData::from_polytope(p, &self.cfg.upsilon)? };
            if s >= self.cfg.explore_horizon {
                d.explore = 0.0;
            }
            predicted.push(d);
        }
        Ok(StageSets { nominal, predicted })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    SolverError,
}

#[derive(Clone, Debug)]
pub struct TubeSolution {
    pub status: SolveStatus,
    /// Tube over the current set `𝒫ₖ` (carries the cost).
    pub z: Vec<State>,
    pub theta: Vec<f64>,
    /// Tube over the predicted sets `𝒫̂_ς`.
    pub z_pred: Vec<State>,
    pub theta_pred: Vec<f64>,
    pub v: Vec<Wrench>,
    /// All multipliers in layout order.
    pub gamma: Vec<f64>,
    pub cost: f64,
}

impl TubeSolution {
    fn failed(status: SolveStatus) -> Self {
        TubeSolution {
            status,
            z: Vec::new(),
            theta: Vec::new(),
            z_pred: Vec::new(),
            theta_pred: Vec::new(),
            v: Vec::new(),
            gamma: Vec::new(),
            cost: f64::NAN,
        }
    }
}

/// Solves one step and returns `u = Kx + v₀` when feasible.
pub fn solve_step(ctl: &TubeController, x: &State, pset: &ParamSet, solver: &mut dyn LpSolver) -> (Option<Wrench>, TubeSolution) {
    let stages = match ctl.stage_sets(pset) {
        Ok(s) => s,
        Err(_) => return (None, TubeSolution::failed(SolveStatus::SolverError)),
    };
    solve_with_stages(ctl, x, &stages, pset.polytope(), solver)
}

pub fn solve_with_stages(
    ctl: &TubeController,
    x: &State,
    stages: &StageSets,
    set: &Polytope,
    solver: &mut dyn LpSolver,
) -> (Option<Wrench>, TubeSolution) {
    let (lp, layout) = assemble_step_lp(ctl, x, stages, set);
    let res = solver.solve(&lp);
    match res.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return (None, TubeSolution::failed(SolveStatus::Infeasible)),
        _ => return (None, TubeSolution::failed(SolveStatus::SolverError)),
    }
    let sol = layout.extract(&res.x, res.value);
    let mut u = sol.v[0];
    for (j, uj) in u.iter_mut().enumerate() {
        *uj += ctl.cfg.gain[j][0] * x[0] + ctl.cfg.gain[j][1] * x[1];
    }
    (Some(u), sol)
}
