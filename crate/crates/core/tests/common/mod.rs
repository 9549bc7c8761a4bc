#![allow(dead_code)]

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rampc_core::estimator::{nonfalsified_set, regressor, template_directions, update_param_set, ParamSet, UpdateKind};
use rampc_core::plant::{AffineModel, Params, PlantConfig, State, Wrench};
use rampc_core::polytope::Polytope;

/// `max d·x` over `{x | a_i·x ≤ b_i}` with an off-the-shelf sparse simplex.
/// `None` when infeasible, `+∞` when unbounded.
pub fn support_oracle(rows: &[Vec<f64>], rhs: &[f64], d: &[f64]) -> Option<f64> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = d.iter().map(|c| p.add_var(*c, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for (r, b) in rows.iter().zip(rhs) {
        let expr: Vec<_> = r.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, a)| (vars[j], *a)).collect();
        p.add_constraint(expr, ComparisonOp::Le, *b);
    }
    match p.solve() {
        Ok(SolveOutcome::Solution(s)) => Some(s.objective()),
        Err(microlp::Error::Unbounded) => Some(f64::INFINITY),
        Err(microlp::Error::Infeasible) => None,
        other => panic!("oracle solver failed: {other:?}"),
    }
}

/// Brute-force vertex list of a 3-D H-polytope via Cramer's rule on every
/// row triple.
pub fn vertices3(rows: &[[f64; 3]], rhs: &[f64], tol: f64) -> Vec<[f64; 3]> {
    let det = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
    };
    let m = rows.len();
    let mut out: Vec<[f64; 3]> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let (a, b, c) = (rows[i], rows[j], rows[k]);
                let d = det(a, b, c);
                if d.abs() < 1e-10 {
                    continue;
                }
                let r = [rhs[i], rhs[j], rhs[k]];
                let col = |n: usize| {
                    let mut aa = [a, b, c];
                    for q in 0..3 {
                        aa[q][n] = r[q];
                    }
                    det(aa[0], aa[1], aa[2]) / d
                };
                let x = [col(0), col(1), col(2)];
                let inside = rows.iter().zip(rhs).all(|(a, b)| a[0] * x[0] + a[1] * x[1] + a[2] * x[2] <= b + tol);
                if inside && !out.iter().any(|v| (0..3).all(|q| (v[q] - x[q]).abs() < 1e-9)) {
                    out.push(x);
                }
            }
        }
    }
    out
}

pub const LO: [f64; 3] = [0.2, 0.3, 1.5];
pub const HI: [f64; 3] = [0.8, 1.0, 3.5];

pub fn prior() -> Polytope {
    Polytope::from_box(&LO, &HI)
}

pub struct Instance {
    pub set: ParamSet,
    pub delta: Polytope,
    pub sigma: usize,
}

pub fn box_support(d: &[f64; 3], c: &[f64; 3], h: &[f64; 3]) -> f64 {
    (0..3).map(|i| d[i] * c[i] + d[i].abs() * h[i]).sum()
}

pub fn transition(rng: &mut ChaCha8Rng, model: &AffineModel, rho: &Params, w_max: f64) -> (State, Wrench, State) {
    let x = [rng.random_range(-0.7..0.7), rng.random_range(-0.2..0.2)];
    let mut u = [0.0; 6];
    for (j, v) in u.iter_mut().enumerate() {
        let b = if j < 3 { 20.0 } else { 2.0 };
        *v = rng.random_range(-b..b);
    }
    let mut xn = model.predict(&x, &u, rho);
    xn[1] += rng.random_range(-w_max..w_max);
    (x, u, xn)
}

pub fn estimator_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plant = PlantConfig::default();
    let model = AffineModel::new(&plant);
    let phi = if rng.random_bool(0.5) { 0.03 } else { rng.random_range(0.0..0.06) };
    let mut set = ParamSet::new(&prior(), 45, phi).unwrap();
    let c: [f64; 3] = core::array::from_fn(|i| rng.random_range(LO[i]..HI[i]));
    let h: [f64; 3] = core::array::from_fn(|i| rng.random_range(0.01..0.5) * (HI[i] - LO[i]));
    let off = template_directions(45).iter().map(|d| box_support(d, &c, &h)).collect();
    set.set_offsets(off);
    let inside = rng.random_bool(0.8);
    let rho: Params = if inside {
        core::array::from_fn(|i| c[i] + rng.random_range(-1.0..1.0) * h[i])
    } else {
        core::array::from_fn(|i| rng.random_range(LO[i] - 0.3..HI[i] + 0.3))
    };
    let w_max = plant.w_state();
    let (x, u, xn) = transition(&mut rng, &model, &rho, w_max);
    let w = Polytope::from_box(&[0.0, -w_max], &[0.0, w_max]);
    let delta = nonfalsified_set(&regressor(&model, &x, &u, &xn), &w);
    Instance { set, delta, sigma: rng.random_range(0..3) }
}

/// Independent construction of the updated set's H-form followed by one
/// support LP per template direction.
pub fn oracle_offsets(inst: &Instance) -> (Vec<f64>, bool) {
    let s = inst.sigma as f64 * inst.set.phi;
    let dirs = template_directions(45);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for (d, o) in dirs.iter().zip(inst.set.offsets()) {
        rows.push(d.to_vec());
        rhs.push(o + s);
    }
    for i in 0..3 {
        let mut e = vec![0.0; 3];
        e[i] = 1.0;
        rows.push(e.clone());
        rhs.push(HI[i]);
        e[i] = -1.0;
        rows.push(e);
        rhs.push(-LO[i]);
    }
    let base = (rows.clone(), rhs.clone());
    let mut empty_data = false;
    for j in 0..inst.delta.num_rows() {
        let r = inst.delta.row(j);
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let b = inst.delta.offsets()[j];
        if n <= 1e-12 {
            empty_data |= b < -1e-12;
            continue;
        }
        rows.push(r.iter().map(|v| v / n).collect());
        rhs.push(b / n + s);
    }
    let sup = |rows: &[Vec<f64>], rhs: &[f64]| -> Option<Vec<f64>> {
        dirs.iter().map(|d| support_oracle(rows, rhs, d)).collect()
    };
    if !empty_data {
        if let Some(v) = sup(&rows, &rhs) {
            return (v, true);
        }
    }
    (sup(&base.0, &base.1).expect("dilated set is non-empty"), false)
}

/// Outcome of one template-update comparison.
pub struct UpdateCheck {
    pub branch_agrees: bool,
    pub intersected: bool,
    pub rel_err: f64,
    pub abs_err: f64,
}

pub fn check_update(seed: u64) -> UpdateCheck {
    let inst = estimator_instance(seed);
    let (next, kind) = update_param_set(&inst.set, &inst.delta, inst.sigma).expect("update");
    let (want, hit) = oracle_offsets(&inst);
    let pairs = || next.offsets().iter().zip(&want);
    let rel_err = pairs().map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
    let abs_err = pairs().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    UpdateCheck { branch_agrees: (kind == UpdateKind::Intersected) == hit, intersected: hit, rel_err, abs_err }
}

use rampc_core::harness::{ControllerKind, Scenario};
use rampc_core::lp::{solve_lp, LpProblem, LpStatus};
use rampc_core::tube_mpc::{closed_loop_terms, push_inclusion, StageData, StepVars, TubeController};

pub fn default_controller() -> TubeController {
    Scenario::default().controller(ControllerKind::Rampc).expect("default controller")
}

/// Random 45-row parameter set: template supports of a random point cloud,
/// some rows loosened so they become redundant.
pub fn random_param_set(rng: &mut ChaCha8Rng) -> Polytope {
    let n_pts = rng.random_range(1..7);
    let pts: Vec<[f64; 3]> = (0..n_pts)
        .map(|_| core::array::from_fn(|i| rng.random_range(LO[i]..HI[i])))
        .collect();
    let jitter = rng.random_range(0.005..0.08);
    let loosen = rng.random_bool(0.5);
    let dirs = template_directions(45);
    let off: Vec<f64> = dirs
        .iter()
        .map(|d| {
            let s = pts.iter().map(|p| d[0] * p[0] + d[1] * p[1] + d[2] * p[2]).fold(f64::NEG_INFINITY, f64::max);
            let extra = if loosen && rng.random_bool(0.3) { rng.random_range(0.0..0.1) } else { 0.0 };
            s + jitter + extra
        })
        .collect();
    let normals = dirs.iter().flat_map(|d| d.iter().copied()).collect();
    Polytope::new(3, normals, off).unwrap()
}

pub struct InclusionCase {
    pub expected: bool,
    pub got: bool,
    pub n_facets: usize,
}

/// One step of the tube: checks the multiplier form of the inclusion
/// against explicit propagation of every (tube vertex, parameter vertex) pair.
pub fn check_inclusion(ctl: &TubeController, seed: u64) -> InclusionCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = random_param_set(&mut rng);
    let dirs: Vec<[f64; 3]> = (0..45).map(|l| [set.row(l)[0], set.row(l)[1], set.row(l)[2]]).collect();
    let rho_verts = vertices3(&dirs, set.offsets(), 1e-9);
    let z: State = [rng.random_range(-0.7..0.7), rng.random_range(-0.2..0.2)];
    let theta = rng.random_range(0.0..0.4);
    let mut v = [0.0; 6];
    for (j, x) in v.iter_mut().enumerate() {
        let b = if j < 3 { 20.0 } else { 2.0 };
        *x = rng.random_range(-b..b);
    }
    let rho_c: Params = core::array::from_fn(|i| rho_verts.iter().map(|p| p[i]).sum::<f64>() / rho_verts.len() as f64);
    let mut zn = ctl.model.predict(&z, &v, &rho_c);
    zn[0] += rng.random_range(-0.01..0.01);
    zn[1] += rng.random_range(-0.01..0.01);

    // Smallest admissible next scale by explicit propagation.
    let tpl = &ctl.template;
    let mut need = f64::NEG_INFINITY;
    for xv in &ctl.template_vertices {
        let x = [z[0] + theta * xv[0], z[1] + theta * xv[1]];
        for r in &rho_verts {
            let y = ctl.model.predict(&x, &v, r);
            for l in 0..tpl.num_rows() {
                let c = tpl.row(l);
                let lhs = c[0] * (y[0] - zn[0]) + c[1] * (y[1] - zn[1]) + ctl.wbar[l];
                need = need.max(lhs / tpl.offsets()[l]);
            }
        }
    }
    let mag = 10f64.powf(rng.random_range(-6.0..-2.0)) * need.abs().max(0.01);
    let feasible = rng.random_bool(0.5) || need - mag < 0.0;
    let theta_next = if feasible { need + mag } else { need - mag };

    let mut lp = LpProblem::new();
    let fixed = |lp: &mut LpProblem, x: f64| lp.add_var(x, x, 0.0);
    let zi = fixed(&mut lp, z[0]);
    fixed(&mut lp, z[1]);
    let ti = fixed(&mut lp, theta);
    let zni = fixed(&mut lp, zn[0]);
    fixed(&mut lp, zn[1]);
    let tni = fixed(&mut lp, theta_next);
    let vi = fixed(&mut lp, v[0]);
    for x in &v[1..] {
        fixed(&mut lp, *x);
    }
    let stage = StageData::from_polytope(&set, &ctl.cfg.upsilon).expect("stage data");
    let vars = StepVars { z: zi, theta: ti, z_next: zni, theta_next: tni, v: vi };
    push_inclusion(&mut lp, ctl, &closed_loop_terms(ctl), &stage, &set, vars, 0.0);
    let got = match solve_lp(&lp).status {
        LpStatus::Optimal => true,
        LpStatus::Infeasible => false,
        s => panic!("seed {seed}: solver status {s:?}"),
    };
    InclusionCase { expected: feasible, got, n_facets: stage.rows.len() }
}

use rampc_core::lp::{LpResult, LpSolver, Sense};

/// Sparse simplex from the `microlp` crate behind the core solver trait.
pub struct MicroLp;

impl LpSolver for MicroLp {
    fn solve(&mut self, p: &LpProblem) -> LpResult {
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..p.num_vars()).map(|j| prob.add_var(p.cost[j], (p.lower[j], p.upper[j]))).collect();
        for r in &p.rows {
            let expr: Vec<_> = r.coef.iter().map(|&(j, v)| (vars[j], v)).collect();
            let op = if r.sense == Sense::Le { ComparisonOp::Le } else { ComparisonOp::Eq };
            prob.add_constraint(expr, op, r.rhs);
        }
        match prob.solve() {
            Ok(SolveOutcome::Solution(sol)) => {
                let x: Vec<f64> = vars.iter().map(|v| sol.var_value(*v)).collect();
                let value = p.objective(&x);
                LpResult { status: LpStatus::Optimal, x, value }
            }
            Err(microlp::Error::Infeasible) => LpResult::failed(LpStatus::Infeasible),
            Err(microlp::Error::Unbounded) => LpResult::failed(LpStatus::Unbounded),
            _ => LpResult::failed(LpStatus::SolverError),
        }
    }
}

/// Worst excursion of the terminal polygon under one admissible input per
/// vertex, found by an LP per vertex over every prior-box corner and both
/// disturbance signs.
pub fn terminal_gap_oracle(ctl: &TubeController, corners: &[[f64; 3]], tau_max: f64) -> f64 {
    let poly = match &ctl.terminal {
        rampc_core::tube_mpc::TerminalSet::Invariant { polytope, .. } => polytope.clone(),
        _ => panic!("invariant terminal expected"),
    };
    let verts = match &ctl.terminal {
        rampc_core::tube_mpc::TerminalSet::Invariant { set, .. } => set.polygon.vertices.clone(),
        _ => unreachable!(),
    };
    let mut worst = f64::NEG_INFINITY;
    for x in &verts {
        // Variables: τ and the excursion e; minimize e.
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let tau = prob.add_var(0.0, (-tau_max, tau_max));
        let e = prob.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        for rho in corners {
            let mut u0 = [0.0; 6];
            let base = ctl.model.predict(x, &u0, rho);
            u0[5] = 1.0;
            let unit = ctl.model.predict(&[0.0, 0.0], &u0, rho);
            for w in [-ctl.w_ctrl, ctl.w_ctrl] {
                for r in 0..poly.num_rows() {
                    let a = poly.row(r);
                    // a·(base + unit τ + [0, w]) − b ≤ e
                    let k = a[0] * unit[0] + a[1] * unit[1];
                    let c = a[0] * base[0] + a[1] * (base[1] + w) - poly.offsets()[r];
                    prob.add_constraint([(tau, k), (e, -1.0)], ComparisonOp::Le, -c);
                }
            }
        }
        match prob.solve() {
            Ok(SolveOutcome::Solution(s)) => worst = worst.max(s.var_value(e)),
            other => panic!("terminal oracle failed: {other:?}"),
        }
    }
    worst
}

pub fn prior_corners() -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for m in 0..8 {
        out.push(core::array::from_fn(|i| if m >> i & 1 == 0 { LO[i] } else { HI[i] }));
    }
    out
}
