use alloc::vec::Vec;

use super::{SolveStatus, TubeController, TubeSolution};
use crate::lp::LpProblem;
use crate::plant::{Mat2, State, Wrench, NP, NU, NX};
use crate::polytope::{dot, PolyError, Polytope};

/// Parameter data of one prediction stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageData {
    /// Template offsets.
    pub offsets: Vec<f64>,
    /// Moment-arm range over the set.
    pub arm: (f64, f64),
    /// Exploration penalty `max over vertices of ‖Υρ‖∞`.
    pub explore: f64,
    /// Template rows that carry multipliers; the others are redundant.
    pub rows: Vec<usize>,
}

impl StageData {
    pub fn from_polytope(p: &Polytope, upsilon: &[f64; NP]) -> Result<Self, PolyError> {
        let verts = p.vertices()?;
        let mut b = [(f64::INFINITY, f64::NEG_INFINITY); NP];
        for v in &verts {
            for i in 0..NP {
                b[i] = (b[i].0.min(v[i]), b[i].1.max(v[i]));
            }
        }
        let rows = p.facet_rows_of(&verts);
        Ok(StageData { offsets: p.offsets().to_vec(), arm: b[2], explore: exploration_term(&b, upsilon), rows })
    }
}

/// `max_i Υᵢ max(|loᵢ|, |hiᵢ|)`, which equals the vertex maximum of `‖Υρ‖∞`
/// over the bounding box.
pub fn exploration_term(bounds: &[(f64, f64)], upsilon: &[f64; NP]) -> f64 {
    bounds.iter().zip(upsilon).map(|((lo, hi), u)| u * lo.abs().max(hi.abs())).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageSets {
    /// Current set, used for every stage of the cost-carrying tube.
    pub nominal: StageData,
    /// Predicted sets for `ς = 0..N`.
    pub predicted: Vec<StageData>,
}

#[derive(Clone, Debug, Default)]
struct TubeVars {
    z: Vec<usize>,
    th: Vec<usize>,
}

/// Variable indices of one assembled LP.
#[derive(Clone, Debug, Default)]
pub struct Layout {
    tubes: [TubeVars; 2],
    v: Vec<usize>,
    gamma: Vec<usize>,
    /// Constant part of the cost (exploration), not in the LP objective.
    pub explore_const: f64,
    pub n_vars: usize,
    pub n_rows: usize,
}

impl Layout {
    pub fn extract(&self, x: &[f64], value: f64) -> TubeSolution {
        let z = |t: &TubeVars| t.z.iter().map(|&i| [x[i], x[i + 1]]).collect::<Vec<State>>();
        let th = |t: &TubeVars| t.th.iter().map(|&i| x[i]).collect::<Vec<f64>>();
        let v = self
            .v
            .iter()
            .map(|&i| {
                let mut w = [0.0; NU];
                w.copy_from_slice(&x[i..i + NU]);
                w
            })
            .collect::<Vec<Wrench>>();
        TubeSolution {
            status: SolveStatus::Feasible,
            z: z(&self.tubes[0]),
            theta: th(&self.tubes[0]),
            z_pred: z(&self.tubes[1]),
            theta_pred: th(&self.tubes[1]),
            v,
            gamma: self.gamma.iter().map(|&i| x[i]).collect(),
            cost: value + self.explore_const,
        }
    }
}

fn row_times(c: &[f64], m: &Mat2) -> [f64; NX] {
    [c[0] * m[0][0] + c[1] * m[1][0], c[0] * m[0][1] + c[1] * m[1][1]]
}

/// `Φᵢ + ΓᵢK` for `i = 0..=NP`.
pub fn closed_loop_terms(ctl: &TubeController) -> [Mat2; NP + 1] {
    let k = &ctl.cfg.gain;
    let mut mcl = [[[0.0; NX]; NX]; NP + 1];
    for (i, m) in mcl.iter_mut().enumerate() {
        for r in 0..NX {
            for c in 0..NX {
                m[r][c] = ctl.model.phi[i][r][c] + (0..NU).map(|j| ctl.model.gam[i][r][j] * k[j][c]).sum::<f64>();
            }
        }
    }
    mcl
}

/// LP column indices of one tube step: `z`, `z_next` point at the first of two
/// columns and `v` at the first of `NU`.
#[derive(Clone, Copy, Debug)]
pub struct StepVars {
    pub z: usize,
    pub theta: usize,
    pub z_next: usize,
    pub theta_next: usize,
    pub v: usize,
}

/// Rows forcing `A(ρ)(z ⊕ ϑ𝕏₀) + B(ρ)v ⊕ 𝕎 ⊆ z⁺ ⊕ ϑ⁺𝕏₀` for every ρ in the
/// stage set, one multiplier block per template vertex and active row.
/// Returns the multiplier columns.
pub fn push_inclusion(
    lp: &mut LpProblem,
    ctl: &TubeController,
    mcl: &[Mat2; NP + 1],
    stage: &StageData,
    set: &Polytope,
    vars: StepVars,
    margin: f64,
) -> Vec<usize> {
    let tpl = &ctl.template;
    let StepVars { z: zs, theta: ths, z_next: zn, theta_next: thn, v: vs } = vars;
    let mut gamma = Vec::new();
    for xv in &ctl.template_vertices {
        for l in 0..tpl.num_rows() {
            let c = tpl.row(l);
            let p0 = row_times(c, &mcl[0]);
            let mut ineq = alloc::vec![
                (zs, p0[0]),
                (zs + 1, p0[1]),
                (ths, dot(&p0, xv)),
                (zn, -c[0]),
                (zn + 1, -c[1]),
                (thn, -1.0),
            ];
            for j in 0..NU {
                let cg = c[0] * ctl.model.gam[0][0][j] + c[1] * ctl.model.gam[0][1][j];
                if cg != 0.0 {
                    ineq.push((vs + j, cg));
                }
            }
            if ctl.active_rows.contains(&l) {
                let nr = stage.rows.len();
                let g0 = lp.add_vars(nr, 0.0, f64::INFINITY, 0.0);
                gamma.extend(g0..g0 + nr);
                for (q, &r) in stage.rows.iter().enumerate() {
                    ineq.push((g0 + q, stage.offsets[r]));
                }
                for i in 1..=NP {
                    let pi = row_times(c, &mcl[i]);
                    let mut eq: Vec<(usize, f64)> =
                        stage.rows.iter().enumerate().map(|(q, &r)| (g0 + q, set.row(r)[i - 1])).collect();
                    eq.push((zs, -pi[0]));
                    eq.push((zs + 1, -pi[1]));
                    eq.push((ths, -dot(&pi, xv)));
                    for j in 0..NU {
                        let cg = c[0] * ctl.model.gam[i][0][j] + c[1] * ctl.model.gam[i][1][j];
                        if cg != 0.0 {
                            eq.push((vs + j, -cg));
                        }
                    }
                    lp.eq(eq, 0.0);
                }
            }
            lp.le(ineq, -ctl.wbar[l] - margin);
        }
    }
    gamma
}

/// Assembles the per-step LP. `set` supplies the template normals of the
/// parameter sets; offsets come from `stages`.
pub fn assemble_step_lp(ctl: &TubeController, x: &State, stages: &StageSets, set: &Polytope) -> (LpProblem, Layout) {
    let n = ctl.cfg.horizon;
    assert_eq!(stages.predicted.len(), n);
    let k = &ctl.cfg.gain;
    let margin = ctl.cfg.margin;
    let tpl = &ctl.template;
    let verts = &ctl.template_vertices;

    let mcl = closed_loop_terms(ctl);
    let kx = |b: usize, xv: &State| k[b][0] * xv[0] + k[b][1] * xv[1];

    let mut lp = LpProblem::new();
    let mut lay = Layout::default();
    for t in 0..2 {
        for _ in 0..=n {
            let zi = lp.free_var();
            lp.free_var();
            lay.tubes[t].z.push(zi);
            lay.tubes[t].th.push(lp.add_var(0.0, f64::INFINITY, 0.0));
        }
    }
    for _ in 0..n {
        lay.v.push(lp.add_vars(NU, f64::NEG_INFINITY, f64::INFINITY, 0.0));
    }

    for t in 0..2 {
        let tv = lay.tubes[t].clone();
        let (z0, th0) = (tv.z[0], tv.th[0]);
        for l in 0..tpl.num_rows() {
            let c = tpl.row(l);
            lp.le(alloc::vec![(z0, -c[0]), (z0 + 1, -c[1]), (th0, -1.0)], -dot(c, x));
        }

        for s in 0..=n {
            let stage = if t == 0 { &stages.nominal } else { &stages.predicted[s.min(n - 1)] };
            let (zs, ths) = (tv.z[s], tv.th[s]);
            for row in &ctl.zrows {
                if s == n && !row.state_only() {
                    continue;
                }
                let arms: &[f64] = if row.depends_on_arm() { &[stage.arm.0, stage.arm.1] } else { &[stage.arm.0] };
                for &a in arms {
                    let (f, g) = row.at(a);
                    let mut fz = f;
                    for col in 0..NX {
                        fz[col] += (0..NU).map(|j| g[j] * k[j][col]).sum::<f64>();
                    }
                    // Pure input rows bind hardest on the predicted tube, whose
                    // arm range contains the nominal one.
                    if t == 0 && fz == [0.0; NX] && !row.state_only() {
                        continue;
                    }
                    let fbar = verts.iter().map(|xv| dot(&fz, xv)).fold(f64::NEG_INFINITY, f64::max);
                    let mut coef = alloc::vec![(zs, fz[0]), (zs + 1, fz[1]), (ths, fbar)];
                    if s < n {
                        for (j, gj) in g.iter().enumerate() {
                            if *gj != 0.0 {
                                coef.push((lay.v[s] + j, *gj));
                            }
                        }
                    }
                    // The measured state is not tightened.
                    let tight = if s == 0 && row.state_only() { 0.0 } else { margin };
                    lp.le(coef, row.b - tight);
                }
            }
        }

        for s in 0..n {
            let stage = if t == 0 { &stages.nominal } else { &stages.predicted[s] };
            let vars = StepVars { z: tv.z[s], theta: tv.th[s], z_next: tv.z[s + 1], theta_next: tv.th[s + 1], v: lay.v[s] };
            let g = push_inclusion(&mut lp, ctl, &mcl, stage, set, vars, margin);
            lay.gamma.extend(g);
        }

        let (zn, thn) = (tv.z[n], tv.th[n]);
        match &ctl.terminal {
            super::TerminalSet::Invariant { polytope, .. } => {
                for xv in verts {
                    for r in 0..polytope.num_rows() {
                        let a = polytope.row(r);
                        lp.le(alloc::vec![(zn, a[0]), (zn + 1, a[1]), (thn, dot(a, xv))], polytope.offsets()[r]);
                    }
                }
            }
            super::TerminalSet::Scaled { theta_bar } => {
                lp.eq(alloc::vec![(zn, 1.0)], 0.0);
                lp.eq(alloc::vec![(zn + 1, 1.0)], 0.0);
                lp.le(alloc::vec![(thn, 1.0)], *theta_bar);
            }
        }
    }

    // Epigraph of the worst-vertex stage cost on the nominal tube.
    let tv = lay.tubes[0].clone();
    let q = &ctl.cfg.q;
    let r = &ctl.cfg.r;
    let static_gain = k.iter().flatten().all(|v| *v == 0.0);
    for s in 0..=n {
        let cs = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let (zs, ths) = (tv.z[s], tv.th[s]);
        // Without feedback the input term is the same at every vertex.
        let mut shared_r = None;
        for xv in verts {
            let qv = lp.add_var(0.0, f64::INFINITY, 0.0);
            for a in 0..NX {
                for sg in [1.0, -1.0] {
                    let w = sg * q[a];
                    let mut coef = alloc::vec![(ths, w * xv[a]), (qv, -1.0)];
                    coef.push((zs + a, w));
                    lp.le(coef, 0.0);
                }
            }
            if s < n {
                if let (true, Some(rv)) = (static_gain, shared_r) {
                    lp.le(alloc::vec![(qv, 1.0), (rv, 1.0), (cs, -1.0)], 0.0);
                    continue;
                }
                let rv = lp.add_var(0.0, f64::INFINITY, 0.0);
                shared_r = Some(rv);
                for b in 0..NU {
                    for sg in [1.0, -1.0] {
                        let w = sg * r[b];
                        let coef = alloc::vec![
                            (zs, w * k[b][0]),
                            (zs + 1, w * k[b][1]),
                            (ths, w * kx(b, xv)),
                            (lay.v[s] + b, w),
                            (rv, -1.0),
                        ];
                        lp.le(coef, 0.0);
                    }
                }
                lp.le(alloc::vec![(qv, 1.0), (rv, 1.0), (cs, -1.0)], 0.0);
            } else {
                lp.le(alloc::vec![(qv, ctl.cfg.terminal_weight), (cs, -1.0)], 0.0);
            }
        }
    }
    lay.explore_const = stages.predicted.iter().map(|d| d.explore).sum();
    lay.n_vars = lp.num_vars();
    lay.n_rows = lp.rows.len();
    (lp, lay)
}
