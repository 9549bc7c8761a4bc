//! Terminal ingredients: a robust control invariant polygon computed by
//! backward reachability, and the scaled-template RPI check.

use alloc::vec;
use alloc::vec::Vec;

use crate::plant::{Mat2, State};
use crate::polytope::{dot, Polytope};

/// Half-plane `a·x ≤ b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: [f64; 2],
    pub b: f64,
}

/// Convex polygon, counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<State>,
}

fn cross(o: &State, a: &State, b: &State) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Polygon {
    pub fn rect(lo: State, hi: State) -> Self {
        Polygon { vertices: vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]] }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>() / 2.0
    }

    /// Keeps the part with `a·x ≤ b`.
    pub fn clip(&self, hp: &HalfPlane) -> Polygon {
        let v = &self.vertices;
        let n = v.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let p = v[i];
            let q = v[(i + 1) % n];
            let fp = dot(&hp.a, &p) - hp.b;
            let fq = dot(&hp.a, &q) - hp.b;
            if fp <= 0.0 {
                out.push(p);
            }
            if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        Polygon { vertices: out }.cleaned()
    }

    /// Drops duplicate and collinear vertices.
    pub fn cleaned(mut self) -> Polygon {
        let scale = self.vertices.iter().fold(1e-300f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        let eps = 1e-12 * scale;
        let mut changed = true;
        while changed && self.vertices.len() >= 3 {
            changed = false;
            let n = self.vertices.len();
            for i in 0..n {
                let a = self.vertices[(i + n - 1) % n];
                let b = self.vertices[i];
                let c = self.vertices[(i + 1) % n];
                let dup = (a[0] - b[0]).abs() < eps && (a[1] - b[1]).abs() < eps;
                let len = libm::hypot(c[0] - a[0], c[1] - a[1]).max(1e-300);
                if dup || cross(&a, &b, &c).abs() / len < eps {
                    self.vertices.remove(i);
                    changed = true;
                    break;
                }
            }
        }
        if self.vertices.len() < 3 {
            self.vertices.clear();
        }
        self
    }

    /// Edge half-planes with unit normals.
    pub fn halfplanes(&self) -> Vec<HalfPlane> {
        let v = &self.vertices;
        let n = v.len();
        (0..n)
            .map(|i| {
                let p = v[i];
                let q = v[(i + 1) % n];
                let a = [q[1] - p[1], p[0] - q[0]];
                let l = libm::hypot(a[0], a[1]);
                let a = [a[0] / l, a[1] / l];
                HalfPlane { a, b: dot(&a, &p) }
            })
            .collect()
    }

    pub fn to_polytope(&self) -> Polytope {
        let hp = self.halfplanes();
        let normals = hp.iter().flat_map(|h| h.a).collect();
        let offsets = hp.iter().map(|h| h.b).collect();
        Polytope::new(2, normals, offsets).expect("planar rows")
    }

    pub fn contains(&self, x: &State, tol: f64) -> bool {
        self.halfplanes().iter().all(|h| dot(&h.a, x) <= h.b + tol)
    }
}

/// Dynamics used for backward reachability:
/// `x⁺ = Φ(ρ)x + b·τ + w`, `|τ| ≤ τ_max`, `|w₂| ≤ w_max`, `w₁ = 0`,
/// for every `Φ` in `phis`.
#[derive(Clone, Debug)]
pub struct ReachModel {
    pub phis: Vec<Mat2>,
    pub b: State,
    pub tau_max: f64,
    pub w_max: f64,
}

// Rows `a·x + β·τ ≤ γ` that define the admissible (x, τ) pairs for target `c`.
fn lifted_rows(c: &[HalfPlane], m: &ReachModel) -> Vec<([f64; 2], f64, f64)> {
    let mut rows = Vec::with_capacity(c.len() * m.phis.len() + 2);
    for phi in &m.phis {
        for h in c {
            let a = [h.a[0] * phi[0][0] + h.a[1] * phi[1][0], h.a[0] * phi[0][1] + h.a[1] * phi[1][1]];
            let beta = dot(&h.a, &m.b);
            rows.push((a, beta, h.b - h.a[1].abs() * m.w_max));
        }
    }
    rows.push(([0.0, 0.0], 1.0, m.tau_max));
    rows.push(([0.0, 0.0], -1.0, m.tau_max));
    rows
}

/// Half-planes of `Pre(C)` by eliminating `τ` (one Fourier–Motzkin step).
pub fn pre_set(c: &[HalfPlane], m: &ReachModel) -> Vec<HalfPlane> {
    let rows = lifted_rows(c, m);
    let mut out = Vec::new();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for r in &rows {
        if r.1 > 1e-14 {
            pos.push(*r);
        } else if r.1 < -1e-14 {
            neg.push(*r);
        } else {
            out.push(HalfPlane { a: r.0, b: r.2 });
        }
    }
    for p in &pos {
        for n in &neg {
            let (sp, sn) = (-n.1, p.1);
            let a = [sp * p.0[0] + sn * n.0[0], sp * p.0[1] + sn * n.0[1]];
            let b = sp * p.2 + sn * n.2;
            let l = libm::hypot(a[0], a[1]);
            if l > 1e-14 {
                out.push(HalfPlane { a: [a[0] / l, a[1] / l], b: b / l });
            } else if b < 0.0 {
                out.push(HalfPlane { a: [0.0, 0.0], b: -1.0 });
            }
        }
    }
    out
}

/// Feasible `τ` interval at state `x` for target `c`, if any.
pub fn input_interval(c: &[HalfPlane], m: &ReachModel, x: &State) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (a, beta, gamma) in lifted_rows(c, m) {
        let r = gamma - dot(&a, x);
        if beta > 1e-14 {
            hi = hi.min(r / beta);
        } else if beta < -1e-14 {
            lo = lo.max(r / beta);
        } else if r < -1e-12 {
            return None;
        }
    }
    // Vertices produced by clipping sit on the boundary; allow round-off.
    if lo <= hi {
        Some((lo, hi))
    } else if lo <= hi + 1e-9 {
        let m = 0.5 * (lo + hi);
        Some((m, m))
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct InvariantSet {
    pub polygon: Polygon,
    /// One admissible input per vertex (midpoint of the feasible interval).
    pub vertex_inputs: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalError {
    /// The iteration emptied the constraint set.
    Empty,
    NotConverged,
    /// No scaling of the template satisfies the invariance conditions.
    NoScale,
}

/// Largest robust control invariant subset of `x_box` via `C ← C ∩ Pre(C)`.
pub fn max_control_invariant(x_lo: State, x_hi: State, m: &ReachModel, max_iter: usize) -> Result<InvariantSet, TerminalError> {
    let mut c = Polygon::rect(x_lo, x_hi);
    for it in 0..max_iter {
        let hp = c.halfplanes();
        let pre = pre_set(&hp, m);
        let scale = 1.0 + c.vertices.iter().fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs()));
        let inside = pre.iter().all(|h| c.vertices.iter().all(|v| dot(&h.a, v) <= h.b + 1e-12 * scale));
        if inside {
            let vertex_inputs = c
                .vertices
                .iter()
                .map(|v| input_interval(&hp, m, v).map(|(lo, hi)| 0.5 * (lo + hi)).unwrap_or(f64::NAN))
                .collect();
            return Ok(InvariantSet { polygon: c, vertex_inputs, iterations: it });
        }
        for h in &pre {
            c = c.clip(h);
            if c.vertices.is_empty() {
                return Err(TerminalError::Empty);
            }
        }
    }
    Err(TerminalError::NotConverged)
}

/// Worst excursion outside `c` over all vertex/parameter/disturbance
/// combinations when each vertex applies its stored input (≤ 0 means invariant).
pub fn vertex_propagation_gap(set: &InvariantSet, m: &ReachModel) -> f64 {
    let hp = set.polygon.halfplanes();
    let mut worst = f64::NEG_INFINITY;
    for (x, &tau) in set.polygon.vertices.iter().zip(&set.vertex_inputs) {
        if !tau.is_finite() || tau.abs() > m.tau_max + 1e-12 {
            return f64::INFINITY;
        }
        for phi in &m.phis {
            for w in [-m.w_max, m.w_max] {
                let next = [
                    phi[0][0] * x[0] + phi[0][1] * x[1] + m.b[0] * tau,
                    phi[1][0] * x[0] + phi[1][1] * x[1] + m.b[1] * tau + w,
                ];
                for h in &hp {
                    worst = worst.max(dot(&h.a, &next) - h.b);
                }
            }
        }
    }
    worst
}

/// Admissible scalings for a template `{Hx ≤ ϑ}`, given per-row growth
/// `c_l = max H_l A_cl x̄` over template vertices and parameter vertices,
/// disturbance support `w̄_l`, constraint rows `f̄_i ϑ ≤ b_i`, and the
/// contraction factor `λ`. Returns the largest admissible `ϑ̄`.
pub fn scale_interval(growth: &[f64], wbar: &[f64], fbar: &[f64], bounds: &[f64], lambda: f64) -> Result<(f64, f64), TerminalError> {
    let mut lo: f64 = 0.0;
    for (c, w) in growth.iter().zip(wbar) {
        if *c > lambda || *c >= 1.0 {
            return Err(TerminalError::NoScale);
        }
        lo = lo.max(w / (1.0 - c));
    }
    let mut hi = f64::INFINITY;
    for (f, b) in fbar.iter().zip(bounds) {
        if *f > 0.0 {
            hi = hi.min(b / f);
        } else if *b < 0.0 {
            return Err(TerminalError::NoScale);
        }
    }
    if hi <= 0.0 || lo > hi || !hi.is_finite() {
        return Err(TerminalError::NoScale);
    }
    Ok((lo, hi))
}
