//! H-representation polytopes `{x | Hx ≤ δ}`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lp::{solve_lp, LpProblem, LpStatus, TOL_FEAS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyError {
    Empty,
    Unbounded,
    DimensionMismatch,
    /// Operation not available for this dimension or shape.
    Unsupported,
    Solver,
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PolyError::Empty => "polytope is empty",
            PolyError::Unbounded => "polytope is unbounded",
            PolyError::DimensionMismatch => "dimension mismatch",
            PolyError::Unsupported => "operation unsupported for this polytope",
            PolyError::Solver => "LP solver failure",
        };
        f.write_str(s)
    }
}

impl core::error::Error for PolyError {}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polytope {
    dim: usize,
    /// Row-major, `offsets.len() × dim`.
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

impl Polytope {
    pub fn new(dim: usize, normals: Vec<f64>, offsets: Vec<f64>) -> Result<Self, PolyError> {
        if dim == 0 || normals.len() != offsets.len() * dim {
            return Err(PolyError::DimensionMismatch);
        }
        Ok(Polytope { dim, normals, offsets })
    }

    pub fn from_rows(rows: &[&[f64]], offsets: &[f64]) -> Result<Self, PolyError> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(PolyError::DimensionMismatch);
        }
        let normals = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Polytope::new(dim, normals, offsets.to_vec())
    }

    /// Axis-aligned box `lo ≤ x ≤ hi` with rows `+e₁…+eₙ, −e₁…−eₙ`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        assert_eq!(n, hi.len());
        let mut normals = vec![0.0; 2 * n * n];
        let mut offsets = vec![0.0; 2 * n];
        for i in 0..n {
            normals[i * n + i] = 1.0;
            normals[(n + i) * n + i] = -1.0;
            offsets[i] = hi[i];
            offsets[n + i] = -lo[i];
        }
        Polytope { dim: n, normals, offsets }
    }

    /// `{‖x‖∞ ≤ r}`.
    pub fn inf_ball(dim: usize, r: f64) -> Self {
        Polytope::from_box(&vec![-r; dim], &vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn offsets_mut(&mut self) -> &mut [f64] {
        &mut self.offsets
    }

    pub fn with_offsets(&self, offsets: Vec<f64>) -> Self {
        assert_eq!(offsets.len(), self.offsets.len());
        Polytope { dim: self.dim, normals: self.normals.clone(), offsets }
    }

    pub fn push_row(&mut self, normal: &[f64], offset: f64) {
        assert_eq!(normal.len(), self.dim);
        self.normals.extend_from_slice(normal);
        self.offsets.push(offset);
    }

    /// Rescales every row to unit Euclidean norm. Zero rows are dropped when
    /// vacuous and kept as `0 ≤ δ` (δ < 0, infeasible) otherwise.
    pub fn normalized(&self) -> Self {
        let mut out = Polytope { dim: self.dim, normals: Vec::new(), offsets: Vec::new() };
        for i in 0..self.num_rows() {
            let r = self.row(i);
            let n = norm2(r);
            if n > 1e-300 {
                out.normals.extend(r.iter().map(|v| v / n));
                out.offsets.push(self.offsets[i] / n);
            } else if self.offsets[i] < 0.0 {
                out.normals.extend(core::iter::repeat(0.0).take(self.dim));
                out.offsets.push(self.offsets[i]);
            }
        }
        out
    }

    pub fn slack(&self, x: &[f64]) -> f64 {
        (0..self.num_rows())
            .map(|i| self.offsets[i] - dot(self.row(i), x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, TOL_FEAS)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && (0..self.num_rows()).all(|i| dot(self.row(i), x) <= self.offsets[i] + tol)
    }

    /// Row stack of both systems. Emptiness is not checked.
    pub fn intersect(&self, other: &Polytope) -> Result<Polytope, PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch);
        }
        let mut out = self.clone();
        out.normals.extend_from_slice(&other.normals);
        out.offsets.extend_from_slice(&other.offsets);
        Ok(out)
    }

    /// Offsets `δ + ς·φ·γ`.
    pub fn dilate(&self, sigma: usize, phi: f64, gamma: &[f64]) -> Result<Polytope, PolyError> {
        if gamma.len() != self.num_rows() {
            return Err(PolyError::DimensionMismatch);
        }
        let s = sigma as f64 * phi;
        let offsets = self.offsets.iter().zip(gamma).map(|(d, g)| d + s * g).collect();
        Ok(self.with_offsets(offsets))
    }

    fn lp(&self, cost: &[f64]) -> LpProblem {
        let mut p = LpProblem::new();
        for &c in cost {
            p.add_var(f64::NEG_INFINITY, f64::INFINITY, c);
        }
        for i in 0..self.num_rows() {
            p.le(self.row(i).iter().copied().enumerate().collect(), self.offsets[i]);
        }
        p
    }

    /// `max dir·x` over the set together with a maximizer; `+∞` if unbounded.
    pub fn support_point(&self, dir: &[f64]) -> Result<(f64, Vec<f64>), PolyError> {
        if dir.len() != self.dim {
            return Err(PolyError::DimensionMismatch);
        }
        let cost: Vec<f64> = dir.iter().map(|d| -d).collect();
        let r = solve_lp(&self.lp(&cost));
        match r.status {
            LpStatus::Optimal => Ok((-r.value, r.x)),
            LpStatus::Infeasible => Err(PolyError::Empty),
            LpStatus::Unbounded => Ok((f64::INFINITY, Vec::new())),
            LpStatus::SolverError => Err(PolyError::Solver),
        }
    }

    pub fn support(&self, dir: &[f64]) -> Result<f64, PolyError> {
        self.support_point(dir).map(|(v, _)| v)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.support(&vec![0.0; self.dim]), Err(PolyError::Empty))
    }

    /// Bounded iff the support is finite in `±eᵢ` for every axis.
    pub fn is_bounded(&self) -> Result<bool, PolyError> {
        let mut e = vec![0.0; self.dim];
        for i in 0..self.dim {
            for s in [1.0, -1.0] {
                e[i] = s;
                if !self.support(&e)?.is_finite() {
                    return Ok(false);
                }
            }
            e[i] = 0.0;
        }
        Ok(true)
    }

    /// Per-axis `(lo, hi)` from support queries.
    pub fn bounds(&self) -> Result<Vec<(f64, f64)>, PolyError> {
        let mut e = vec![0.0; self.dim];
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            e[i] = 1.0;
            let hi = self.support(&e)?;
            e[i] = -1.0;
            let lo = -self.support(&e)?;
            e[i] = 0.0;
            out.push((lo, hi));
        }
        Ok(out)
    }

    /// Center and radius of the largest inscribed Euclidean ball.
    ///
    /// The optimal center is often a segment or face. The returned center is
    /// the mean of the per-axis extreme points of that face, so it does not
    /// depend on which vertex the LP lands on.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64), PolyError> {
        let n = self.dim;
        let build = |r_min: f64, cost: &[f64]| {
            let mut p = LpProblem::new();
            for &c in cost {
                p.add_var(f64::NEG_INFINITY, f64::INFINITY, c);
            }
            let r = p.add_var(r_min, f64::INFINITY, if r_min > 0.0 { 0.0 } else { -1.0 });
            for i in 0..self.num_rows() {
                let row = self.row(i);
                let mut coef: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
                coef.push((r, norm2(row)));
                p.le(coef, self.offsets[i]);
            }
            (p, r)
        };
        let (p, r) = build(0.0, &vec![0.0; n]);
        let res = solve_lp(&p);
        match res.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(PolyError::Empty),
            LpStatus::Unbounded => return Err(PolyError::Unbounded),
            LpStatus::SolverError => return Err(PolyError::Solver),
        }
        let radius = res.x[r];
        if radius <= 0.0 {
            return Ok((res.x[..n].to_vec(), radius));
        }
        let r_min = radius * (1.0 - 1e-9);
        let mut mean = vec![0.0; n];
        let mut mid = vec![0.0; n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            for s in [-1.0, 1.0] {
                e[j] = s;
                let q = solve_lp(&build(r_min, &e).0);
                e[j] = 0.0;
                if q.status != LpStatus::Optimal {
                    return Ok((res.x[..n].to_vec(), radius));
                }
                for (c, v) in mean.iter_mut().zip(&q.x[..n]) {
                    *c += v / (2 * n) as f64;
                }
                mid[j] += 0.5 * q.x[j];
            }
        }
        let fits = (0..self.num_rows()).all(|i| {
            let row = self.row(i);
            dot(row, &mid) + r_min * norm2(row) <= self.offsets[i] + 1e-9 * (1.0 + self.offsets[i].abs())
        });
        let center = if fits { mid } else { mean };
        Ok((center, radius))
    }

    /// Vertices of an axis-aligned box, in binary order over `(hi, lo)` per axis.
    pub fn box_vertices(&self) -> Result<Vec<Vec<f64>>, PolyError> {
        let b = self.bounds()?;
        if b.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite()) {
            return Err(PolyError::Unbounded);
        }
        if self.dim > 3 {
            return Err(PolyError::Unsupported);
        }
        // Only boxes qualify: every row must be an axis row.
        for i in 0..self.num_rows() {
            if self.row(i).iter().filter(|v| **v != 0.0).count() > 1 {
                return self.vertices();
            }
        }
        let n = self.dim;
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            out.push((0..n).map(|i| if mask >> i & 1 == 0 { b[i].1 } else { b[i].0 }).collect());
        }
        Ok(out)
    }

    /// Vertex enumeration for `dim ≤ 3` by brute force over row subsets.
    /// Planar results are returned counter-clockwise.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>, PolyError> {
        let n = self.dim;
        if n > 3 {
            return Err(PolyError::Unsupported);
        }
        let norm = self.normalized();
        let m = norm.num_rows();
        let scale = 1.0 + norm.offsets.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-9 * scale;
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut push = |x: Vec<f64>| {
            if norm.contains_tol(&x, tol) && !out.iter().any(|v| dist_inf(v, &x) < 1e-9 * scale) {
                out.push(x);
            }
        };
        match n {
            1 => {
                for i in 0..m {
                    let a = norm.row(i)[0];
                    if a.abs() > 1e-12 {
                        push(vec![norm.offsets[i] / a]);
                    }
                }
            }
            2 => {
                for i in 0..m {
                    for j in i + 1..m {
                        if let Some(x) = solve2(norm.row(i), norm.row(j), norm.offsets[i], norm.offsets[j]) {
                            push(x.to_vec());
                        }
                    }
                }
            }
            _ => {
                for i in 0..m {
                    for j in i + 1..m {
                        for k in j + 1..m {
                            let rows = [norm.row(i), norm.row(j), norm.row(k)];
                            let rhs = [norm.offsets[i], norm.offsets[j], norm.offsets[k]];
                            if let Some(x) = solve3(rows, rhs) {
                                push(x.to_vec());
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return if self.is_empty() { Err(PolyError::Empty) } else { Err(PolyError::Unbounded) };
        }
        if n == 2 {
            sort_ccw(&mut out);
        }
        Ok(out)
    }
}

impl Polytope {
    /// Rows that support a facet (at least `dim` vertices on the row).
    /// The remaining rows are redundant: dropping them leaves the set unchanged.
    pub fn facet_rows(&self) -> Result<Vec<usize>, PolyError> {
        Ok(self.facet_rows_of(&self.vertices()?))
    }

    /// [`Self::facet_rows`] with a precomputed vertex list.
    /// Lower-dimensional sets have no facets in this sense; all rows are kept.
    pub fn facet_rows_of(&self, verts: &[Vec<f64>]) -> Vec<usize> {
        if affine_rank(verts) < self.dim {
            return (0..self.num_rows()).collect();
        }
        let scale = 1.0 + self.offsets.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut out = Vec::new();
        for i in 0..self.num_rows() {
            let r = self.row(i);
            let n = norm2(r);
            if n <= 1e-12 {
                continue;
            }
            let tol = 1e-8 * scale * n;
            let on = verts.iter().filter(|v| (dot(r, v) - self.offsets[i]).abs() <= tol).count();
            if on >= self.dim {
                out.push(i);
            }
        }
        out
    }
}

// Dimension of the affine hull of `pts` by Gram–Schmidt on differences.
fn affine_rank(pts: &[Vec<f64>]) -> usize {
    let Some(p0) = pts.first() else { return 0 };
    let scale = pts.iter().flat_map(|p| p.iter()).fold(1.0f64, |a, v| a.max(v.abs()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &pts[1..] {
        let mut d: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c = dot(&d, b);
            for (x, y) in d.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let n = norm2(&d);
        if n > 1e-9 * scale {
            basis.push(d.iter().map(|v| v / n).collect());
        }
    }
    basis.len()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn solve2(a: &[f64], b: &[f64], p: f64, q: f64) -> Option<[f64; 2]> {
    let det = a[0] * b[1] - a[1] * b[0];
    if det.abs() < 1e-12 {
        return None;
    }
    Some([(p * b[1] - a[1] * q) / det, (a[0] * q - p * b[0]) / det])
}

fn solve3(r: [&[f64]; 3], d: [f64; 3]) -> Option<[f64; 3]> {
    let det = |c: [[f64; 3]; 3]| {
        c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
    };
    let m = [[r[0][0], r[0][1], r[0][2]], [r[1][0], r[1][1], r[1][2]], [r[2][0], r[2][1], r[2][2]]];
    let d0 = det(m);
    if d0.abs() < 1e-10 {
        return None;
    }
    let mut x = [0.0; 3];
    for c in 0..3 {
        let mut mc = m;
        for i in 0..3 {
            mc[i][c] = d[i];
        }
        x[c] = det(mc) / d0;
    }
    Some(x)
}

fn sort_ccw(pts: &mut [Vec<f64>]) {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    pts.sort_by(|a, b| {
        let ta = libm::atan2(a[1] - cy, a[0] - cx);
        let tb = libm::atan2(b[1] - cy, b[0] - cx);
        ta.partial_cmp(&tb).unwrap_or(core::cmp::Ordering::Equal)
    });
}
