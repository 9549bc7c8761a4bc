//! Set-membership identification over a fixed-normal template.

use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::plant::{AffineModel, Params, State, Wrench, NP, NX};
use crate::polytope::{norm2, PolyError, Polytope};

/// `n_rows` unit directions in ℝ³: the six axis rows (ordered as
/// [`Polytope::from_box`]) followed by a Fibonacci-sphere layout.
pub fn template_directions(n_rows: usize) -> Vec<[f64; 3]> {
    assert!(n_rows >= 6, "template needs the six axis rows");
    let mut out = vec![
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
    ];
    let n = n_rows - 6;
    let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
    for i in 0..n {
        let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = libm::sqrt(1.0 - y * y);
        let t = golden * i as f64;
        out.push([libm::cos(t) * r, y, libm::sin(t) * r]);
    }
    out
}

#[derive(Clone, Debug)]
pub struct ParamSet {
    set: Polytope,
    prior: Polytope,
    prior_offsets: Vec<f64>,
    pub phi: f64,
    /// Number of updates where the data contradicted the current set.
    pub fallbacks: usize,
}

impl ParamSet {
    /// Template over `prior` with offsets equal to the prior's support.
    pub fn new(prior: &Polytope, n_rows: usize, phi: f64) -> Result<Self, PolyError> {
        if prior.dim() != NP {
            return Err(PolyError::DimensionMismatch);
        }
        let prior = prior.normalized();
        let dirs = template_directions(n_rows);
        let mut offsets = Vec::with_capacity(n_rows);
        for d in &dirs {
            let s = prior.support(d)?;
            if !s.is_finite() {
                return Err(PolyError::Unbounded);
            }
            offsets.push(s);
        }
        let normals = dirs.iter().flat_map(|d| d.iter().copied()).collect();
        let set = Polytope::new(NP, normals, offsets.clone())?;
        Ok(ParamSet { set, prior, prior_offsets: offsets, phi, fallbacks: 0 })
    }

    pub fn polytope(&self) -> &Polytope {
        &self.set
    }

    pub fn prior(&self) -> &Polytope {
        &self.prior
    }

    pub fn prior_offsets(&self) -> &[f64] {
        &self.prior_offsets
    }

    pub fn offsets(&self) -> &[f64] {
        self.set.offsets()
    }

    pub fn n_rows(&self) -> usize {
        self.set.num_rows()
    }

    /// Replaces the offsets (rows stay fixed).
    pub fn set_offsets(&mut self, offsets: Vec<f64>) {
        self.set = self.set.with_offsets(offsets);
    }

    /// Dilation direction; rows are unit norm so this is the all-ones vector.
    pub fn gamma(&self) -> Vec<f64> {
        vec![1.0; self.n_rows()]
    }

    /// Per-axis `(lo, hi)` read off the axis rows.
    pub fn axis_bounds(&self) -> [(f64, f64); NP] {
        let d = self.set.offsets();
        [(-d[3], d[0]), (-d[4], d[1]), (-d[5], d[2])]
    }

    /// Sum of per-axis widths.
    pub fn total_width(&self) -> f64 {
        self.axis_bounds().iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, rho: &Params, tol: f64) -> bool {
        self.set.contains_tol(rho, tol)
    }
}

/// Linear regression data from one transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regressor {
    /// Column `i` is `Φᵢx + Γᵢu`.
    pub d_mat: [[f64; NP]; NX],
    /// `Φ₀x + Γ₀u − x⁺`.
    pub d: State,
}

/// `x_next` must already have the known friction contribution removed.
pub fn regressor(model: &AffineModel, x: &State, u: &Wrench, x_next: &State) -> Regressor {
    let mut d_mat = [[0.0; NP]; NX];
    for i in 0..NP {
        let c = model.term(i + 1, x, u);
        d_mat[0][i] = c[0];
        d_mat[1][i] = c[1];
    }
    let base = model.term(0, x, u);
    Regressor { d_mat, d: [base[0] - x_next[0], base[1] - x_next[1]] }
}

/// `{ρ | −H_w D ρ ≤ δ_w + H_w d}`; unbounded in general.
pub fn nonfalsified_set(reg: &Regressor, w: &Polytope) -> Polytope {
    assert_eq!(w.dim(), NX);
    let m = w.num_rows();
    let mut normals = Vec::with_capacity(m * NP);
    let mut offsets = Vec::with_capacity(m);
    for j in 0..m {
        let hw = w.row(j);
        for i in 0..NP {
            normals.push(-(hw[0] * reg.d_mat[0][i] + hw[1] * reg.d_mat[1][i]));
        }
        offsets.push(w.offsets()[j] + hw[0] * reg.d[0] + hw[1] * reg.d[1]);
    }
    Polytope::new(NP, normals, offsets).expect("consistent shapes")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateKind {
    Intersected,
    /// Data contradicted the set; only dilation was applied.
    DilationOnly,
}

fn normalized_rows(p: &Polytope, tol: f64) -> Option<Polytope> {
    let mut out = Polytope::new(p.dim(), Vec::new(), Vec::new()).ok()?;
    for i in 0..p.num_rows() {
        let r = p.row(i);
        let n = norm2(r);
        if n > 1e-12 {
            let unit: Vec<f64> = r.iter().map(|v| v / n).collect();
            out.push_row(&unit, p.offsets()[i] / n);
        } else if p.offsets()[i] < -tol {
            return None;
        }
    }
    Some(out)
}

// Supports of `rows` in every template direction; None if empty.
fn template_supports(dirs: &Polytope, rows: &Polytope) -> Result<Option<Vec<f64>>, PolyError> {
    let mut base = LpProblem::new();
    for _ in 0..NP {
        base.free_var();
    }
    for i in 0..rows.num_rows() {
        base.le(rows.row(i).iter().copied().enumerate().collect(), rows.offsets()[i]);
    }
    let mut out = Vec::with_capacity(dirs.num_rows());
    for i in 0..dirs.num_rows() {
        for (j, c) in dirs.row(i).iter().enumerate() {
            base.cost[j] = -c;
        }
        let r = solve_lp(&base);
        match r.status {
            LpStatus::Optimal => out.push(-r.value),
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => return Err(PolyError::Unbounded),
            LpStatus::SolverError => return Err(PolyError::Solver),
        }
    }
    Ok(Some(out))
}

/// The set `d_ς(𝒫ₖ ∩ Δ) ∩ 𝒫` in H-form (rows normalized), or `None` when
/// the data rows are contradictory by themselves.
pub fn dilated_intersection(p: &ParamSet, delta: &Polytope, sigma: usize) -> Option<Polytope> {
    let s = sigma as f64 * p.phi;
    let d = normalized_rows(delta, 1e-12)?;
    let dil_k = p.set.dilate(sigma, p.phi, &p.gamma()).ok()?;
    let dil_d = d.with_offsets(d.offsets().iter().map(|v| v + s).collect());
    dil_k.intersect(&dil_d).ok()?.intersect(&p.prior).ok()
}

/// Tightest template containing `d_ς(𝒫ₖ ∩ Δ) ∩ 𝒫`; falls back to dilation
/// alone when the intersection is empty.
pub fn update_param_set(p: &ParamSet, delta: &Polytope, sigma: usize) -> Result<(ParamSet, UpdateKind), PolyError> {
    let mut out = p.clone();
    if let Some(rows) = dilated_intersection(p, delta, sigma) {
        if let Some(off) = template_supports(&p.set, &rows)? {
            out.set_offsets(off);
            return Ok((out, UpdateKind::Intersected));
        }
    }
    let rows = p.set.dilate(sigma, p.phi, &p.gamma())?.intersect(&p.prior)?;
    let off = template_supports(&p.set, &rows)?.ok_or(PolyError::Empty)?;
    out.set_offsets(off);
    out.fallbacks += 1;
    Ok((out, UpdateKind::DilationOnly))
}

/// `𝒫̂_ς = d_ς(𝒫ₖ) ∩ 𝒫` for `ς = 0..n`.
pub fn predict_param_sets(p: &ParamSet, n: usize) -> Vec<Polytope> {
    (0..n)
        .map(|s| {
            let off = p
                .offsets()
                .iter()
                .zip(&p.prior_offsets)
                .map(|(d, q)| (d + s as f64 * p.phi).min(*q))
                .collect();
            p.set.with_offsets(off)
        })
        .collect()
}

/// Chebyshev center of the current set.
pub fn point_estimate(p: &ParamSet) -> Result<Params, PolyError> {
    let (c, _) = p.set.chebyshev_center()?;
    Ok([c[0], c[1], c[2]])
}
