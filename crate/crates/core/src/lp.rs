//! Linear programs and a dense two-phase simplex for small instances.
//!
//! Problems are stated as `min c·x` subject to sparse `≤` / `=` rows and
//! per-variable bounds. Anything that needs a sparse solver goes through the
//! [`LpSolver`] trait; [`DenseSimplex`] is the in-crate implementation and is
//! meant for problems with at most a few hundred rows.

use alloc::vec;
use alloc::vec::Vec;

/// Primal feasibility tolerance used across the crate.
pub const TOL_FEAS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coef: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    SolverError,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
}

impl LpResult {
    pub fn failed(status: LpStatus) -> Self {
        LpResult { status, x: Vec::new(), value: f64::NAN }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub trait LpSolver {
    fn solve(&mut self, problem: &LpProblem) -> LpResult;
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    /// Adds `n` variables sharing bounds and cost; returns the first index.
    pub fn add_vars(&mut self, n: usize, lower: f64, upper: f64, cost: f64) -> usize {
        let first = self.cost.len();
        for _ in 0..n {
            self.add_var(lower, upper, cost);
        }
        first
    }

    pub fn free_var(&mut self) -> usize {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    pub fn le(&mut self, coef: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Constraint { coef, sense: Sense::Le, rhs });
    }

    pub fn eq(&mut self, coef: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Constraint { coef, sense: Sense::Eq, rhs });
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for r in &self.rows {
            let lhs: f64 = r.coef.iter().map(|&(j, a)| a * x[j]).sum();
            let gap = lhs - r.rhs;
            worst = match r.sense {
                Sense::Le => worst.max(gap),
                Sense::Eq => worst.max(gap.abs()),
            };
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.cost.iter().all(|c| c.is_finite())
            && self.lower.iter().all(|v| !v.is_nan() && *v != f64::INFINITY)
            && self.upper.iter().all(|v| !v.is_nan() && *v != f64::NEG_INFINITY)
            && self
                .rows
                .iter()
                .all(|r| r.rhs.is_finite() && r.coef.iter().all(|(_, a)| a.is_finite()))
    }
}

/// Solves with the dense simplex.
pub fn solve_lp(problem: &LpProblem) -> LpResult {
    DenseSimplex::default().solve(problem)
}

/// Two-phase tableau simplex with Dantzig pricing and a Bland fallback on
/// degenerate stalls.
#[derive(Clone, Debug)]
pub struct DenseSimplex {
    pub pivot_tol: f64,
    pub cost_tol: f64,
    pub max_iter: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex { pivot_tol: 1e-10, cost_tol: 1e-11, max_iter: 20_000 }
    }
}

// How an original variable maps onto non-negative standard-form columns.
#[derive(Clone, Copy)]
enum VarMap {
    Shift { col: usize, base: f64 },
    Mirror { col: usize, base: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    w: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.w + j]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.w;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        self.a[r * w + c] = 1.0;
        let (head, tail) = self.a.split_at_mut(r * w);
        let (prow, rest) = tail.split_at_mut(w);
        let elim = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    let v = row[j] - f * prow[j];
                    row[j] = if v.abs() < 1e-14 { 0.0 } else { v };
                }
                row[c] = 0.0;
            }
        };
        for row in head.chunks_mut(w) {
            elim(row);
        }
        for row in rest.chunks_mut(w) {
            elim(row);
        }
        elim(obj);
        self.basis[r] = c;
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

impl DenseSimplex {
    // Minimizes the objective row `obj` (reduced costs, last entry = -value)
    // over columns `< ncols_allowed`.
    fn iterate(&self, t: &mut Tableau, obj: &mut [f64], allowed: usize) -> Outcome {
        let rhs = t.w - 1;
        let mut degenerate_run = 0usize;
        for _ in 0..self.max_iter {
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -self.cost_tol;
            for j in 0..allowed {
                let d = obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = enter else { return Outcome::Optimal };
            let mut leave = None;
            let mut ratio = f64::INFINITY;
            for i in 0..t.m {
                let a = t.at(i, e);
                if a > self.pivot_tol {
                    let q = t.at(i, rhs).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            q < ratio - 1e-12
                                || (q <= ratio + 1e-12 && t.basis[i] < t.basis[l])
                        }
                    };
                    if better {
                        ratio = ratio.min(q);
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else { return Outcome::Unbounded };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            t.pivot(l, e, obj);
        }
        Outcome::Stalled
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&mut self, p: &LpProblem) -> LpResult {
        if !p.is_finite() {
            return LpResult::failed(LpStatus::SolverError);
        }
        let n = p.num_vars();
        // Column layout: structural columns, bound rows become extra constraints.
        let mut maps = Vec::with_capacity(n);
        let mut ncol = 0usize;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            if lo > hi {
                return LpResult::failed(LpStatus::Infeasible);
            }
            if lo.is_finite() {
                maps.push(VarMap::Shift { col: ncol, base: lo });
                if hi.is_finite() {
                    bound_rows.push((ncol, hi - lo));
                }
                ncol += 1;
            } else if hi.is_finite() {
                maps.push(VarMap::Mirror { col: ncol, base: hi });
                ncol += 1;
            } else {
                maps.push(VarMap::Split { pos: ncol, neg: ncol + 1 });
                ncol += 2;
            }
        }
        let nstruct = ncol;
        // Rows in standard-form: (dense coefficients over structural columns, sense, rhs).
        let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(p.rows.len() + bound_rows.len());
        for r in &p.rows {
            let mut coef = vec![0.0; nstruct];
            let mut rhs = r.rhs;
            for &(j, a) in &r.coef {
                match maps[j] {
                    VarMap::Shift { col, base } => {
                        coef[col] += a;
                        rhs -= a * base;
                    }
                    VarMap::Mirror { col, base } => {
                        coef[col] -= a;
                        rhs -= a * base;
                    }
                    VarMap::Split { pos, neg } => {
                        coef[pos] += a;
                        coef[neg] -= a;
                    }
                }
            }
            rows.push((coef, r.sense, rhs));
        }
        for &(col, ub) in &bound_rows {
            let mut coef = vec![0.0; nstruct];
            coef[col] = 1.0;
            rows.push((coef, Sense::Le, ub));
        }
        let m = rows.len();
        let nslack = rows.iter().filter(|r| r.1 == Sense::Le).count();
        // Artificial needed unless a +1 slack can start basic.
        let needs_art: Vec<bool> = rows.iter().map(|r| r.1 == Sense::Eq || r.2 < 0.0).collect();
        let nart = needs_art.iter().filter(|&&b| b).count();
        let ntot = nstruct + nslack + nart;
        let w = ntot + 1;
        let mut t = Tableau { m, w, a: vec![0.0; m * w], basis: vec![0; m] };
        let mut slack = nstruct;
        let mut art = nstruct + nslack;
        for (i, (coef, sense, rhs)) in rows.iter().enumerate() {
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut t.a[i * w..(i + 1) * w];
            for (k, &c) in coef.iter().enumerate() {
                row[k] = sign * c;
            }
            row[ntot] = sign * rhs;
            if *sense == Sense::Le {
                row[slack] = sign;
                if !needs_art[i] {
                    t.basis[i] = slack;
                }
                slack += 1;
            }
            if needs_art[i] {
                row[art] = 1.0;
                t.basis[i] = art;
                art += 1;
            }
        }
        let art0 = nstruct + nslack;
        let bscale = 1.0 + rows.iter().fold(0.0f64, |acc, r| acc.max(r.2.abs()));

        // Phase 1.
        if nart > 0 {
            let mut obj = vec![0.0; w];
            for j in art0..ntot {
                obj[j] = 1.0;
            }
            for i in 0..m {
                if t.basis[i] >= art0 {
                    for j in 0..w {
                        obj[j] -= t.at(i, j);
                    }
                }
            }
            match self.iterate(&mut t, &mut obj, ntot) {
                Outcome::Optimal => {}
                Outcome::Unbounded | Outcome::Stalled => {
                    return LpResult::failed(LpStatus::SolverError)
                }
            }
            if -obj[ntot] > 1e-9 * bscale {
                return LpResult::failed(LpStatus::Infeasible);
            }
            // Drive remaining artificials out of the basis.
            let mut dummy = vec![0.0; w];
            for i in 0..m {
                if t.basis[i] >= art0 {
                    let mut best = None;
                    let mut mag = 1e-9;
                    for j in 0..art0 {
                        let a = t.at(i, j).abs();
                        if a > mag {
                            mag = a;
                            best = Some(j);
                        }
                    }
                    if let Some(j) = best {
                        t.pivot(i, j, &mut dummy);
                    }
                    // Otherwise the row is redundant; its artificial stays basic at zero.
                }
            }
        }

        // Phase 2.
        let mut cost = vec![0.0; w];
        for (j, map) in maps.iter().enumerate() {
            let c = p.cost[j];
            match *map {
                VarMap::Shift { col, .. } => cost[col] += c,
                VarMap::Mirror { col, .. } => cost[col] -= c,
                VarMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }
        let mut obj = cost.clone();
        for i in 0..m {
            let cb = cost[t.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * t.at(i, j);
                }
            }
        }
        match self.iterate(&mut t, &mut obj, art0) {
            Outcome::Optimal => {}
            Outcome::Unbounded => return LpResult::failed(LpStatus::Unbounded),
            Outcome::Stalled => return LpResult::failed(LpStatus::SolverError),
        }
        let mut y = vec![0.0; ntot];
        for i in 0..m {
            y[t.basis[i]] = t.at(i, ntot);
        }
        let x: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, base } => base + y[col],
                VarMap::Mirror { col, base } => base - y[col],
                VarMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect();
        let value = p.objective(&x);
        if !value.is_finite() || p.max_violation(&x) > 1e-6 * bscale {
            return LpResult::failed(LpStatus::SolverError);
        }
        LpResult { status: LpStatus::Optimal, x, value }
    }
}
