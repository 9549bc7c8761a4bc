//! LP backends for the core [`LpSolver`] trait.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use rampc_core::lp::{DenseSimplex, LpProblem, LpResult, LpSolver, LpStatus, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Clarabel,
    Microlp,
    Dense,
}

pub fn make_solver(b: Backend) -> Box<dyn LpSolver + Send> {
    match b {
        Backend::Clarabel => Box::new(ClarabelLp::default()),
        Backend::Microlp => Box::new(MicroLp),
        Backend::Dense => Box::new(DenseSimplex::default()),
    }
}

/// Interior-point backend. Equalities map to the zero cone, inequalities
/// and finite variable bounds to the non-negative cone.
#[derive(Clone, Debug)]
pub struct ClarabelLp {
    pub tol: f64,
    /// Largest accepted constraint violation of a returned point.
    pub max_violation: f64,
}

impl Default for ClarabelLp {
    fn default() -> Self {
        ClarabelLp { tol: 1e-8, max_violation: 1e-7 }
    }
}

impl ClarabelLp {
    fn run(
        &self,
        pm: &CscMatrix<f64>,
        q: &[f64],
        a: &CscMatrix<f64>,
        b: &[f64],
        cones: &[SupportedConeT<f64>],
        refine: bool,
    ) -> (LpStatus, Vec<f64>) {
        let settings = match DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .presolve_enable(false)
            .iterative_refinement_enable(refine)
            .build()
        {
            Ok(s) => s,
            Err(_) => return (LpStatus::SolverError, Vec::new()),
        };
        let mut solver = match DefaultSolver::new(pm, q, a, b, cones, settings) {
            Ok(s) => s,
            Err(_) => return (LpStatus::SolverError, Vec::new()),
        };
        solver.solve();
        let status = match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => LpStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => LpStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => LpStatus::Unbounded,
            _ => LpStatus::SolverError,
        };
        (status, solver.solution.x.clone())
    }
}

impl LpSolver for ClarabelLp {
    fn solve(&mut self, p: &LpProblem) -> LpResult {
        let n = p.num_vars();
        // Row order: equalities first, then inequalities.
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut n_eq = 0;
        for r in p.rows.iter().filter(|r| r.sense == Sense::Eq) {
            rows.push((r.coef.clone(), r.rhs));
            n_eq += 1;
        }
        for r in p.rows.iter().filter(|r| r.sense == Sense::Le) {
            rows.push((r.coef.clone(), r.rhs));
        }
        for j in 0..n {
            if p.lower[j].is_finite() {
                rows.push((vec![(j, -1.0)], -p.lower[j]));
            }
            if p.upper[j].is_finite() {
                rows.push((vec![(j, 1.0)], p.upper[j]));
            }
        }
        let m = rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, (coef, _)) in rows.iter().enumerate() {
            for &(j, v) in coef {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for c in &mut cols {
            c.sort_by_key(|e| e.0);
            // Merge duplicate entries.
            let mut last: Option<usize> = None;
            for &(i, v) in c.iter() {
                if last == Some(i) {
                    *nzval.last_mut().unwrap() += v;
                } else {
                    rowval.push(i);
                    nzval.push(v);
                    last = Some(i);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let pm = CscMatrix::zeros((n, n));
        let mut cones = Vec::new();
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        if m > n_eq {
            cones.push(SupportedConeT::NonnegativeConeT(m - n_eq));
        }
        let first = self.run(&pm, &p.cost, &a, &b, &cones, false);
        // Refinement is off by default for speed. Fall back to it when the
        // returned point is not feasible to the tolerance the caller relies on.
        let (status, x) = match first {
            (LpStatus::Optimal, x) if p.max_violation(&x) <= self.max_violation => (LpStatus::Optimal, x),
            _ => self.run(&pm, &p.cost, &a, &b, &cones, true),
        };
        if status != LpStatus::Optimal {
            return LpResult::failed(status);
        }
        if p.max_violation(&x) > self.max_violation {
            return LpResult::failed(LpStatus::SolverError);
        }
        let value = p.objective(&x);
        LpResult { status, x, value }
    }
}

/// Sparse simplex backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct MicroLp;

impl LpSolver for MicroLp {
    fn solve(&mut self, p: &LpProblem) -> LpResult {
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..p.num_vars()).map(|j| prob.add_var(p.cost[j], (p.lower[j], p.upper[j]))).collect();
        for r in &p.rows {
            let expr: Vec<_> = r.coef.iter().map(|&(j, v)| (vars[j], v)).collect();
            let op = match r.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
            };
            prob.add_constraint(expr, op, r.rhs);
        }
        match prob.solve() {
            Ok(SolveOutcome::Solution(sol)) => {
                let x: Vec<f64> = vars.iter().map(|v| sol.var_value(*v)).collect();
                let value = p.objective(&x);
                LpResult { status: LpStatus::Optimal, x, value }
            }
            Ok(_) => LpResult::failed(LpStatus::SolverError),
            Err(microlp::Error::Infeasible) => LpResult::failed(LpStatus::Infeasible),
            Err(microlp::Error::Unbounded) => LpResult::failed(LpStatus::Unbounded),
            Err(_) => LpResult::failed(LpStatus::SolverError),
        }
    }
}
