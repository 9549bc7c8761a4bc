//! Closed-loop self-check used by the `verify` command.

use rampc_core::harness::{ControllerKind, Scenario};
use rampc_core::tube_mpc::terminal::vertex_propagation_gap;
use rampc_core::tube_mpc::TerminalSet;

use crate::backends::Backend;
use crate::sim::run_batch;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_checks(cfg: &Scenario, seeds: &[u64], backend: Backend) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let ctl = cfg.controller(ControllerKind::Rampc)?;
    if let TerminalSet::Invariant { set, .. } = &ctl.terminal {
        let gap = vertex_propagation_gap(set, &ctl.reach_model(&cfg.algorithm)?);
        out.push(Check {
            name: "terminal set invariance",
            pass: gap <= 1e-7,
            detail: format!("worst excursion {gap:.3e} over {} vertices", set.polygon.vertices.len()),
        });
    }
    let logs = run_batch(cfg, &[ControllerKind::Rampc], seeds, backend)?;
    let feasible = logs.iter().all(|l| l.status.is_ok());
    out.push(Check {
        name: "recursive feasibility",
        pass: feasible,
        detail: format!("{}/{} runs completed", logs.iter().filter(|l| l.status.is_ok()).count(), logs.len()),
    });
    let slack = logs.iter().flat_map(|l| &l.checks).map(|c| c.soundness_slack).fold(f64::INFINITY, f64::min);
    out.push(Check {
        name: "estimator soundness",
        pass: slack >= -1e-9,
        detail: format!("min containment slack {slack:.3e}"),
    });
    let viol: usize = logs.iter().map(|l| l.rows.iter().filter(|r| r.viol_algo).count()).sum();
    out.push(Check { name: "constraint satisfaction", pass: viol == 0, detail: format!("{viol} flagged steps") });
    let excess = logs.iter().flat_map(|l| &l.checks).map(|c| c.tube_excess).fold(f64::NEG_INFINITY, f64::max);
    out.push(Check {
        name: "tube containment",
        pass: excess <= 1e-6,
        detail: format!("max excess {excess:.3e}"),
    });
    let bound = 2.0 * 3.0 * cfg.estimator.sigma as f64 * cfg.estimator.phi;
    let growth = logs
        .iter()
        .flat_map(|l| l.rows.windows(2).map(|w| w[1].set_width() - w[0].set_width()))
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Check {
        name: "set width growth",
        pass: growth <= bound + 1e-9,
        detail: format!("max per-step growth {growth:.4} (bound {bound:.4})"),
    });
    Ok(out)
}
