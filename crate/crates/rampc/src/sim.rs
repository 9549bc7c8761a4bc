//! Timed runs and batches.

use std::time::Instant;

use rayon::prelude::*;

use rampc_core::harness::{run_scenario, Clock, ControllerKind, Scenario, TrajectoryLog};
use rampc_core::tube_mpc::ConfigError;

use crate::backends::{make_solver, Backend};

pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn now_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

pub fn run_one(cfg: &Scenario, kind: ControllerKind, seed: u64, backend: Backend) -> Result<TrajectoryLog, ConfigError> {
    let mut solver = make_solver(backend);
    run_scenario(cfg, kind, seed, solver.as_mut(), &mut WallClock::default())
}

/// All `(kind, seed)` pairs, run in parallel. Output order is kinds-major.
pub fn run_batch(
    cfg: &Scenario,
    kinds: &[ControllerKind],
    seeds: &[u64],
    backend: Backend,
) -> Result<Vec<TrajectoryLog>, ConfigError> {
    let jobs: Vec<(ControllerKind, u64)> = kinds.iter().flat_map(|k| seeds.iter().map(move |s| (*k, *s))).collect();
    jobs.par_iter().map(|(k, s)| run_one(cfg, *k, *s, backend)).collect()
}
