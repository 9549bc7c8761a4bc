//! Robust adaptive tube MPC for a jammed-hinge plant with online
//! set-membership identification of time-varying parameters.
//!
//! `no_std` with `alloc`. LP solves go through [`lp::LpSolver`]; a dense
//! simplex is included, faster backends live in the `rampc` crate.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod estimator;
pub mod harness;
pub mod lp;
pub mod plant;
pub mod polytope;
pub mod tube_mpc;
