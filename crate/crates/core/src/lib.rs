//! Simulation of the one-dimensional compressible Navier-Stokes equations
//! for a viscous, heat-conducting perfect polytropic gas in Lagrangian mass
//! coordinates, with an audit of the energy-entropy dissipation, uniform
//! bounds and decay of every trajectory toward the constant state
//! `(v, u, theta) = (1, 0, 1)`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod integrate;
pub mod runner;

pub mod scheme;
pub mod state;
pub mod verification;

pub use error::{Error, Result};
pub use state::{
    make_grid, steady_state, validate_state, FluidState, GasParams, MassGrid, ProblemSetup,
    SetupKind,
};
