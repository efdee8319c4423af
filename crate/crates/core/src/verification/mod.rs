//! Initial data satisfying the positivity and compatibility hypotheses,
//! manufactured solutions, and grid-refinement studies.

mod convergence;
mod initial;
mod mms;

pub use convergence::{
    convergence_study, fit_order, ConvergenceReport, ResolutionError, ORDER_THRESHOLD,
};
pub use initial::{build_initial_data, check_compatibility, Family, InitialDataSpec};
pub use mms::{FieldValues, ManufacturedSolution, MmsForcing, Profile};
