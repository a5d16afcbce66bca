//! The semilinear equation `u_t = Lu + beta u - alpha u^p` on radial grids.
//!
//! [`solve_cauchy`] integrates one initial-boundary problem,
//! [`maximal_solution`] approximates the largest solution with zero initial
//! data, and [`verify_comparison`] checks explicit super- and stationary
//! solutions symbolically.

mod comparison;
mod grid_function;
mod maximal;
mod solver;

pub use comparison::{search_constant, verify_comparison, ComparisonFunction, ResidualReport, SampleGrid};
pub use grid_function::{BoundaryCondition, GridFunction, Provenance};
pub use maximal::{
    extrapolate, hitting_probability, maximal_solution, HeightScaling, HittingEstimate, MaximalOptions, MaximalReport,
    PdeVerdict, ProbeRow, RadiusSummary,
};
pub use solver::{solve_cauchy, CauchyProblem, SolverParams};
