//! Numerical laboratory for semilinear problems `-A u = g(u)·μ` on an interval,
//! where `A` is the fractional Laplacian of order `alpha ∈ (0, 2]` with zero
//! exterior condition, `g` is a singular absorption nonlinearity and `μ` is a
//! nonnegative measure (densities plus atoms).
//!
//! The crate provides:
//! - [`grid`]: dense symmetric M-matrix discretization of the operator, Green
//!   solves, resolvents and the discrete Dirichlet energy;
//! - [`measure`]: grid measures, a density registry, mollification and the
//!   diffuse/concentrated decomposition;
//! - [`nonlinearity`]: absorption nonlinearities with power-growth envelopes;
//! - [`solver`]: the regularize-then-limit fixed point solver, power brackets,
//!   mixed nonlinearities, comparison and bound checks;
//! - [`mod@capacity`]: equilibrium potentials and point-capacity refinement;
//! - [`stability`]: measure-perturbation experiments (TV, mollified atoms,
//!   additive singular perturbations);
//! - [`mc`]: killed-path Feynman-Kac Monte Carlo estimators that cross-check
//!   the deterministic solver.

pub mod capacity;
pub mod error;
pub mod grid;
pub mod mc;
pub mod measure;
pub mod nonlinearity;
pub mod solver;
pub mod special;
pub mod stability;

pub use capacity::{capacity, point_capacity_refinement, CapacityResult};
pub use error::CoreError;
pub use grid::{DirichletOperator, Domain, FractionalOrder};
pub use mc::{
    merge_batches, sample_occupation, sample_occupation_batches, verify_solution_mc, BatchStats,
    Estimate, McPointCheck, McReport, WalkConfig,
};
pub use measure::{
    decompose, discretize, mollify, Atom, DensityFn, GridMeasure, MeasureSpec, Mollified, Mollifier,
};
pub use nonlinearity::{Nonlinearity, NonlinearityKind};
pub use solver::{
    comparison_check, geometric_levels, power_bracket, solve_mixed, solve_regularized,
    solve_singular, verify_energy_bound, verify_sup_bound, BoundReport, ComparisonReport,
    EnergyRatioReport, MixedOutcome, Solution, SolverConfig,
};
pub use stability::{
    potential_sup_distance, run_additive_perturbation, run_mollification_split, run_tv_stability,
    run_vanishing, LevelRecord, RefinementSchedule, StabilityReport, TrimRule,
};
