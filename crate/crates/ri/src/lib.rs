//! Variational analysis of rational-inattention problems.
//!
//! An agent chooses the conditional distribution `q(y|x)` of an action `Y`
//! given a state `X` with known prior `p(x)`, to maximize expected payoff
//! `E[U(X, Y)]` subject to a mutual-information budget `I(X, Y) <= kappa`
//! bits. Because the objective functional contains no derivatives of the
//! unknown kernel, the stationarity condition is a pointwise identity,
//! `h(x|y) = p(x) exp(U(x,y)/lambda)`, and a genuine solution exists only
//! when that candidate also satisfies the normalization boundary
//! conditions — which happens in exceptional parameter configurations, not
//! generically. This crate provides:
//!
//! - the candidate itself, its boundary-condition residuals, and analytic
//!   vs finite-perturbation variational derivatives ([`variational`]);
//! - the closed-form linear-quadratic Gaussian case: the restriction system
//!   that makes the candidate exact, feasibility certificates for arbitrary
//!   coefficient tuples, and the optimal Gaussian kernel ([`lq_gaussian`]);
//! - the logarithmic consumption-savings model: the power-law prior, the
//!   normalizing support bound, conditional moments, and the running-mass
//!   diagnostic showing that no forward kernel can normalize
//!   ([`log_model`]);
//! - an independent discretized solver (alternating Gibbs/marginal updates
//!   plus multiplier bisection) that cross-checks the closed forms and
//!   handles the cases where no exact solution exists ([`solver`]);
//! - grids, densities, special functions, and information functionals
//!   underneath ([`grid`], [`density`], [`special`], [`info`]);
//! - a thin CLI (`ri`) with CSV/JSON result emission ([`report`]).
//!
//! Start with the runnable examples: `cargo run --example lq_closed_form`,
//! `solver_vs_closed_form`, `log_model_tour`, `quadratic_loss_infeasibility`,
//! `derivative_check`, `information_budget_sweep`.

// `!(x > 0.0)` is used on purpose throughout: unlike `x <= 0.0` it also
// rejects NaN arguments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod grid;
pub mod info;
pub mod log_model;
pub mod lq_gaussian;
pub mod report;
pub mod solver;
pub mod special;
pub mod utility;
pub mod variational;

pub use density::{gaussian_density, ConditionalKernel, DiscreteDensity};
pub use error::{Result, RiError};
pub use grid::{integrate, Grid};
pub use info::{expected_utility, marginal, mutual_information};
pub use log_model::{
    conditional_mean_ratio, nonexistence_diagnostic, solve_x0, ActionSupport, LogModelParams,
};
pub use lq_gaussian::{
    check_feasibility, lq_utility_eval, optimal_kernel, solve_restrictions, LqProblem,
    LqSolution, RootChoice,
};
pub use solver::{inner_fixed_point, objective_report, solve, SolveResult, SolverConfig};
pub use special::{beta, ln_gamma, log_beta};
pub use utility::{LqCoefficients, UtilitySpec};
pub use variational::{
    bc_residual_h, bc_residual_q, el_candidate, lagrangean_value,
    variational_derivative_analytic, variational_derivative_numeric,
    variational_derivative_richardson, ElCandidate, ResidualReport,
};
