//! Closed-form solution of the linear-quadratic Gaussian case.
//!
//! For the payoff `U(x, y) = -theta^2 y^2 + 2 phi x y - x^2 + 2 b x + 2 c y`
//! with `X ~ N(mu_x, sigma_x^2)`, a conditional-Gaussian kernel satisfies the
//! stationarity identity `U(x, y) = lambda ln(h(x|y) / p(x))` only when the
//! coefficients obey a rigid restriction system. Matching coefficients of
//! `x^2`, `y^2`, `xy`, `x`, `y` and the constant term gives, with
//! `rho^2 = 1 - 2^(-2 kappa)` from the binding information budget:
//!
//! - `lambda = 2 sigma_x^2 (1 - rho^2) / rho^2`   (x^2 term; equivalently
//!   `lambda_tilde = 2 ln2 sigma_x^2 / (2^(2 kappa) - 1)`)
//! - `theta^2 = sigma_x^2 / sigma_y^2`            (y^2 term)
//! - `phi = sigma_x / (rho sigma_y)`              (xy term)
//! - `b = mu_x - phi mu_y`                        (x term)
//! - `c = -phi (mu_x - rho^2 phi mu_y)`           (y term)
//! - `mu_x^2 - 2 phi mu_x mu_y + theta^2 mu_y^2 = lambda kappa ln 2`
//!   (constant term, the equation that pins `mu_y`)
//!
//! Note the factor `lambda` on the right of the constant-term equation: it
//! comes directly from substituting the `x^2` relation into the constant
//! match, and it is what makes the identity hold exactly (see the unit tests,
//! which verify the identity pointwise). Given `kappa`, `mu_x`, `sigma_x^2`
//! and a free `theta`, everything else is determined up to the sign branch
//! of the `mu_y` quadratic.
//!
//! The canonical quadratic loss `theta = phi = 1`, `b = c = 0` violates the
//! `xy` relation whenever `kappa > 0`, so no conditional-Gaussian solution
//! exists for it; [`check_feasibility`] reports exactly which relation fails.

use crate::density::{gaussian_density, ConditionalKernel};
use crate::error::{Result, RiError};
use crate::grid::Grid;
use crate::utility::{LqCoefficients, UtilitySpec};

use std::f64::consts::LN_2;

/// Absolute tolerance on each restriction-equation residual.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Problem data: information budget (bits), Gaussian prior moments, and the
/// one free payoff parameter.
#[derive(Debug, Clone, Copy)]
pub struct LqProblem {
    pub kappa_bits: f64,
    pub mu_x: f64,
    pub sigma_x_sq: f64,
    pub theta: f64,
}

impl LqProblem {
    pub fn new(kappa_bits: f64, mu_x: f64, sigma_x_sq: f64, theta: f64) -> Result<LqProblem> {
        if !(kappa_bits > 0.0) || !kappa_bits.is_finite() {
            return Err(RiError::Domain(format!(
                "information budget must be positive, got {kappa_bits}"
            )));
        }
        if !(sigma_x_sq > 0.0) || !sigma_x_sq.is_finite() {
            return Err(RiError::Domain(format!(
                "prior variance must be positive, got {sigma_x_sq}"
            )));
        }
        if theta == 0.0 || !theta.is_finite() {
            return Err(RiError::Domain(
                "theta must be nonzero (theta = 0 forces an infinite action variance)".into(),
            ));
        }
        if !mu_x.is_finite() {
            return Err(RiError::Domain(format!("mu_x must be finite, got {mu_x}")));
        }
        Ok(LqProblem { kappa_bits, mu_x, sigma_x_sq, theta })
    }
}

/// Branch of the quadratic equation that pins the action mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootChoice {
    Plus,
    Minus,
}

/// Solved restriction system.
#[derive(Debug, Clone, Copy)]
pub struct LqSolution {
    pub rho_sq: f64,
    /// Multiplier in bits.
    pub lambda_tilde_bits: f64,
    /// Multiplier in natural-log units, `lambda_tilde / ln 2`.
    pub lambda_nats: f64,
    pub sigma_y_sq: f64,
    pub phi: f64,
    pub mu_y: f64,
    pub b: f64,
    pub c: f64,
    pub root: RootChoice,
}

impl LqSolution {
    /// Slope of the optimal conditional mean `E[Y|X = x]` in `x`:
    /// `rho sigma_y / sigma_x`.
    pub fn conditional_mean_slope(&self, problem: &LqProblem) -> f64 {
        self.rho_sq.sqrt() * (self.sigma_y_sq / problem.sigma_x_sq).sqrt()
    }

    /// Conditional variance of the optimal kernel: `sigma_y^2 (1 - rho^2)`.
    pub fn conditional_variance(&self) -> f64 {
        self.sigma_y_sq * (1.0 - self.rho_sq)
    }

    /// The payoff for which this solution exists.
    pub fn utility(&self, problem: &LqProblem) -> UtilitySpec {
        UtilitySpec::Lq(LqCoefficients {
            theta: problem.theta,
            phi: self.phi,
            b: self.b,
            c: self.c,
        })
    }
}

/// The linear-quadratic payoff value
/// `-theta^2 y^2 + 2 phi x y - x^2 + 2 b x + 2 c y`.
pub fn lq_utility_eval(theta: f64, phi: f64, b: f64, c: f64, x: f64, y: f64) -> f64 {
    -theta * theta * y * y + 2.0 * phi * y * x - x * x + 2.0 * b * x + 2.0 * c * y
}

/// Solve the restriction system for the given problem and root branch.
pub fn solve_restrictions(problem: &LqProblem, root: RootChoice) -> Result<LqSolution> {
    let LqProblem { kappa_bits, mu_x, sigma_x_sq, theta } = *problem;
    let rho_sq = 1.0 - 2f64.powf(-2.0 * kappa_bits);
    let rho = rho_sq.sqrt();
    let sigma_y_sq = sigma_x_sq / (theta * theta);
    let sigma_y = sigma_y_sq.sqrt();
    let sigma_x = sigma_x_sq.sqrt();
    let phi = sigma_x / (rho * sigma_y);
    let lambda_nats = 2.0 * sigma_x_sq / (2f64.powf(2.0 * kappa_bits) - 1.0);
    let lambda_tilde_bits = lambda_nats * LN_2;

    // constant-term equation: theta^2 mu_y^2 - 2 phi mu_x mu_y
    //                         + (mu_x^2 - lambda kappa ln2) = 0
    let a = theta * theta;
    let b_coef = -2.0 * phi * mu_x;
    let c_coef = mu_x * mu_x - lambda_nats * kappa_bits * LN_2;
    let disc = b_coef * b_coef - 4.0 * a * c_coef;
    if disc < 0.0 {
        return Err(RiError::Domain(format!(
            "the action-mean quadratic has complex roots (discriminant {disc:.6e})"
        )));
    }
    let sq = disc.sqrt();
    let mu_y = match root {
        RootChoice::Plus => (-b_coef + sq) / (2.0 * a),
        RootChoice::Minus => (-b_coef - sq) / (2.0 * a),
    };
    let b = mu_x - phi * mu_y;
    let c = -phi * (mu_x - rho_sq * phi * mu_y);

    Ok(LqSolution {
        rho_sq,
        lambda_tilde_bits,
        lambda_nats,
        sigma_y_sq,
        phi,
        mu_y,
        b,
        c,
        root,
    })
}

/// Outcome of [`check_feasibility`].
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Names the first violated restriction when infeasible, with the
    /// required and supplied values.
    pub certificate: String,
    pub solution: Option<LqSolution>,
}

/// Decide whether a full coefficient tuple `(theta, phi, b, c)` admits the
/// conditional-Gaussian solution at budget `kappa`, and produce either the
/// solved system or a certificate naming the first violated restriction.
#[allow(clippy::too_many_arguments)]
pub fn check_feasibility(
    theta: f64,
    phi: f64,
    b: f64,
    c: f64,
    kappa_bits: f64,
    mu_x: f64,
    sigma_x_sq: f64,
) -> Result<FeasibilityReport> {
    let problem = LqProblem::new(kappa_bits, mu_x, sigma_x_sq, theta)?;
    let rho_sq = 1.0 - 2f64.powf(-2.0 * kappa_bits);
    let rho = rho_sq.sqrt();
    let sigma_y = (sigma_x_sq / (theta * theta)).sqrt();
    let sigma_x = sigma_x_sq.sqrt();
    let lambda_nats = 2.0 * sigma_x_sq / (2f64.powf(2.0 * kappa_bits) - 1.0);

    // cross-term relation: phi = sigma_x / (rho sigma_y)
    let phi_required = sigma_x / (rho * sigma_y);
    if (phi - phi_required).abs() > FEASIBILITY_TOL {
        return Ok(FeasibilityReport {
            feasible: false,
            certificate: format!(
                "cross-term relation violated: phi must equal sigma_x/(rho sigma_y) = {phi_required:.9}, got {phi:.9}"
            ),
            solution: None,
        });
    }

    // x-linear relation pins the action mean: mu_y = (mu_x - b) / phi
    let mu_y = (mu_x - b) / phi;

    // constant-term relation: mu_x^2 - 2 phi mu_x mu_y + theta^2 mu_y^2
    //                         = lambda kappa ln 2
    let lhs = mu_x * mu_x - 2.0 * phi * mu_x * mu_y + theta * theta * mu_y * mu_y;
    let rhs = lambda_nats * kappa_bits * LN_2;
    if (lhs - rhs).abs() > FEASIBILITY_TOL {
        return Ok(FeasibilityReport {
            feasible: false,
            certificate: format!(
                "action-mean restriction violated: the constant term requires {rhs:.9}, the supplied coefficients give {lhs:.9}"
            ),
            solution: None,
        });
    }

    // y-linear relation: c = -phi (mu_x - rho^2 phi mu_y)
    let c_required = -phi * (mu_x - rho_sq * phi * mu_y);
    if (c - c_required).abs() > FEASIBILITY_TOL {
        return Ok(FeasibilityReport {
            feasible: false,
            certificate: format!(
                "y-linear relation violated: c must equal {c_required:.9}, got {c:.9}"
            ),
            solution: None,
        });
    }

    let root = if mu_y >= phi * mu_x / (theta * theta) {
        RootChoice::Plus
    } else {
        RootChoice::Minus
    };
    let mut solution = solve_restrictions(&problem, root)?;
    // carry the caller's exact values through
    solution.phi = phi;
    solution.mu_y = mu_y;
    solution.b = b;
    solution.c = c;
    Ok(FeasibilityReport {
        feasible: true,
        certificate: "all restrictions satisfied".into(),
        solution: Some(solution),
    })
}

/// The optimal forward kernel: `Y | X = x` is Gaussian with mean
/// `mu_y + rho (sigma_y / sigma_x) (x - mu_x)` and variance
/// `sigma_y^2 (1 - rho^2)`, discretized row by row on the action grid.
pub fn optimal_kernel(
    solution: &LqSolution,
    problem: &LqProblem,
    x_grid: &Grid,
    y_grid: &Grid,
) -> Result<ConditionalKernel> {
    let rho = solution.rho_sq.sqrt();
    let sigma_y = solution.sigma_y_sq.sqrt();
    let sigma_x = problem.sigma_x_sq.sqrt();
    let slope = rho * sigma_y / sigma_x;
    let cond_sd = solution.conditional_variance().sqrt();

    let mean_at = |x: f64| solution.mu_y + slope * (x - problem.mu_x);
    let lo_mean = mean_at(x_grid.lower()).min(mean_at(x_grid.upper()));
    let hi_mean = mean_at(x_grid.lower()).max(mean_at(x_grid.upper()));
    if y_grid.lower() > lo_mean - 6.0 * cond_sd || y_grid.upper() < hi_mean + 6.0 * cond_sd {
        return Err(RiError::Coverage(format!(
            "action grid [{:.4}, {:.4}] must span the conditional means [{:.4}, {:.4}] plus 6 conditional standard deviations ({:.4})",
            y_grid.lower(),
            y_grid.upper(),
            lo_mean,
            hi_mean,
            cond_sd
        )));
    }

    let mut values = Vec::with_capacity(x_grid.n() * y_grid.n());
    for &x in x_grid.nodes() {
        let row = gaussian_density(mean_at(x), solution.conditional_variance(), y_grid)?;
        values.extend_from_slice(row.values());
    }
    ConditionalKernel::new_normalized(x_grid.clone(), y_grid.clone(), values)
}

/// Action grid wide enough for [`optimal_kernel`] on the given state grid.
pub fn default_action_grid(
    solution: &LqSolution,
    problem: &LqProblem,
    x_grid: &Grid,
    n: usize,
) -> Result<Grid> {
    let rho = solution.rho_sq.sqrt();
    let sigma_y = solution.sigma_y_sq.sqrt();
    let sigma_x = problem.sigma_x_sq.sqrt();
    let slope = rho * sigma_y / sigma_x;
    let m0 = solution.mu_y + slope * (x_grid.lower() - problem.mu_x);
    let m1 = solution.mu_y + slope * (x_grid.upper() - problem.mu_x);
    let pad = 6.5 * solution.conditional_variance().sqrt();
    Grid::uniform(m0.min(m1) - pad, m0.max(m1) + pad, n)
}
