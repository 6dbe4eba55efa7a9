//! Closed-form solution of the linear-quadratic Gaussian case.
//!
//! Fixes the information budget, the Gaussian prior, and one payoff
//! parameter (theta), then solves the restriction system that makes the
//! stationarity candidate an exact solution, and verifies the identity
//! U(x, y) = lambda ln(h(x|y)/p(x)) pointwise.
//!
//! Run: cargo run --example lq_closed_form

use ri::grid::Grid;
use ri::lq_gaussian::{self, LqProblem, RootChoice};
use ri::variational::{bc_residual_h, el_candidate};
use ri::{gaussian_density, Result};

fn main() -> Result<()> {
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0)?;
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus)?;

    println!("Linear-quadratic Gaussian case, kappa = 1 bit, X ~ N(0, 1), theta = 1");
    println!("======================================================================");
    println!("rho^2                  = {:.12}   (1 - 2^(-2 kappa))", s.rho_sq);
    println!("sigma_y^2              = {:.12}   (sigma_x^2 / theta^2)", s.sigma_y_sq);
    println!("phi                    = {:.12}   (sigma_x / (rho sigma_y))", s.phi);
    println!("lambda (nats)          = {:.12}   (2 sigma_x^2 / (2^(2k) - 1))", s.lambda_nats);
    println!("lambda~ (bits)         = {:.12}", s.lambda_tilde_bits);
    println!("mu_y                   = {:.12}   (sqrt(lambda kappa ln2) at mu_x = 0)", s.mu_y);
    println!("b                      = {:.12}   (mu_x - phi mu_y)", s.b);
    println!("c                      = {:.12}   (-phi (mu_x - rho^2 phi mu_y))", s.c);
    println!();
    println!("optimal kernel: E[Y|x] = {:.6} + {:.6} x,  Var[Y|x] = {:.6}",
        s.mu_y,
        s.conditional_mean_slope(&problem),
        s.conditional_variance()
    );

    // verify the stationarity identity on a probe lattice
    let mut max_resid = 0.0f64;
    let sigma_y = s.sigma_y_sq.sqrt();
    let rho = s.rho_sq.sqrt();
    let cond_var = problem.sigma_x_sq * (1.0 - s.rho_sq);
    for i in 0..21 {
        for j in 0..21 {
            let x = -3.0 + 0.3 * i as f64;
            let y = s.mu_y + sigma_y * (-3.0 + 0.3 * j as f64);
            let u = lq_gaussian::lq_utility_eval(problem.theta, s.phi, s.b, s.c, x, y);
            let mu_xy = rho * (1.0 / sigma_y) * (y - s.mu_y);
            let ln_ratio = 0.5 * (1.0 / cond_var).ln()
                - (x - mu_xy) * (x - mu_xy) / (2.0 * cond_var)
                + x * x / 2.0;
            max_resid = max_resid.max((u - s.lambda_nats * ln_ratio).abs());
        }
    }
    println!();
    println!("identity U = lambda ln(h/p): max residual on a 21x21 lattice = {max_resid:.2e}");

    // the raw candidate h = p exp(U/lambda) normalizes in x for this payoff
    let gx = Grid::uniform(-7.0, 7.0, 1401)?;
    let gy = Grid::uniform(s.mu_y - 3.0, s.mu_y + 3.0, 41)?;
    let prior = gaussian_density(0.0, 1.0, &gx)?;
    let cand = el_candidate(&prior, &s.utility(&problem), &gy, s.lambda_nats)?;
    let rep = bc_residual_h(&cand);
    println!(
        "candidate normalization: max |integral h dx - 1| = {:.2e} over {} actions (satisfied: {})",
        rep.max_abs_residual,
        rep.residuals.len(),
        rep.satisfied
    );
    Ok(())
}
