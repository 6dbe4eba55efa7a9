//! The pure quadratic loss -(y - x)^2 admits no exact variational solution.
//!
//! Its coefficients (theta = phi = 1, b = c = 0) cannot satisfy the
//! restriction system: the cross-term relation forces phi = 1/rho > 1 for
//! any positive information budget. The stationarity candidate
//! h = p exp(U/lambda) then fails its normalization boundary condition at
//! every multiplier, which is what this example shows numerically.
//!
//! Run: cargo run --example quadratic_loss_infeasibility

use ri::grid::Grid;
use ri::lq_gaussian::check_feasibility;
use ri::utility::{LqCoefficients, UtilitySpec};
use ri::variational::{bc_residual_h, el_candidate};
use ri::{gaussian_density, Result};

fn main() -> Result<()> {
    println!("Quadratic loss U = -(y - x)^2, X ~ N(0, 1)");
    println!("===========================================");
    for kappa in [0.25, 0.5, 1.0, 2.0] {
        let report = check_feasibility(1.0, 1.0, 0.0, 0.0, kappa, 0.0, 1.0)?;
        println!("kappa = {kappa:4}: feasible = {:5}  ({})", report.feasible, report.certificate);
    }

    println!();
    println!("candidate normalization failure, integral dx h(x|y) at y = 0:");
    println!("{:>10} {:>14} {:>14}", "lambda", "mass at y=0", "closed form");
    let gx = Grid::uniform(-8.0, 8.0, 1601)?;
    let gy = Grid::uniform(-1.0, 1.0, 5)?;
    let prior = gaussian_density(0.0, 1.0, &gx)?;
    let u = UtilitySpec::Lq(LqCoefficients { theta: 1.0, phi: 1.0, b: 0.0, c: 0.0 });
    for lambda in [0.25, 0.5, 1.0, 2.0, 8.0] {
        let cand = el_candidate(&prior, &u, &gy, lambda)?;
        let rep = bc_residual_h(&cand);
        let mass = rep.residuals[2] + 1.0;
        // product of two Gaussian factors: mass = 1/sqrt(1 + 2/lambda) < 1
        let closed = 1.0 / (1.0 + 2.0 / lambda).sqrt();
        println!("{lambda:>10.2} {mass:>14.8} {closed:>14.8}");
    }
    println!();
    println!("the mass is bounded away from one for every multiplier, so the");
    println!("boundary condition integral h dx = 1 cannot hold: no exact solution.");
    Ok(())
}
