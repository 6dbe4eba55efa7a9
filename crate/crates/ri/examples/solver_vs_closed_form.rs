//! Cross-check: the discretized solver against the closed-form solution.
//!
//! On the restricted linear-quadratic instance the two routes are fully
//! independent — Gibbs/marginal iteration with multiplier bisection on one
//! side, coefficient matching on the other — so agreement of the
//! multiplier, kernel moments, and achieved information validates both.
//! On the pure quadratic loss the solver still finds the constrained
//! optimum (a normalized kernel always exists) even though the exact
//! variational solution does not; the raw candidate's normalization
//! failure is shown alongside.
//!
//! Run: cargo run --example solver_vs_closed_form

use ri::grid::Grid;
use ri::lq_gaussian::{self, LqProblem, RootChoice};
use ri::solver::{solve, SolverConfig};
use ri::utility::{LqCoefficients, UtilitySpec};
use ri::variational::{bc_residual_h, bc_residual_q_with_tolerance, el_candidate};
use ri::{gaussian_density, Result};

fn main() -> Result<()> {
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0)?;
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus)?;
    let gx = Grid::uniform(-5.0, 5.0, 201)?;
    let gy = lq_gaussian::default_action_grid(&s, &problem, &gx, 201)?;
    let prior = gaussian_density(0.0, 1.0, &gx)?;
    let mut config = SolverConfig::new(1.0)?;
    config.max_inner_iterations = 2000;

    println!("Restricted instance (kappa = 1, theta = 1): solver vs closed form");
    println!("==================================================================");
    let result = solve(&prior, &s.utility(&problem), &gy, &config)?;
    let (slope, var, intercept) = conditional_fit(&result.kernel);
    println!("{:<26} {:>14} {:>14}", "", "solver", "closed form");
    println!("{:<26} {:>14.8} {:>14.8}", "multiplier lambda~ (bits)", result.lambda_tilde_bits, s.lambda_tilde_bits);
    println!("{:<26} {:>14.8} {:>14.8}", "conditional-mean slope", slope, s.conditional_mean_slope(&problem));
    println!("{:<26} {:>14.8} {:>14.8}", "conditional-mean intercept", intercept, s.mu_y);
    println!("{:<26} {:>14.8} {:>14.8}", "conditional variance", var, s.conditional_variance());
    println!("{:<26} {:>14.8} {:>14.8}", "achieved information", result.achieved_information_bits, 1.0);
    println!("(multiplier probes: {}, inner sweeps: {})", result.probe_trace.len(), result.inner_iterations);

    println!();
    println!("Pure quadratic loss (theta = phi = 1, b = c = 0), same prior and budget");
    println!("========================================================================");
    let u = UtilitySpec::Lq(LqCoefficients { theta: 1.0, phi: 1.0, b: 0.0, c: 0.0 });
    let gy2 = Grid::uniform(-5.0, 5.0, 201)?;
    let result2 = solve(&prior, &u, &gy2, &config)?;
    let rows = bc_residual_q_with_tolerance(&result2.kernel, 1e-8);
    println!("solver optimum:   I = {:.8} bits, rows normalized to {:.1e}",
        result2.achieved_information_bits, rows.max_abs_residual);

    // probe interior actions so the residual reflects the mathematical
    // failure rather than grid truncation at extreme rows
    let probe_actions = Grid::uniform(-2.0, 2.0, 21)?;
    let cand =
        el_candidate(&prior, &u, &probe_actions, result2.lambda_tilde_bits / std::f64::consts::LN_2)?;
    let bc = bc_residual_h(&cand);
    println!("raw candidate:    max |integral h dx - 1| = {:.3} (satisfied: {})",
        bc.max_abs_residual, bc.satisfied);
    println!();
    println!("the normalized optimum exists and is found numerically, while the");
    println!("unnormalized stationarity candidate stays far from a density: the");
    println!("two notions genuinely differ for this payoff.");
    Ok(())
}

fn conditional_fit(kernel: &ri::ConditionalKernel) -> (f64, f64, f64) {
    let gx = kernel.row_grid();
    let gy = kernel.col_grid();
    let (mut sx, mut sxx, mut sm, mut sxm, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut var_acc, mut var_n) = (0.0, 0.0);
    for (i, row) in kernel.rows().enumerate() {
        let x = gx.nodes()[i];
        if x.abs() > 2.0 {
            continue;
        }
        let mut m = 0.0;
        for ((q, y), w) in row.iter().zip(gy.nodes()).zip(gy.weights()) {
            m += q * y * w;
        }
        sx += x;
        sxx += x * x;
        sm += m;
        sxm += x * m;
        n += 1.0;
        if x.abs() <= 1.0 {
            let mut v = 0.0;
            for ((q, y), w) in row.iter().zip(gy.nodes()).zip(gy.weights()) {
                v += q * (y - m) * (y - m) * w;
            }
            var_acc += v;
            var_n += 1.0;
        }
    }
    let slope = (n * sxm - sx * sm) / (n * sxx - sx * sx);
    let intercept = (sm - slope * sx) / n;
    (slope, var_acc / var_n, intercept)
}
