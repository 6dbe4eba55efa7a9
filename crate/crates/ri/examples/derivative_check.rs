//! Analytic vs finite-perturbation variational derivatives.
//!
//! The closed form dL/dq = p(x0) [ U(x0,y0) - lambda ln(q(y0|x0)/g(y0)) ]
//! is checked against the spike-perturbation quotient
//! (L[q + eps delta] - L[q]) / eps, Richardson-extrapolated from two
//! perturbation sizes. At the exact closed-form solution the derivative
//! vanishes.
//!
//! Run: cargo run --example derivative_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ri::grid::Grid;
use ri::lq_gaussian::{self, LqProblem, RootChoice};
use ri::variational::{
    variational_derivative_analytic, variational_derivative_numeric,
    variational_derivative_richardson,
};
use ri::{gaussian_density, ConditionalKernel, DiscreteDensity, Result};

fn main() -> Result<()> {
    let n = 41;
    let gx = Grid::uniform(-4.0, 4.0, n)?;
    let gy = Grid::uniform(-4.0, 4.0, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    println!("Random kernels: analytic vs finite-perturbation derivative");
    println!("============================================================");
    println!("{:>6} {:>14} {:>14} {:>14} {:>10}", "probe", "analytic", "raw eps=1e-4", "richardson", "rel dev");
    for trial in 0..8 {
        let pv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let prior = DiscreteDensity::normalized(gx.clone(), pv)?;
        let kv: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let kernel = ConditionalKernel::new_unnormalized(gx.clone(), gy.clone(), kv)?
            .row_normalized()?;
        let u: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda_tilde = rng.gen_range(0.3..1.5);
        let lambda_nats = lambda_tilde / std::f64::consts::LN_2;
        let (ix, iy) = (rng.gen_range(4..n - 4), rng.gen_range(4..n - 4));

        let analytic = variational_derivative_analytic(&prior, &kernel, &u, lambda_nats, ix, iy)?;
        let raw =
            variational_derivative_numeric(&prior, &kernel, &u, lambda_tilde, 1.0, ix, iy, 1e-4)?;
        let extrapolated = variational_derivative_richardson(
            &prior, &kernel, &u, lambda_tilde, 1.0, ix, iy, 1e-5, 1e-6,
        )?;
        let dev = (extrapolated - analytic).abs() / analytic.abs().max(1.0);
        println!(
            "{trial:>6} {analytic:>14.8} {raw:>14.8} {extrapolated:>14.8} {dev:>10.2e}"
        );
    }

    println!();
    println!("At the exact closed-form solution the derivative vanishes:");
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0)?;
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus)?;
    let gx2 = Grid::uniform(-8.0, 8.0, 201)?;
    let gy2 = lq_gaussian::default_action_grid(&s, &problem, &gx2, 201)?;
    let prior2 = gaussian_density(0.0, 1.0, &gx2)?;
    let kernel2 = lq_gaussian::optimal_kernel(&s, &problem, &gx2, &gy2)?;
    let u2 = s.utility(&problem).tabulate(&gx2, &gy2)?;
    for (ix, iy) in [(100, 100), (80, 110), (130, 95)] {
        let d = variational_derivative_analytic(&prior2, &kernel2, &u2, s.lambda_nats, ix, iy)?;
        println!(
            "  probe (x, y) = ({:+.3}, {:+.3}): dL/dq = {d:+.3e}",
            gx2.nodes()[ix],
            gy2.nodes()[iy]
        );
    }
    Ok(())
}
