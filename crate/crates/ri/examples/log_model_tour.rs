//! Tour of the logarithmic consumption-savings model.
//!
//! For U = ln y + beta ln(x - y) the stationarity candidate normalizes in
//! the state direction only for a power-law prior with a specific support
//! bound, and even then no forward kernel q(y|x) can normalize: the running
//! mass M(x) is strictly increasing where normalization would force it
//! constant. This example walks through all of those facts numerically.
//!
//! Run: cargo run --example log_model_tour

use ri::grid::Grid;
use ri::log_model::{nonexistence_diagnostic, LogModelParams, DEFAULT_TAIL_MASS};
use ri::Result;

fn main() -> Result<()> {
    let (alpha, beta) = (2.0, 1.0);
    let params = LogModelParams::new(alpha, beta)?;

    println!("Logarithmic model, alpha = {alpha}, beta = {beta}");
    println!("=================================================");
    println!("support bound x0        = {:.12}", params.x0);
    println!("multiplier lambda~      = {:.12} bits (ln2 / alpha)", params.lambda_tilde_bits());
    println!("multiplier relation     |alpha x0^((1+b)a) B - 1/(1+b)| = {:.2e}",
        params.consistency_residual());

    let grid = params.default_state_grid(30_001, DEFAULT_TAIL_MASS)?;
    let prior = params.powerlaw_prior(&grid)?;
    let e = params.tail_exponent();
    println!();
    println!("power-law prior p(x) ~ x^-{}", e + 1.0);
    println!("  raw quadrature mass   = 1 {:+.2e}", prior.raw_mass() - 1.0);
    println!("  mean                  = {:.8} (closed form {:.8})",
        prior.mean(),
        e * params.x0 / (e - 1.0));

    println!();
    println!("reverse conditional h(x|y): normalization and moments");
    println!("{:>8} {:>16} {:>14}", "y/x0", "int h dx - 1", "E[X|y]/y");
    for mult in [1.0, 1.5, 2.0, 4.0] {
        let y = mult * params.x0;
        let cgrid = params.default_conditional_grid(y, 20_001, DEFAULT_TAIL_MASS)?;
        let h = params.h_conditional(y, &cgrid)?;
        let mass = cgrid.integrate(&h)?;
        let ratio = params.conditional_mean_ratio_by_quadrature(y, 40_001)?;
        println!("{mult:>8.2} {:>16.2e} {ratio:>14.8}", mass - 1.0);
    }
    println!("closed-form ratio (1+beta) alpha/(alpha-1) = {}",
        params.conditional_mean_ratio()?);

    println!();
    println!("running mass M(x) = int g(y) y^a (x-y)^(ba) dy for a uniform marginal:");
    let y_grid = Grid::uniform(params.x0, 2.0 * params.x0, 2001)?;
    let g = vec![1.0; y_grid.n()];
    let probes: Vec<f64> = (1..=6).map(|k| params.x0 * (1.0 + 0.4 * k as f64)).collect();
    let rep = nonexistence_diagnostic(&params, &g, &y_grid, &probes)?;
    println!("{:>10} {:>14} {:>12}", "x/x0", "M(x)", "slope");
    for (k, x) in rep.probes.iter().enumerate() {
        let slope = if k == 0 { f64::NAN } else { rep.slopes[k - 1] };
        println!("{:>10.2} {:>14.6} {:>12.4}", x / params.x0, rep.m_values[k], slope);
    }
    println!("strictly increasing: {}", rep.strictly_increasing);
    println!();
    println!("a normalized forward kernel would need M constant in x; since M");
    println!("strictly increases for every positive marginal, none exists.");
    Ok(())
}
