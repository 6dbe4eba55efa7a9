//! Information functionals on discretized densities and kernels.
//!
//! Mutual information is measured in bits throughout, with the convention
//! `0 * log 0 = 0`. All sums run in ascending node order so results are
//! reproducible bit-for-bit.

use crate::density::{ConditionalKernel, DiscreteDensity};
use crate::error::{Result, RiError};
use crate::grid::Grid;

/// Implied action marginal `g(y) = integral dx p(x) q(y|x)`.
pub fn marginal(prior: &DiscreteDensity, kernel: &ConditionalKernel) -> Result<DiscreteDensity> {
    check_grids(prior, kernel)?;
    let g = marginal_values(prior, kernel);
    DiscreteDensity::normalized(kernel.col_grid().clone(), g)
}

/// Raw (not re-normalized) marginal values; exact quadrature image of the
/// kernel under the prior.
pub fn marginal_values(prior: &DiscreteDensity, kernel: &ConditionalKernel) -> Vec<f64> {
    let ny = kernel.col_grid().n();
    let mut g = vec![0.0; ny];
    let wx = prior.grid().weights();
    for (i, row) in kernel.rows().enumerate() {
        let a = wx[i] * prior.values()[i];
        for (gj, q) in g.iter_mut().zip(row) {
            *gj += a * q;
        }
    }
    g
}

/// Mutual information of the prior and kernel in bits:
/// `I = integral dx dy p(x) q(y|x) log2[q(y|x) / g(y)]` with `g` the implied
/// marginal. Tiny negative values (within quadrature noise) are returned
/// as computed, not clamped.
pub fn mutual_information(prior: &DiscreteDensity, kernel: &ConditionalKernel) -> Result<f64> {
    check_grids(prior, kernel)?;
    let g = marginal_values(prior, kernel);
    Ok(mutual_information_with_marginal(prior, kernel, &g))
}

pub(crate) fn mutual_information_with_marginal(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    g: &[f64],
) -> f64 {
    let wx = prior.grid().weights();
    let wy = kernel.col_grid().weights();
    let mut acc = 0.0;
    for (i, row) in kernel.rows().enumerate() {
        let a = wx[i] * prior.values()[i];
        if a == 0.0 {
            continue;
        }
        let mut row_acc = 0.0;
        for ((q, w), gj) in row.iter().zip(wy).zip(g) {
            // g_j >= w_i p_i q_ij > 0 in exact arithmetic; g_j == 0 with
            // q_ij > 0 only under underflow, where the true contribution
            // is below the denormal range
            if *q > 0.0 && *gj > 0.0 {
                row_acc += w * q * (q / gj).log2();
            }
        }
        acc += a * row_acc;
    }
    acc
}

/// Expected payoff `E[U] = integral dx dy p(x) q(y|x) U(x, y)` with `u`
/// row-major over (prior grid, action grid). Cells where the kernel puts
/// zero mass contribute zero even when `u` is `-inf` there.
pub fn expected_utility(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    u: &[f64],
) -> Result<f64> {
    check_grids(prior, kernel)?;
    let ny = kernel.col_grid().n();
    if u.len() != prior.grid().n() * ny {
        return Err(RiError::Dimension(format!(
            "payoff matrix has {} entries for a {} x {} grid pair",
            u.len(),
            prior.grid().n(),
            ny
        )));
    }
    let wx = prior.grid().weights();
    let wy = kernel.col_grid().weights();
    let mut acc = 0.0;
    for (i, row) in kernel.rows().enumerate() {
        let a = wx[i] * prior.values()[i];
        if a == 0.0 {
            continue;
        }
        let mut row_acc = 0.0;
        for ((q, w), uij) in row.iter().zip(wy).zip(&u[i * ny..(i + 1) * ny]) {
            if *q > 0.0 {
                row_acc += w * q * uij;
            }
        }
        acc += a * row_acc;
    }
    if !acc.is_finite() {
        return Err(RiError::Numeric(format!("expected payoff is {acc}")));
    }
    Ok(acc)
}

fn check_grids(prior: &DiscreteDensity, kernel: &ConditionalKernel) -> Result<()> {
    if !prior.grid().same_as(kernel.row_grid()) {
        return Err(RiError::Dimension(
            "kernel row grid does not match the prior grid".into(),
        ));
    }
    Ok(())
}

/// Deterministic one-column-per-row kernel on matching grids; used by tests
/// and capacity bounds. Each row is a unit spike `1/weight` at the given
/// column.
pub fn deterministic_kernel(
    row_grid: Grid,
    col_grid: Grid,
    assignment: &[usize],
) -> Result<ConditionalKernel> {
    if assignment.len() != row_grid.n() {
        return Err(RiError::Dimension(
            "assignment length does not match the row grid".into(),
        ));
    }
    let ny = col_grid.n();
    let mut values = vec![0.0; row_grid.n() * ny];
    for (i, &j) in assignment.iter().enumerate() {
        if j >= ny {
            return Err(RiError::Dimension(format!("column {j} out of range")));
        }
        values[i * ny + j] = 1.0 / col_grid.weights()[j];
    }
    ConditionalKernel::new_normalized(row_grid, col_grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::gaussian_density;
    use proptest::prelude::*;

    fn uniform_density(grid: &Grid) -> DiscreteDensity {
        DiscreteDensity::normalized(grid.clone(), vec![1.0; grid.n()]).unwrap()
    }

    #[test]
    fn independence_gives_zero_information() {
        let gx = Grid::uniform(-1.0, 1.0, 21).unwrap();
        let gy = Grid::uniform(0.0, 2.0, 31).unwrap();
        let p = gaussian_density(0.0, 0.2, &gx).unwrap();
        let g = gaussian_density(1.0, 0.1, &gy).unwrap();
        let rows: Vec<f64> = (0..gx.n()).flat_map(|_| g.values().to_vec()).collect();
        let k = ConditionalKernel::new_normalized(gx, gy, rows).unwrap();
        assert!(mutual_information(&p, &k).unwrap().abs() < 1e-10);
    }

    #[test]
    fn four_point_identity_kernel_is_two_bits() {
        let gx = Grid::uniform(0.0, 3.0, 4).unwrap();
        let gy = Grid::uniform(0.0, 3.0, 4).unwrap();
        // uniform prior in measure: w_i p_i = 1/4 at every node
        let pv: Vec<f64> = gx.weights().iter().map(|w| 0.25 / w).collect();
        let p = DiscreteDensity::new(gx.clone(), pv).unwrap();
        let k = deterministic_kernel(gx, gy, &[0, 1, 2, 3]).unwrap();
        let i = mutual_information(&p, &k).unwrap();
        assert!((i - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bivariate_gaussian_matches_closed_form() {
        // correlation budget rho^2 = 0.75 <=> 1 bit
        let rho2: f64 = 0.75;
        let rho = rho2.sqrt();
        let gx = Grid::uniform(-6.0, 6.0, 601).unwrap();
        let gy = Grid::uniform(-6.0, 6.0, 601).unwrap();
        let p = gaussian_density(0.0, 1.0, &gx).unwrap();
        let mut values = Vec::with_capacity(gx.n() * gy.n());
        for &x in gx.nodes() {
            let mu = rho * x;
            let d = gaussian_density(mu, 1.0 - rho2, &gy).unwrap();
            values.extend_from_slice(d.values());
        }
        let k = ConditionalKernel::new_normalized(gx, gy, values).unwrap();
        let i = mutual_information(&p, &k).unwrap();
        let oracle = -0.5 * (1.0 - rho2).log2();
        assert!((i - oracle).abs() < 1e-3, "I = {i}, oracle = {oracle}");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let gx = Grid::uniform(0.0, 1.0, 5).unwrap();
        let gx2 = Grid::uniform(0.0, 1.0, 6).unwrap();
        let gy = Grid::uniform(0.0, 1.0, 5).unwrap();
        let p = uniform_density(&gx2);
        let k = ConditionalKernel::new_normalized(gx, gy, vec![1.0; 25]).unwrap();
        assert!(matches!(
            mutual_information(&p, &k),
            Err(RiError::Dimension(_))
        ));
    }

    #[test]
    fn information_invariant_under_axis_relabeling() {
        // reflect the action axis: nodes negated and reversed, columns
        // reversed to match; mutual information must not change
        let gx = Grid::uniform(-1.0, 1.0, 11).unwrap();
        let gy = Grid::uniform(0.0, 1.0, 9).unwrap();
        let p = gaussian_density(0.0, 0.3, &gx).unwrap();
        let mut values = Vec::new();
        for &x in gx.nodes() {
            let d = gaussian_density(0.4 + 0.2 * x, 0.05, &gy).unwrap();
            values.extend_from_slice(d.values());
        }
        let k = ConditionalKernel::new_normalized(gx.clone(), gy.clone(), values.clone()).unwrap();

        let flipped_nodes: Vec<f64> = gy.nodes().iter().rev().map(|y| -y).collect();
        let gy2 = Grid::from_nodes(flipped_nodes).unwrap();
        let mut flipped = Vec::new();
        for row in values.chunks(gy.n()) {
            flipped.extend(row.iter().rev());
        }
        let k2 = ConditionalKernel::new_normalized(gx, gy2, flipped).unwrap();

        let i1 = mutual_information(&p, &k).unwrap();
        let i2 = mutual_information(&p, &k2).unwrap();
        assert!((i1 - i2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn information_is_nonnegative_up_to_quadrature(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let nx = rng.gen_range(3..12);
            let ny = rng.gen_range(3..12);
            let gx = Grid::uniform(-1.0, 1.0, nx).unwrap();
            let gy = Grid::uniform(-1.0, 1.0, ny).unwrap();
            let pv: Vec<f64> = (0..nx).map(|_| rng.gen_range(0.01..1.0)).collect();
            let p = DiscreteDensity::normalized(gx.clone(), pv).unwrap();
            let kv: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(0.01..1.0)).collect();
            let k = ConditionalKernel::new_unnormalized(gx, gy, kv)
                .unwrap()
                .row_normalized()
                .unwrap();
            let i = mutual_information(&p, &k).unwrap();
            prop_assert!(i >= -1e-8, "I = {}", i);
        }
    }
}
