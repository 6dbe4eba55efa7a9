//! First-order conditions of the information-constrained payoff
//! maximization, and tools for testing them.
//!
//! The problem maximizes `E[U(X, Y)]` over conditional kernels `q(y|x)` at a
//! fixed prior `p(x)`, subject to `I(X, Y) <= kappa` bits. Because the
//! objective contains no derivatives of the unknown kernel, the stationarity
//! condition is pointwise rather than differential: any solution must have
//!
//! `h(x|y) = p(x) exp(U(x, y) / lambda)`
//!
//! where `h = q p / g` is the reverse conditional and `lambda` is the
//! multiplier in natural-log units. That candidate generically fails the
//! normalization boundary conditions, which is precisely what
//! [`bc_residual_h`] and [`bc_residual_q`] measure.
//!
//! The module also evaluates the Lagrangean and its variational derivative
//! two ways — a closed form and a finite spike perturbation — so each can
//! check the other.

use crate::density::{ConditionalKernel, DiscreteDensity};
use crate::error::{Result, RiError};
use crate::grid::Grid;
use crate::info::{expected_utility, marginal_values, mutual_information_with_marginal};
use crate::utility::UtilitySpec;

/// Default tolerance for declaring a boundary-condition residual satisfied:
/// one order above quadrature error at the default grid sizes.
pub const DEFAULT_BC_TOLERANCE: f64 = 1e-6;

/// Density floor for derivative probe points; below this the log terms are
/// numerically meaningless.
pub const PROBE_FLOOR: f64 = 1e-12;

/// Raw stationarity candidate `h(x|y) = p(x) exp(U(x, y) / lambda)`.
///
/// Rows are indexed by the action (y) grid, columns by the state (x) grid.
/// The kernel is deliberately left unnormalized: testing whether its rows
/// integrate to one is the whole point.
#[derive(Debug, Clone)]
pub struct ElCandidate {
    pub h: ConditionalKernel,
    /// Multiplier in natural-log units.
    pub lambda_nats: f64,
    /// Multiplier in bits: `lambda_tilde = lambda * ln 2`.
    pub lambda_tilde_bits: f64,
}

/// Per-node normalization residuals of a kernel's rows.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

impl ResidualReport {
    fn from_residuals(residuals: Vec<f64>, tolerance: f64) -> ResidualReport {
        let max_abs_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        ResidualReport {
            satisfied: max_abs_residual <= tolerance,
            residuals,
            max_abs_residual,
            tolerance,
        }
    }
}

/// Evaluate the stationarity candidate pointwise on `(action_grid, prior grid)`.
///
/// No normalization is applied. An exponent large enough to overflow `exp`
/// is reported as an error naming the offending node pair; `-inf` payoffs
/// (outside the support of the logarithmic model) map to zero.
pub fn el_candidate(
    prior: &DiscreteDensity,
    u: &UtilitySpec,
    action_grid: &Grid,
    lambda_nats: f64,
) -> Result<ElCandidate> {
    if !(lambda_nats > 0.0) || !lambda_nats.is_finite() {
        return Err(RiError::Domain(format!(
            "el_candidate requires lambda > 0, got {lambda_nats}"
        )));
    }
    let x_grid = prior.grid();
    let umat = u.tabulate(x_grid, action_grid)?;
    let nx = x_grid.n();
    let ny = action_grid.n();
    let mut values = vec![0.0; ny * nx];
    for (j, &y) in action_grid.nodes().iter().enumerate() {
        for (i, (&x, &p)) in x_grid.nodes().iter().zip(prior.values()).enumerate() {
            let e = umat[i * ny + j] / lambda_nats;
            if e > 709.0 {
                return Err(RiError::Numeric(format!(
                    "exp overflow in the stationarity candidate at (x, y) = ({x}, {y}): U/lambda = {e:.3}"
                )));
            }
            values[j * nx + i] = p * e.exp();
        }
    }
    let h = ConditionalKernel::new_unnormalized(action_grid.clone(), x_grid.clone(), values)?;
    Ok(ElCandidate {
        h,
        lambda_nats,
        lambda_tilde_bits: lambda_nats * std::f64::consts::LN_2,
    })
}

fn row_mass_residuals(kernel: &ConditionalKernel, tolerance: f64) -> ResidualReport {
    let wy = kernel.col_grid().weights();
    let residuals: Vec<f64> = kernel
        .rows()
        .map(|row| row.iter().zip(wy).map(|(v, w)| v * w).sum::<f64>() - 1.0)
        .collect();
    ResidualReport::from_residuals(residuals, tolerance)
}

/// Normalization residual of the candidate in the state direction:
/// `integral dx h(x|y) - 1` for every action node.
pub fn bc_residual_h(candidate: &ElCandidate) -> ResidualReport {
    bc_residual_h_with_tolerance(candidate, DEFAULT_BC_TOLERANCE)
}

pub fn bc_residual_h_with_tolerance(candidate: &ElCandidate, tolerance: f64) -> ResidualReport {
    row_mass_residuals(&candidate.h, tolerance)
}

/// Normalization residual of a forward kernel: `integral dy q(y|x) - 1` for
/// every state node.
pub fn bc_residual_q(kernel: &ConditionalKernel) -> ResidualReport {
    bc_residual_q_with_tolerance(kernel, DEFAULT_BC_TOLERANCE)
}

pub fn bc_residual_q_with_tolerance(kernel: &ConditionalKernel, tolerance: f64) -> ResidualReport {
    row_mass_residuals(kernel, tolerance)
}

/// Lagrangean `E[U] + lambda_tilde (kappa - I)` with `I` in bits.
///
/// Evaluated literally from the kernel values, with the marginal recomputed
/// from the kernel; no normalization is assumed or enforced, so the same
/// code path serves both proper kernels and spike-perturbed ones.
pub fn lagrangean_value(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    u: &[f64],
    lambda_tilde_bits: f64,
    kappa_bits: f64,
) -> Result<f64> {
    let eu = expected_utility(prior, kernel, u)?;
    let g = marginal_values(prior, kernel);
    let i = mutual_information_with_marginal(prior, kernel, &g);
    Ok(eu + lambda_tilde_bits * (kappa_bits - i))
}

/// Closed-form variational derivative of the Lagrangean with respect to
/// `q(y|x)` at the probe cell:
///
/// `dL/dq = p(x0) [ U(x0, y0) - lambda ln( h(x0|y0) / p(x0) ) ]`
///
/// with `h/p = q/g`. Requires positive density at the probe.
pub fn variational_derivative_analytic(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    u: &[f64],
    lambda_nats: f64,
    probe_x: usize,
    probe_y: usize,
) -> Result<f64> {
    let ny = kernel.col_grid().n();
    if probe_x >= prior.grid().n() || probe_y >= ny {
        return Err(RiError::Dimension(format!(
            "probe ({probe_x}, {probe_y}) out of range"
        )));
    }
    let p = prior.values()[probe_x];
    let q = kernel.value(probe_x, probe_y);
    if p * q <= PROBE_FLOOR {
        return Err(RiError::Domain(format!(
            "probe ({probe_x}, {probe_y}) has p*q = {:.3e}, below the {PROBE_FLOOR:e} floor",
            p * q
        )));
    }
    let g = marginal_values(prior, kernel)[probe_y];
    Ok(p * (u[probe_x * ny + probe_y] - lambda_nats * (q / g).ln()))
}

/// Finite-perturbation quotient `(L[q + eps * spike] - L[q]) / eps` where the
/// spike has height `1 / (w_x w_y)` at the probe cell, so its quadrature
/// mass is one. The perturbed kernel is evaluated literally, without
/// renormalization.
#[allow(clippy::too_many_arguments)]
pub fn variational_derivative_numeric(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    u: &[f64],
    lambda_tilde_bits: f64,
    kappa_bits: f64,
    probe_x: usize,
    probe_y: usize,
    eps: f64,
) -> Result<f64> {
    let ny = kernel.col_grid().n();
    if probe_x >= prior.grid().n() || probe_y >= ny {
        return Err(RiError::Dimension(format!(
            "probe ({probe_x}, {probe_y}) out of range"
        )));
    }
    if eps == 0.0 || !eps.is_finite() {
        return Err(RiError::Domain(format!("invalid perturbation size {eps}")));
    }
    let p = prior.values()[probe_x];
    let q = kernel.value(probe_x, probe_y);
    if p * q <= PROBE_FLOOR {
        return Err(RiError::Domain(format!(
            "probe ({probe_x}, {probe_y}) has p*q = {:.3e}, below the {PROBE_FLOOR:e} floor",
            p * q
        )));
    }
    let spike = 1.0 / (prior.grid().weights()[probe_x] * kernel.col_grid().weights()[probe_y]);
    let perturbed_value = q + eps * spike;
    if perturbed_value <= 0.0 {
        return Err(RiError::Numeric(format!(
            "perturbation drives q at the probe to {perturbed_value:.3e}; use a smaller eps"
        )));
    }
    let mut perturbed = kernel.clone();
    perturbed.set_value(probe_x, probe_y, perturbed_value);
    let l0 = lagrangean_value(prior, kernel, u, lambda_tilde_bits, kappa_bits)?;
    let l1 = lagrangean_value(prior, &perturbed, u, lambda_tilde_bits, kappa_bits)?;
    Ok((l1 - l0) / eps)
}

/// Richardson extrapolation of the forward quotient from two perturbation
/// sizes, canceling the leading linear error term.
#[allow(clippy::too_many_arguments)]
pub fn variational_derivative_richardson(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    u: &[f64],
    lambda_tilde_bits: f64,
    kappa_bits: f64,
    probe_x: usize,
    probe_y: usize,
    eps1: f64,
    eps2: f64,
) -> Result<f64> {
    if eps1 == eps2 {
        return Err(RiError::Domain(
            "richardson extrapolation needs two distinct perturbation sizes".into(),
        ));
    }
    let d1 = variational_derivative_numeric(
        prior, kernel, u, lambda_tilde_bits, kappa_bits, probe_x, probe_y, eps1,
    )?;
    let d2 = variational_derivative_numeric(
        prior, kernel, u, lambda_tilde_bits, kappa_bits, probe_x, probe_y, eps2,
    )?;
    Ok((eps1 * d2 - eps2 * d1) / (eps1 - eps2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::gaussian_density;
    use crate::utility::LqCoefficients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat_utility(nx: usize, ny: usize) -> Vec<f64> {
        vec![0.0; nx * ny]
    }

    #[test]
    fn zero_payoff_candidate_reproduces_the_prior() {
        let gx = Grid::uniform(-6.0, 6.0, 301).unwrap();
        let gy = Grid::uniform(-2.0, 2.0, 41).unwrap();
        let p = gaussian_density(0.0, 1.0, &gx).unwrap();
        let u = UtilitySpec::tabulated(gx.clone(), gy.clone(), flat_utility(301, 41)).unwrap();
        let cand = el_candidate(&p, &u, &gy, 1.0).unwrap();
        for row in cand.h.rows() {
            for (h, pv) in row.iter().zip(p.values()) {
                assert_eq!(h, pv);
            }
        }
        let rep = bc_residual_h(&cand);
        assert!(rep.max_abs_residual < 1e-9);
        assert!(rep.satisfied);
    }

    #[test]
    fn quadratic_loss_candidate_fails_normalization_for_every_multiplier() {
        // theta = phi = 1, b = c = 0: integral dx h(x|0) = 1/sqrt(1 + 2/lambda),
        // strictly below one, so the boundary condition cannot hold
        let gx = Grid::uniform(-8.0, 8.0, 801).unwrap();
        let gy = Grid::uniform(-1.0, 1.0, 5).unwrap();
        let p = gaussian_density(0.0, 1.0, &gx).unwrap();
        let u = UtilitySpec::Lq(LqCoefficients { theta: 1.0, phi: 1.0, b: 0.0, c: 0.0 });
        for lambda in [0.25, 2.0 / 3.0, 1.0, 4.0] {
            let cand = el_candidate(&p, &u, &gy, lambda).unwrap();
            let rep = bc_residual_h(&cand);
            assert!(!rep.satisfied);
            let expected_at_zero = 1.0 / (1.0 + 2.0 / lambda).sqrt() - 1.0;
            let mid = rep.residuals[2];
            assert!(
                (mid - expected_at_zero).abs() < 1e-6,
                "residual at y=0: {mid}, expected {expected_at_zero}"
            );
            assert!(rep.max_abs_residual > 0.1);
        }
    }

    #[test]
    fn candidate_scaling_invariance() {
        let gx = Grid::uniform(-4.0, 4.0, 81).unwrap();
        let gy = Grid::uniform(-1.0, 1.0, 17).unwrap();
        let p = gaussian_density(0.0, 1.0, &gx).unwrap();
        let u1 = UtilitySpec::Lq(LqCoefficients { theta: 1.0, phi: 0.8, b: 0.1, c: -0.2 });
        // scale payoff and multiplier by a power of two: exactly invariant
        let scale = 4.0;
        let base = u1.tabulate(&gx, &gy).unwrap();
        let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let u2 = UtilitySpec::tabulated(gx.clone(), gy.clone(), scaled).unwrap();
        let c1 = el_candidate(&p, &u1, &gy, 0.5).unwrap();
        let c2 = el_candidate(&p, &u2, &gy, 0.5 * scale).unwrap();
        assert_eq!(c1.h.values(), c2.h.values());
    }

    #[test]
    fn lambda_units_are_consistent() {
        let gx = Grid::uniform(-1.0, 1.0, 11).unwrap();
        let gy = Grid::uniform(-1.0, 1.0, 11).unwrap();
        let p = gaussian_density(0.0, 0.3, &gx).unwrap();
        let u = UtilitySpec::tabulated(gx.clone(), gy.clone(), flat_utility(11, 11)).unwrap();
        let cand = el_candidate(&p, &u, &gy, 0.7).unwrap();
        assert!((cand.lambda_tilde_bits - 0.7 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn overflow_is_reported_with_the_node_pair() {
        let gx = Grid::uniform(0.5, 2.0, 4).unwrap();
        let gy = Grid::uniform(0.5, 2.0, 4).unwrap();
        let p = DiscreteDensity::normalized(gx.clone(), vec![1.0; 4]).unwrap();
        let u = UtilitySpec::tabulated(gx.clone(), gy.clone(), vec![1000.0; 16]).unwrap();
        let err = el_candidate(&p, &u, &gy, 1e-3).unwrap_err();
        assert!(matches!(err, RiError::Numeric(_)));
    }

    #[test]
    fn lagrangean_reduces_to_expected_payoff() {
        let gx = Grid::uniform(-1.0, 1.0, 21).unwrap();
        let gy = Grid::uniform(-1.0, 1.0, 21).unwrap();
        let p = gaussian_density(0.0, 0.4, &gx).unwrap();
        let g = gaussian_density(0.0, 0.2, &gy).unwrap();
        let rows: Vec<f64> = (0..21).flat_map(|_| g.values().to_vec()).collect();
        let k = ConditionalKernel::new_normalized(gx.clone(), gy.clone(), rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u: Vec<f64> = (0..21 * 21).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eu = expected_utility(&p, &k, &u).unwrap();
        // lambda_tilde = 0: Lagrangean is E[U] alone
        let l0 = lagrangean_value(&p, &k, &u, 0.0, 1.0).unwrap();
        assert!((l0 - eu).abs() < 1e-14);
        // independent kernel with kappa = 0: I = 0, so again E[U]
        let l1 = lagrangean_value(&p, &k, &u, 0.8, 0.0).unwrap();
        assert!((l1 - eu).abs() < 1e-10);
    }

    #[test]
    fn analytic_derivative_vanishes_at_independence_with_zero_payoff() {
        let gx = Grid::uniform(-1.0, 1.0, 15).unwrap();
        let gy = Grid::uniform(-1.0, 1.0, 15).unwrap();
        let p = gaussian_density(0.0, 0.4, &gx).unwrap();
        let g = gaussian_density(0.0, 0.2, &gy).unwrap();
        let rows: Vec<f64> = (0..15).flat_map(|_| g.values().to_vec()).collect();
        let k = ConditionalKernel::new_normalized(gx.clone(), gy.clone(), rows).unwrap();
        let u = flat_utility(15, 15);
        let d = variational_derivative_analytic(&p, &k, &u, 1.0, 7, 7).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn numeric_and_analytic_derivatives_agree_on_random_kernels() {
        let n = 41;
        let gx = Grid::uniform(-4.0, 4.0, n).unwrap();
        let gy = Grid::uniform(-4.0, 4.0, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10 {
            let pv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let p = DiscreteDensity::normalized(gx.clone(), pv).unwrap();
            let kv: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let k = ConditionalKernel::new_unnormalized(gx.clone(), gy.clone(), kv)
                .unwrap()
                .row_normalized()
                .unwrap();
            let u: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lt = rng.gen_range(0.2..2.0);
            let lam = lt / std::f64::consts::LN_2;
            let (ix, iy) = (rng.gen_range(5..n - 5), rng.gen_range(5..n - 5));
            let da = variational_derivative_analytic(&p, &k, &u, lam, ix, iy).unwrap();
            // two-eps Richardson kills the leading curvature term of the
            // forward quotient; tolerance max(1e-4, 10 eps) on the result
            let eps = 1e-4;
            let dn = variational_derivative_richardson(
                &p, &k, &u, lt, 1.0, ix, iy, eps, eps / 10.0,
            )
            .unwrap();
            let tol = (10.0 * eps).max(1e-4) * da.abs().max(1.0);
            assert!((dn - da).abs() <= tol, "richardson {dn} vs analytic {da}");
        }
    }

    #[test]
    fn derivative_is_linear_in_constant_payoff_shifts() {
        let n = 31;
        let gx = Grid::uniform(-3.0, 3.0, n).unwrap();
        let gy = Grid::uniform(-3.0, 3.0, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let p = DiscreteDensity::normalized(gx.clone(), pv).unwrap();
        let kv: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let k = ConditionalKernel::new_unnormalized(gx.clone(), gy.clone(), kv)
            .unwrap()
            .row_normalized()
            .unwrap();
        let u: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = 0.37;
        let shifted: Vec<f64> = u.iter().map(|v| v + shift).collect();
        let (ix, iy) = (12, 20);
        let lam = 0.9;
        let d1 = variational_derivative_analytic(&p, &k, &u, lam, ix, iy).unwrap();
        let d2 = variational_derivative_analytic(&p, &k, &shifted, lam, ix, iy).unwrap();
        assert!((d2 - d1 - p.values()[ix] * shift).abs() < 1e-12);
        // and the finite-perturbation route sees the same shift
        let lt = lam * std::f64::consts::LN_2;
        let n1 = variational_derivative_numeric(&p, &k, &u, lt, 1.0, ix, iy, 1e-6).unwrap();
        let n2 =
            variational_derivative_numeric(&p, &k, &shifted, lt, 1.0, ix, iy, 1e-6).unwrap();
        assert!((n2 - n1 - p.values()[ix] * shift).abs() < 1e-6);
    }

    #[test]
    fn probe_floor_is_enforced() {
        let gx = Grid::uniform(0.0, 1.0, 4).unwrap();
        let gy = Grid::uniform(0.0, 1.0, 4).unwrap();
        let p = DiscreteDensity::normalized(gx.clone(), vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        let k = ConditionalKernel::new_unnormalized(gx, gy, vec![1.0; 16])
            .unwrap()
            .row_normalized()
            .unwrap();
        let u = flat_utility(4, 4);
        assert!(matches!(
            variational_derivative_analytic(&p, &k, &u, 1.0, 3, 0),
            Err(RiError::Domain(_))
        ));
    }
}
