//! Two-period consumption-savings model with logarithmic payoff
//! `U(x, y) = ln y + beta ln(x - y)` on `0 < y < x`.
//!
//! With `alpha = 1/lambda`, the stationarity candidate is
//! `h(x|y) = p(x) y^alpha (x - y)^(beta alpha)`, and the only prior for
//! which `h` normalizes in `x` is the power law
//! `p(x) = x^(-(1+beta) alpha - 1) / B(alpha, beta alpha + 1)` on
//! `[x0, infinity)`. Requiring that prior to have total mass one pins the
//! support bound:
//!
//! `x0 = [ (1+beta) alpha B(alpha, beta alpha + 1) ]^( -1 / ((1+beta) alpha) )`
//!
//! equivalently `alpha x0^((1+beta) alpha) B(alpha, beta alpha + 1) = 1/(1+beta)`,
//! which ties the multiplier `lambda_tilde = ln2 / alpha` to the model
//! parameters. (Both forms are verified against direct quadrature in the
//! tests; for `alpha = beta = 1` the closed form gives `x0 = 1` and
//! `p(x) = 2 x^-3`, whose mass on `[1, infinity)` is exactly one.)
//!
//! The reverse conditional `h` normalizes for every `y`, yet no forward
//! kernel `q(y|x) = g(y) y^alpha (x - y)^(beta alpha)` can: the running mass
//! `M(x) = integral_{x0}^{x} g(y) y^alpha (x - y)^(beta alpha) dy` is
//! strictly increasing in `x` for any nonnegative `g` with mass below `x`,
//! while normalization would force it to be constant. That asymmetry is the
//! model's headline diagnostic, produced by [`nonexistence_diagnostic`].

use crate::density::DiscreteDensity;
use crate::error::{Result, RiError};
use crate::grid::Grid;
use crate::special::log_beta;

use std::f64::consts::LN_2;

/// Default tail mass at which infinite upper limits are truncated.
pub const DEFAULT_TAIL_MASS: f64 = 1e-8;

/// Default node count for the dense one-dimensional grids used by the
/// normalization and moment checks.
pub const DEFAULT_GRID_N: usize = 30_001;

/// Whether actions may range below the prior's support bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSupport {
    /// `y >= x0` (default).
    FromLowerBound,
    /// any `y > 0`.
    AllPositive,
}

/// Parameters of the logarithmic model.
#[derive(Debug, Clone, Copy)]
pub struct LogModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub x0: f64,
    /// `ln B(alpha, beta alpha + 1)`, cached for the density formulas.
    ln_beta_fn: f64,
}

impl LogModelParams {
    /// Build with the support bound implied by prior normalization.
    pub fn new(alpha: f64, beta: f64) -> Result<LogModelParams> {
        let x0 = solve_x0(alpha, beta)?;
        Self::with_x0(alpha, beta, x0)
    }

    /// Build with an explicit support bound; [`Self::consistency_residual`]
    /// reports how far it is from the normalizing one.
    pub fn with_x0(alpha: f64, beta: f64, x0: f64) -> Result<LogModelParams> {
        if !(alpha > 0.0) || !(beta > 0.0) || !(x0 > 0.0) {
            return Err(RiError::Domain(format!(
                "log model requires alpha, beta, x0 > 0, got ({alpha}, {beta}, {x0})"
            )));
        }
        let ln_beta_fn = log_beta(alpha, beta * alpha + 1.0)?;
        Ok(LogModelParams { alpha, beta, x0, ln_beta_fn })
    }

    /// Multiplier in bits: `lambda_tilde = ln2 / alpha`.
    pub fn lambda_tilde_bits(&self) -> f64 {
        LN_2 / self.alpha
    }

    /// Multiplier in natural-log units: `lambda = 1 / alpha`.
    pub fn lambda_nats(&self) -> f64 {
        1.0 / self.alpha
    }

    /// `|alpha x0^((1+beta) alpha) B - 1/(1+beta)|`; zero exactly when `x0`
    /// is the normalizing support bound.
    pub fn consistency_residual(&self) -> f64 {
        let e = (1.0 + self.beta) * self.alpha;
        let lhs = self.alpha * (e * self.x0.ln() + self.ln_beta_fn).exp();
        (lhs - 1.0 / (1.0 + self.beta)).abs()
    }

    pub fn is_consistent(&self) -> bool {
        self.consistency_residual() <= 1e-10
    }

    /// Pareto tail exponent of the prior, `(1 + beta) alpha`.
    pub fn tail_exponent(&self) -> f64 {
        (1.0 + self.beta) * self.alpha
    }

    /// Geometric state grid `[x0, x_T]` with closed-form tail mass below
    /// `tail`: `(x_T / x0)^(-(1+beta) alpha) < tail`.
    pub fn default_state_grid(&self, n: usize, tail: f64) -> Result<Grid> {
        if !(tail > 0.0 && tail < 1.0) {
            return Err(RiError::Domain(format!("tail mass must be in (0,1), got {tail}")));
        }
        let ratio = tail.powf(-1.0 / self.tail_exponent());
        if !ratio.is_finite() {
            return Err(RiError::Numeric(format!(
                "truncation ratio overflowed for tail exponent {}",
                self.tail_exponent()
            )));
        }
        Ok(Grid::geometric(self.x0, self.x0 * ratio, n)?.declare_truncated())
    }

    /// Power-law prior `p(x) = x^(-(1+beta) alpha - 1) / B` evaluated
    /// pointwise on `grid` (which must start at `x0`) and renormalized
    /// there; the raw-mass diagnostic records the truncation plus
    /// quadrature defect.
    pub fn powerlaw_prior(&self, grid: &Grid) -> Result<DiscreteDensity> {
        if (grid.lower() - self.x0).abs() > 1e-12 * self.x0 {
            return Err(RiError::Domain(format!(
                "prior grid must start at x0 = {:.12}, got {:.12}",
                self.x0,
                grid.lower()
            )));
        }
        let k = self.tail_exponent() + 1.0;
        let values: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| (-k * x.ln() - self.ln_beta_fn).exp())
            .collect();
        DiscreteDensity::normalized(grid.clone(), values)
    }

    /// Reverse conditional density
    /// `h(x|y) = x^(-(1+beta) alpha - 1) y^alpha (x - y)^(beta alpha) / B`
    /// sampled on `x_grid`, zero where `x <= y`. Default support policy
    /// requires `y >= x0`.
    pub fn h_conditional(&self, y: f64, x_grid: &Grid) -> Result<Vec<f64>> {
        self.h_conditional_with_support(y, x_grid, ActionSupport::FromLowerBound)
    }

    pub fn h_conditional_with_support(
        &self,
        y: f64,
        x_grid: &Grid,
        support: ActionSupport,
    ) -> Result<Vec<f64>> {
        if !(y > 0.0) {
            return Err(RiError::Domain(format!(
                "conditioning action must be positive, got {y}"
            )));
        }
        if support == ActionSupport::FromLowerBound && y < self.x0 * (1.0 - 1e-12) {
            return Err(RiError::Domain(format!(
                "action {y} lies below the support bound x0 = {}; pass ActionSupport::AllPositive to allow it",
                self.x0
            )));
        }
        let k = self.tail_exponent() + 1.0;
        let ba = self.beta * self.alpha;
        Ok(x_grid
            .nodes()
            .iter()
            .map(|&x| {
                if x > y {
                    (-k * x.ln() + self.alpha * y.ln() + ba * (x - y).ln() - self.ln_beta_fn)
                        .exp()
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Grid for integrating `h(.|y)` in the state direction: the node
    /// spacing is logarithmic in `t = x - y`, which resolves both the
    /// `(x - y)^(beta alpha)` endpoint and the power-law tail. The
    /// truncation keeps the closed-form tail mass of `h` below `tail`.
    pub fn default_conditional_grid(&self, y: f64, n: usize, tail: f64) -> Result<Grid> {
        if !(y > 0.0) {
            return Err(RiError::Domain(format!("y must be positive, got {y}")));
        }
        // for x >> y, h ~ y^alpha x^(-alpha - 1) / B, so the mass beyond x_T
        // is about y^alpha x_T^(-alpha) / (alpha B)
        let x_t = y * (tail * self.alpha * self.ln_beta_fn.exp()).powf(-1.0 / self.alpha) + y;
        let t_lo = (y * 1e-10).ln();
        let t_hi = (x_t - y).ln();
        let m = n - 1;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(y);
        for i in 0..=m {
            nodes.push(y + (t_lo + (t_hi - t_lo) * i as f64 / m as f64).exp());
        }
        Ok(Grid::from_nodes(nodes)?.declare_truncated())
    }

    /// Closed-form conditional-mean ratio `E[X | Y = y] / y
    /// = (1 + beta) alpha / (alpha - 1)`, defined for `alpha > 1`.
    pub fn conditional_mean_ratio(&self) -> Result<f64> {
        conditional_mean_ratio(self.alpha, self.beta)
    }

    /// Quadrature cross-check of the conditional mean ratio: integrates
    /// `x h(x|y)` on a mean-aware truncated grid and divides by `y`.
    pub fn conditional_mean_ratio_by_quadrature(&self, y: f64, n: usize) -> Result<f64> {
        if self.alpha <= 1.0 {
            return Err(RiError::Nonexistence(format!(
                "conditional mean diverges for alpha = {} <= 1",
                self.alpha
            )));
        }
        // mean-integrand tail beyond x_T: y^alpha x_T^(1-alpha) / ((alpha-1) B)
        let tail = 1e-7;
        let x_t = y
            * (tail * (self.alpha - 1.0) * self.ln_beta_fn.exp()).powf(-1.0 / (self.alpha - 1.0))
            + y;
        let t_lo = (y * 1e-10).ln();
        let t_hi = (x_t - y).ln();
        let m = n - 1;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(y);
        for i in 0..=m {
            nodes.push(y + (t_lo + (t_hi - t_lo) * i as f64 / m as f64).exp());
        }
        let grid = Grid::from_nodes(nodes)?;
        let h = self.h_conditional_with_support(y, &grid, ActionSupport::AllPositive)?;
        let xh: Vec<f64> = h.iter().zip(grid.nodes()).map(|(v, x)| v * x).collect();
        Ok(grid.integrate(&xh)? / y)
    }
}

/// Support bound for which the power-law prior has total mass one:
/// `x0 = [ (1+beta) alpha B(alpha, beta alpha + 1) ]^(-1/((1+beta) alpha))`.
pub fn solve_x0(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(RiError::Domain(format!(
            "solve_x0 requires alpha, beta > 0, got ({alpha}, {beta})"
        )));
    }
    let e = (1.0 + beta) * alpha;
    let ln_b = log_beta(alpha, beta * alpha + 1.0)?;
    let x0 = (-(e.ln() + ln_b) / e).exp();
    if !x0.is_finite() || !(x0 > 0.0) {
        return Err(RiError::Numeric(format!(
            "support bound overflowed for alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(x0)
}

/// Closed-form conditional-mean ratio `(1 + beta) alpha / (alpha - 1)`.
pub fn conditional_mean_ratio(alpha: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(RiError::Domain(format!("beta must be positive, got {beta}")));
    }
    if !(alpha > 1.0) {
        return Err(RiError::Nonexistence(format!(
            "conditional mean diverges for alpha = {alpha} <= 1 (multiplier at or above ln 2 bits)"
        )));
    }
    Ok((1.0 + beta) * alpha / (alpha - 1.0))
}

/// Running forward mass `M(x) = integral_{x0}^{x} g(y) y^alpha (x-y)^(beta alpha) dy`
/// at each probe, with finite-difference slopes between consecutive probes.
///
/// Normalization of a forward kernel would force `M` to be constant; strict
/// monotonicity is therefore a nonexistence certificate.
#[derive(Debug, Clone)]
pub struct NonexistenceReport {
    pub probes: Vec<f64>,
    pub m_values: Vec<f64>,
    /// Finite-difference slopes `(M_{k+1} - M_k) / (x_{k+1} - x_k)`.
    pub slopes: Vec<f64>,
    pub strictly_increasing: bool,
}

/// Evaluate the running-mass diagnostic for an arbitrary nonnegative
/// marginal `g` sampled on `y_grid`.
pub fn nonexistence_diagnostic(
    params: &LogModelParams,
    g_values: &[f64],
    y_grid: &Grid,
    probes: &[f64],
) -> Result<NonexistenceReport> {
    if g_values.len() != y_grid.n() {
        return Err(RiError::Dimension(format!(
            "{} marginal values on a grid of {} nodes",
            g_values.len(),
            y_grid.n()
        )));
    }
    if probes.is_empty() {
        return Err(RiError::Dimension("no probe points supplied".into()));
    }
    for pair in probes.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(RiError::Domain("probes must be strictly increasing".into()));
        }
    }
    if probes[0] <= params.x0 {
        return Err(RiError::Domain(format!(
            "probes must lie above x0 = {}",
            params.x0
        )));
    }
    if g_values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(RiError::Domain("marginal values must be finite and nonnegative".into()));
    }
    if g_values.iter().all(|v| *v == 0.0) {
        return Err(RiError::Domain(
            "marginal is identically zero; the diagnostic needs positive mass".into(),
        ));
    }

    let ba = params.beta * params.alpha;
    let mut m_values = Vec::with_capacity(probes.len());
    let mut mass_below_every_probe = true;
    for &x in probes {
        let mut acc = 0.0;
        let mut mass_below = 0.0;
        for ((&y, &w), &g) in y_grid
            .nodes()
            .iter()
            .zip(y_grid.weights())
            .zip(g_values)
        {
            if y >= params.x0 && y < x {
                acc += w * g * (params.alpha * y.ln() + ba * (x - y).ln()).exp();
                mass_below += w * g;
            }
        }
        if mass_below <= 0.0 {
            mass_below_every_probe = false;
        }
        m_values.push(acc);
    }
    let slopes: Vec<f64> = m_values
        .windows(2)
        .zip(probes.windows(2))
        .map(|(m, x)| (m[1] - m[0]) / (x[1] - x[0]))
        .collect();
    let strictly_increasing =
        mass_below_every_probe && slopes.iter().all(|s| *s > 0.0) && m_values[0] > 0.0;
    Ok(NonexistenceReport { probes: probes.to_vec(), m_values, slopes, strictly_increasing })
}
