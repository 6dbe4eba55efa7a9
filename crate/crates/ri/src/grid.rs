//! One-dimensional quadrature grids.
//!
//! A [`Grid`] is a finite discretization of a closed interval: strictly
//! increasing nodes plus positive quadrature weights. Every integral in the
//! crate is a weighted sum over a grid, so results are reproducible and the
//! summation order (ascending node index) is fixed.
//!
//! Three constructors cover the use cases:
//! - [`Grid::uniform`]: composite trapezoid on equally spaced nodes, the
//!   default rule everywhere.
//! - [`Grid::geometric`]: log-spaced nodes with trapezoid weights, for
//!   power-law integrands on truncated infinite domains.
//! - [`Grid::from_nodes`]: trapezoid weights on arbitrary strictly
//!   increasing nodes.

use crate::error::{Result, RiError};

/// Discretization of `[lower, upper]` with quadrature weights.
///
/// When the grid stands in for an infinite domain, `upper` is the truncation
/// point and [`Grid::is_truncated`] reports the declared truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: f64,
    upper: f64,
    truncated: bool,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid with composite-trapezoid weights: interior weights equal
    /// the spacing, endpoint weights are half the spacing.
    pub fn uniform(lower: f64, upper: f64, n: usize) -> Result<Grid> {
        if n < 2 {
            return Err(RiError::Domain(format!("grid needs at least 2 nodes, got {n}")));
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(RiError::Domain(format!(
                "invalid grid bounds [{lower}, {upper}]"
            )));
        }
        let h = (upper - lower) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| lower + h * i as f64).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Ok(Grid { lower, upper, truncated: false, nodes, weights })
    }

    /// Log-spaced grid on `[lower, upper]`, `lower > 0`, with trapezoid
    /// weights for the non-uniform spacing. Suited to integrands that decay
    /// like a power of `x`.
    pub fn geometric(lower: f64, upper: f64, n: usize) -> Result<Grid> {
        if !(lower > 0.0) {
            return Err(RiError::Domain(format!(
                "geometric grid needs a positive lower bound, got {lower}"
            )));
        }
        if n < 2 || !(upper > lower) || !upper.is_finite() {
            return Err(RiError::Domain(format!(
                "invalid geometric grid [{lower}, {upper}] with n = {n}"
            )));
        }
        let (la, lb) = (lower.ln(), upper.ln());
        let h = (lb - la) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| (la + h * i as f64).exp()).collect();
        // pin the endpoints so bounds are exact
        nodes[0] = lower;
        nodes[n - 1] = upper;
        Self::from_nodes(nodes)
    }

    /// Trapezoid weights on caller-supplied strictly increasing nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid> {
        let n = nodes.len();
        if n < 2 {
            return Err(RiError::Domain(format!("grid needs at least 2 nodes, got {n}")));
        }
        for pair in nodes.windows(2) {
            if !(pair[1] > pair[0]) || !pair[0].is_finite() || !pair[1].is_finite() {
                return Err(RiError::Domain(
                    "grid nodes must be finite and strictly increasing".into(),
                ));
            }
        }
        let mut weights = vec![0.0; n];
        weights[0] = 0.5 * (nodes[1] - nodes[0]);
        weights[n - 1] = 0.5 * (nodes[n - 1] - nodes[n - 2]);
        for i in 1..n - 1 {
            weights[i] = 0.5 * (nodes[i + 1] - nodes[i - 1]);
        }
        Ok(Grid {
            lower: nodes[0],
            upper: nodes[n - 1],
            truncated: false,
            nodes,
            weights,
        })
    }

    /// Mark the upper bound as a truncation point standing in for +infinity.
    pub fn declare_truncated(mut self) -> Grid {
        self.truncated = true;
        self
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// True when the upper bound truncates an infinite domain.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Uniform spacing, or `None` for non-uniform grids.
    pub fn spacing(&self) -> Option<f64> {
        let h = self.nodes[1] - self.nodes[0];
        let uniform = self
            .nodes
            .windows(2)
            .all(|p| ((p[1] - p[0]) - h).abs() <= 1e-12 * h.abs().max(1.0));
        uniform.then_some(h)
    }

    /// Same node count and same nodes (exact comparison); used to reject
    /// mixing densities and kernels built on different grids.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(other.nodes.iter())
                .all(|(a, b)| a == b)
    }

    /// Weighted sum of `f` against the quadrature weights, left to right.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        integrate(f, self)
    }
}

/// Quadrature of sampled values `f` over `grid`: sum of `weights[i] * f[i]`
/// in ascending index order.
pub fn integrate(f: &[f64], grid: &Grid) -> Result<f64> {
    if f.len() != grid.n() {
        return Err(RiError::Dimension(format!(
            "integrand has {} values but grid has {} nodes",
            f.len(),
            grid.n()
        )));
    }
    let mut acc = 0.0;
    for (v, w) in f.iter().zip(grid.weights()) {
        if !v.is_finite() {
            return Err(RiError::Numeric(format!("non-finite integrand value {v}")));
        }
        acc += w * v;
    }
    Ok(acc)
}
