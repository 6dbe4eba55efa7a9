//! Payoff specifications.
//!
//! Three variants cover the models handled by the crate: the linear-quadratic
//! family `-theta^2 y^2 + 2 phi x y - x^2 + 2 b x + 2 c y`, the two-period
//! logarithmic consumption payoff `ln y + beta ln(x - y)`, and a matrix of
//! tabulated values on a grid pair. The logarithmic payoff is `-inf` where
//! `y >= x`; the exponential weighting used everywhere downstream maps those
//! cells to zero probability.

use crate::error::{Result, RiError};
use crate::grid::Grid;

/// Coefficients of the linear-quadratic payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqCoefficients {
    pub theta: f64,
    pub phi: f64,
    pub b: f64,
    pub c: f64,
}

/// Payoff function `U(x, y)` of state `x` and action `y`.
#[derive(Debug, Clone)]
pub enum UtilitySpec {
    /// `-theta^2 y^2 + 2 phi x y - x^2 + 2 b x + 2 c y`
    Lq(LqCoefficients),
    /// `ln y + beta ln(x - y)` on `0 < y < x`, `-inf` elsewhere.
    Log { beta: f64 },
    /// Tabulated values, row-major over (state grid, action grid).
    Tabulated {
        state_grid: Grid,
        action_grid: Grid,
        values: Vec<f64>,
    },
}

impl UtilitySpec {
    pub fn log(beta: f64) -> Result<UtilitySpec> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(RiError::Domain(format!(
                "log payoff requires beta > 0, got {beta}"
            )));
        }
        Ok(UtilitySpec::Log { beta })
    }

    pub fn tabulated(state_grid: Grid, action_grid: Grid, values: Vec<f64>) -> Result<UtilitySpec> {
        if values.len() != state_grid.n() * action_grid.n() {
            return Err(RiError::Dimension(format!(
                "{} tabulated payoff values for a {} x {} grid pair",
                values.len(),
                state_grid.n(),
                action_grid.n()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RiError::Domain("tabulated payoff must be finite".into()));
        }
        Ok(UtilitySpec::Tabulated { state_grid, action_grid, values })
    }

    /// Pointwise evaluation. Tabulated payoffs cannot be evaluated off-grid.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            UtilitySpec::Lq(k) => Ok(crate::lq_gaussian::lq_utility_eval(
                k.theta, k.phi, k.b, k.c, x, y,
            )),
            UtilitySpec::Log { beta } => {
                if y > 0.0 && x > y {
                    Ok(y.ln() + beta * (x - y).ln())
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            UtilitySpec::Tabulated { .. } => Err(RiError::Domain(
                "tabulated payoff is only defined on its grid; use tabulate".into(),
            )),
        }
    }

    /// Row-major matrix of payoff values over `(state_grid, action_grid)`.
    ///
    /// `-inf` entries (logarithmic payoff outside its support) are allowed;
    /// `+inf` or NaN entries are an error.
    pub fn tabulate(&self, state_grid: &Grid, action_grid: &Grid) -> Result<Vec<f64>> {
        if let UtilitySpec::Tabulated { state_grid: sg, action_grid: ag, values } = self {
            if !sg.same_as(state_grid) || !ag.same_as(action_grid) {
                return Err(RiError::Dimension(
                    "tabulated payoff grids do not match the requested grids".into(),
                ));
            }
            return Ok(values.clone());
        }
        let mut out = Vec::with_capacity(state_grid.n() * action_grid.n());
        for &x in state_grid.nodes() {
            for &y in action_grid.nodes() {
                let u = self.eval(x, y)?;
                if u.is_nan() || u == f64::INFINITY {
                    return Err(RiError::Numeric(format!(
                        "payoff is {u} at (x, y) = ({x}, {y})"
                    )));
                }
                out.push(u);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_payoff_support() {
        let u = UtilitySpec::log(1.0).unwrap();
        assert!(u.eval(2.0, 1.0).unwrap().is_finite());
        assert_eq!(u.eval(1.0, 1.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(u.eval(1.0, 2.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(u.eval(1.0, -0.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn log_payoff_value() {
        // ln(1) + 2 ln(3 - 1) = 2 ln 2
        let u = UtilitySpec::log(2.0).unwrap();
        let got = u.eval(3.0, 1.0).unwrap();
        assert!((got - 2.0 * std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(UtilitySpec::log(0.0).is_err());
        assert!(UtilitySpec::log(-1.0).is_err());
    }

    #[test]
    fn tabulate_matches_eval() {
        let gx = Grid::uniform(0.5, 2.5, 5).unwrap();
        let gy = Grid::uniform(0.1, 0.4, 4).unwrap();
        let u = UtilitySpec::log(1.5).unwrap();
        let m = u.tabulate(&gx, &gy).unwrap();
        assert_eq!(m.len(), 20);
        let x = gx.nodes()[2];
        let y = gy.nodes()[1];
        assert_eq!(m[2 * 4 + 1], u.eval(x, y).unwrap());
    }
}
