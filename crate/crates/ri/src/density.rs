//! Discretized probability densities and conditional kernels.
//!
//! A [`DiscreteDensity`] stores nonnegative values on a [`Grid`] whose
//! weighted sum is one. A [`ConditionalKernel`] stores one conditional
//! density per conditioning node (row-major); rows integrate to one over the
//! column grid unless the kernel is explicitly marked unnormalized, which is
//! how raw first-order-condition candidates are carried around before their
//! normalization is tested.

use crate::error::{Result, RiError};
use crate::grid::Grid;

/// Tolerance for the construction-time normalization check.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Nonnegative values on a grid integrating to one.
#[derive(Debug, Clone)]
pub struct DiscreteDensity {
    grid: Grid,
    values: Vec<f64>,
    /// Quadrature mass of the raw values before renormalization; 1.0 for
    /// densities that were already normalized on construction.
    raw_mass: f64,
}

impl DiscreteDensity {
    /// Wrap values that already integrate to one (within [`NORMALIZATION_TOL`]).
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<DiscreteDensity> {
        Self::check_values(&grid, &values)?;
        let mass = grid.integrate(&values)?;
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(RiError::Domain(format!(
                "density mass is {mass:.12}, outside 1 ± {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(DiscreteDensity { grid, values, raw_mass: mass })
    }

    /// Renormalize raw pointwise values on the grid. The raw mass is kept as
    /// a diagnostic; it is never silently discarded.
    pub fn normalized(grid: Grid, values: Vec<f64>) -> Result<DiscreteDensity> {
        Self::check_values(&grid, &values)?;
        let mass = grid.integrate(&values)?;
        if !(mass > 0.0) {
            return Err(RiError::Domain(
                "cannot normalize a density with zero mass".into(),
            ));
        }
        let values = values.iter().map(|v| v / mass).collect();
        Ok(DiscreteDensity { grid, values, raw_mass: mass })
    }

    fn check_values(grid: &Grid, values: &[f64]) -> Result<()> {
        if values.len() != grid.n() {
            return Err(RiError::Dimension(format!(
                "{} density values on a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        for v in values {
            if !v.is_finite() || *v < 0.0 {
                return Err(RiError::Domain(format!("invalid density value {v}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quadrature mass of the values handed to the constructor; the
    /// renormalization defect is `raw_mass - 1`.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Quadrature mean.
    pub fn mean(&self) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .map(|((x, w), v)| w * v * x)
            .sum()
    }

    /// Quadrature variance around the quadrature mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .map(|((x, w), v)| w * v * (x - m) * (x - m))
            .sum()
    }
}

/// Normal density evaluated pointwise on `grid` and renormalized there.
///
/// The raw mass (available through [`DiscreteDensity::raw_mass`]) records the
/// truncation plus quadrature defect; a grid narrower than `mu ± 6 sigma`
/// shows up there as visibly missing mass.
pub fn gaussian_density(mu: f64, sigma_sq: f64, grid: &Grid) -> Result<DiscreteDensity> {
    if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
        return Err(RiError::Domain(format!(
            "gaussian_density requires a positive variance, got {sigma_sq}"
        )));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_sq).sqrt();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|x| norm * (-(x - mu) * (x - mu) / (2.0 * sigma_sq)).exp())
        .collect();
    DiscreteDensity::normalized(grid.clone(), values)
}

/// Matrix of conditional densities: one row per conditioning node, columns
/// on the action grid.
#[derive(Debug, Clone)]
pub struct ConditionalKernel {
    row_grid: Grid,
    col_grid: Grid,
    /// Row-major `(row_grid.n() x col_grid.n())`.
    values: Vec<f64>,
    unnormalized: bool,
}

impl ConditionalKernel {
    /// Build a kernel whose rows must each integrate to one over the column
    /// grid within [`NORMALIZATION_TOL`].
    pub fn new_normalized(
        row_grid: Grid,
        col_grid: Grid,
        values: Vec<f64>,
    ) -> Result<ConditionalKernel> {
        let k = Self::new_unnormalized(row_grid, col_grid, values)?;
        for (i, row) in k.rows().enumerate() {
            let mass: f64 = row
                .iter()
                .zip(k.col_grid.weights())
                .map(|(v, w)| v * w)
                .sum();
            if (mass - 1.0).abs() > NORMALIZATION_TOL {
                return Err(RiError::Domain(format!(
                    "kernel row {i} integrates to {mass:.12}, outside 1 ± {NORMALIZATION_TOL:e}"
                )));
            }
        }
        Ok(ConditionalKernel { unnormalized: false, ..k })
    }

    /// Build a kernel exempt from the row-normalization check (raw
    /// first-order-condition candidates, perturbed kernels).
    pub fn new_unnormalized(
        row_grid: Grid,
        col_grid: Grid,
        values: Vec<f64>,
    ) -> Result<ConditionalKernel> {
        if values.len() != row_grid.n() * col_grid.n() {
            return Err(RiError::Dimension(format!(
                "kernel has {} values for a {} x {} grid pair",
                values.len(),
                row_grid.n(),
                col_grid.n()
            )));
        }
        for v in &values {
            if !v.is_finite() || *v < 0.0 {
                return Err(RiError::Domain(format!("invalid kernel value {v}")));
            }
        }
        Ok(ConditionalKernel { row_grid, col_grid, values, unnormalized: true })
    }

    /// Renormalize each row on the column grid.
    pub fn row_normalized(mut self) -> Result<ConditionalKernel> {
        let ncol = self.col_grid.n();
        let weights = self.col_grid.weights().to_vec();
        for i in 0..self.row_grid.n() {
            let row = &mut self.values[i * ncol..(i + 1) * ncol];
            let mass: f64 = row.iter().zip(&weights).map(|(v, w)| v * w).sum();
            if !(mass > 0.0) {
                return Err(RiError::Domain(format!(
                    "kernel row {i} has zero mass and cannot be normalized"
                )));
            }
            for v in row {
                *v /= mass;
            }
        }
        self.unnormalized = false;
        Ok(self)
    }

    pub fn row_grid(&self) -> &Grid {
        &self.row_grid
    }

    pub fn col_grid(&self) -> &Grid {
        &self.col_grid
    }

    pub fn is_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.col_grid.n();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.col_grid.n())
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.col_grid.n() + col]
    }

    pub(crate) fn set_value(&mut self, row: usize, col: usize, v: f64) {
        let n = self.col_grid.n();
        self.values[row * n + col] = v;
    }
}
