//! Evaluation grids, trapezoidal weights and the L² geometry built on them.
//!
//! Every curve in the crate lives on a [`QuadratureGrid`]. Inner products are
//! the trapezoidal approximation `Σ wᵢ f(uᵢ) g(uᵢ)`; operators act on curves by
//! the same quadrature. Grids are immutable once built and are shared through
//! [`GridRef`] so that samples, moments and estimates can check that they were
//! produced on the same points.

use std::sync::Arc;

use crate::error::{FarError, Result};

pub type GridRef = Arc<QuadratureGrid>;

/// Evaluation points with trapezoidal integration weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Builds the trapezoidal rule on arbitrary strictly increasing points.
    pub fn trapezoid(points: &[f64]) -> Result<Self> {
        let m = points.len();
        if m < 2 {
            return Err(FarError::InvalidGrid(format!(
                "need at least 2 points, got {m}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(FarError::InvalidGrid("non-finite grid point".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(FarError::InvalidGrid(format!(
                "points not strictly increasing at index {}",
                i + 1
            )));
        }

        let mut weights = Vec::with_capacity(m);
        weights.push((points[1] - points[0]) / 2.0);
        for i in 1..m - 1 {
            weights.push((points[i + 1] - points[i - 1]) / 2.0);
        }
        weights.push((points[m - 1] - points[m - 2]) / 2.0);
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();

        Ok(Self {
            points: points.to_vec(),
            weights,
            sqrt_weights,
        })
    }

    /// Uniform grid of `m` points covering `[0, 1]` including both endpoints.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(FarError::InvalidGrid(format!(
                "need at least 2 points, got {m}"
            )));
        }
        let h = 1.0 / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| i as f64 * h).collect();
        points[m - 1] = 1.0;
        Self::trapezoid(&points)
    }

    /// Grid with caller-supplied weights. Used for synthetic geometries (for
    /// instance unit weights) in tests and library code; the weights must be
    /// strictly positive.
    pub fn with_weights(points: &[f64], weights: &[f64]) -> Result<Self> {
        let base = Self::trapezoid(points)?;
        if weights.len() != points.len() {
            return Err(FarError::Dimension {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(FarError::InvalidGrid(
                "weights must be finite and strictly positive".into(),
            ));
        }
        Ok(Self {
            points: base.points,
            weights: weights.to_vec(),
            sqrt_weights: weights.iter().map(|w| w.sqrt()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `√wᵢ`, the diagonal of `W^{1/2}`.
    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    /// `u_M − u_1`.
    pub fn span(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// Quadrature inner product on raw value slices.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        Ok(self
            .weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    pub fn norm_sq(&self, f: &[f64]) -> Result<f64> {
        self.dot(f, f)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(FarError::Dimension {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

/// True when both references describe the same grid.
pub fn same_grid(a: &GridRef, b: &GridRef) -> bool {
    Arc::ptr_eq(a, b) || a.as_ref() == b.as_ref()
}

/// Convenience constructor for the trapezoidal rule.
pub fn make_trapezoid_grid(points: &[f64]) -> Result<GridRef> {
    QuadratureGrid::trapezoid(points).map(Arc::new)
}

/// A single function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: GridRef,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: GridRef, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FarError::InvalidArgument("curve values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridRef) -> Self {
        let m = grid.len();
        Self {
            grid,
            values: vec![0.0; m],
        }
    }

    pub fn constant(grid: GridRef, c: f64) -> Self {
        let m = grid.len();
        Self {
            grid,
            values: vec![c; m],
        }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: GridRef, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&u| f(u)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `⟨f, g⟩ ≈ Σ wᵢ f(uᵢ) g(uᵢ)`.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    if !same_grid(&f.grid, &g.grid) {
        return Err(FarError::GridMismatch);
    }
    f.grid.dot(&f.values, &g.values)
}

pub fn l2_norm(f: &Curve) -> Result<f64> {
    inner_product(f, f).map(f64::sqrt)
}
