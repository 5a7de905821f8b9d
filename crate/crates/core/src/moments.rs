//! Sample moments of a functional time series and the operator estimates built
//! from them.
//!
//! Raw moments follow the usual centered definitions with the full-sample mean:
//! `C0 = (1/n) Σ (xₜ−x̄)(xₜ−x̄)ᵀ` and `C1 = (1/(n−1)) Σ_{t<n} (xₜ₊₁−x̄)(xₜ−x̄)ᵀ`.
//! The weighted representation conjugates both by `W^{1/2}` so that Euclidean
//! linear algebra on the matrices matches the L² geometry of the grid.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FarError, Result};
use crate::grid::{same_grid, Curve, GridRef};

/// Time-ordered curves on a shared grid. Row `t` of the data matrix is curve `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: GridRef,
    data: DMatrix<f64>,
}

impl FunctionalSample {
    /// `data` is `n × M` with one curve per row.
    pub fn new(grid: GridRef, data: DMatrix<f64>) -> Result<Self> {
        grid.check_len(data.ncols())?;
        if data.nrows() < 2 {
            return Err(FarError::InsufficientData(format!(
                "a functional sample needs at least 2 curves, got {}",
                data.nrows()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FarError::InvalidArgument("sample values must be finite".into()));
        }
        Ok(Self { grid, data })
    }

    pub fn from_curves(curves: &[Curve]) -> Result<Self> {
        let first = curves.first().ok_or_else(|| {
            FarError::InsufficientData("a functional sample needs at least 2 curves, got 0".into())
        })?;
        let grid = first.grid().clone();
        if curves.iter().any(|c| !same_grid(c.grid(), &grid)) {
            return Err(FarError::GridMismatch);
        }
        let m = grid.len();
        let data = DMatrix::from_fn(curves.len(), m, |t, i| curves[t].values()[i]);
        Self::new(grid, data)
    }

    /// Builds from row vectors; each row must have the grid's length.
    pub fn from_rows(grid: GridRef, rows: &[Vec<f64>]) -> Result<Self> {
        let m = grid.len();
        for r in rows {
            grid.check_len(r.len())?;
        }
        let data = DMatrix::from_fn(rows.len(), m, |t, i| rows[t][i]);
        Self::new(grid, data)
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    /// Number of curves `n`.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn grid_len(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn curve_values(&self, t: usize) -> Vec<f64> {
        self.data.row(t).iter().copied().collect()
    }

    pub fn curve(&self, t: usize) -> Curve {
        Curve::new(self.grid.clone(), self.curve_values(t)).expect("rows are validated")
    }

    /// Contiguous sub-sample `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(FarError::InvalidArgument(format!(
                "slice {start}..{end} out of range for {} curves",
                self.len()
            )));
        }
        let rows = self.data.rows(start, end - start).into_owned();
        Self::new(self.grid.clone(), rows)
    }

    pub fn mean_values(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.data.column_iter().map(|c| c.sum() / n).collect()
    }

    /// Rows `W^{1/2}(xₜ − mean)`, the sample in weighted coordinates.
    pub fn weighted_centered(&self, mean: &[f64]) -> Result<DMatrix<f64>> {
        self.grid.check_len(mean.len())?;
        let sw = self.grid.sqrt_weights();
        Ok(DMatrix::from_fn(self.len(), self.grid_len(), |t, i| {
            sw[i] * (self.data[(t, i)] - mean[i])
        }))
    }
}

/// Raw (unweighted) moment matrices and the sample mean.
#[derive(Debug, Clone)]
pub struct RawMoments {
    pub c0: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub mean: Curve,
    pub n: usize,
}

/// Centered covariance and lag-one cross-covariance of a sample.
pub fn sample_moments(sample: &FunctionalSample) -> Result<RawMoments> {
    let n = sample.len();
    if n < 2 {
        return Err(FarError::InsufficientData(format!(
            "moments need at least 2 curves, got {n}"
        )));
    }
    let mean = sample.mean_values();
    let m = sample.grid_len();
    let centered = DMatrix::from_fn(n, m, |t, i| sample.data[(t, i)] - mean[i]);
    let (c0, c1) = centered_moments(&centered);
    Ok(RawMoments {
        c0,
        c1,
        mean: Curve::new(sample.grid.clone(), mean)?,
        n,
    })
}

/// `(ZᵀZ/n, Z₊ᵀZ₋/(n−1))` for a centered `n × M` matrix `Z`, where `Z₊` drops
/// the first row and `Z₋` drops the last.
pub(crate) fn centered_moments(z: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = z.nrows();
    let mut c0 = z.tr_mul(z);
    c0 /= n as f64;
    symmetrize(&mut c0);
    let lead = z.rows(1, n - 1);
    let lag = z.rows(0, n - 1);
    let mut c1 = lead.tr_mul(&lag);
    c1 /= (n - 1) as f64;
    (c0, c1)
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let m = a.nrows();
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Weighted covariance `C̃₀` and cross-covariance `C̃₁`.
#[derive(Debug, Clone)]
pub struct WeightedMomentPair {
    grid: GridRef,
    c0_tilde: DMatrix<f64>,
    c1_tilde: DMatrix<f64>,
    mean: Curve,
    n: usize,
}

impl WeightedMomentPair {
    /// `sample_moments` followed by `to_weighted`.
    pub fn from_sample(sample: &FunctionalSample) -> Result<Self> {
        let raw = sample_moments(sample)?;
        to_weighted(&raw)
    }

    /// Assembles a pair from already-weighted matrices (used for synthetic
    /// problems and tests). `c0_tilde` is symmetrized.
    pub fn from_weighted(
        grid: GridRef,
        mut c0_tilde: DMatrix<f64>,
        c1_tilde: DMatrix<f64>,
        mean: Option<Curve>,
        n: usize,
    ) -> Result<Self> {
        let m = grid.len();
        for mat in [&c0_tilde, &c1_tilde] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(FarError::Dimension {
                    expected: m,
                    found: if mat.nrows() != m { mat.nrows() } else { mat.ncols() },
                });
            }
        }
        let mean = match mean {
            Some(c) if !same_grid(c.grid(), &grid) => return Err(FarError::GridMismatch),
            Some(c) => c,
            None => Curve::zeros(grid.clone()),
        };
        symmetrize(&mut c0_tilde);
        Ok(Self {
            grid,
            c0_tilde,
            c1_tilde,
            mean,
            n,
        })
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn c0_tilde(&self) -> &DMatrix<f64> {
        &self.c0_tilde
    }

    pub fn c1_tilde(&self) -> &DMatrix<f64> {
        &self.c1_tilde
    }

    pub fn mean(&self) -> &Curve {
        &self.mean
    }

    /// Number of curves the moments were computed from.
    pub fn sample_size(&self) -> usize {
        self.n
    }
}

/// `C̃ = W^{1/2} C W^{1/2}` for both moments.
pub fn to_weighted(raw: &RawMoments) -> Result<WeightedMomentPair> {
    let grid = raw.mean.grid().clone();
    let m = grid.len();
    for mat in [&raw.c0, &raw.c1] {
        if mat.nrows() != m || mat.ncols() != m {
            return Err(FarError::Dimension {
                expected: m,
                found: mat.nrows(),
            });
        }
    }
    let sw = grid.sqrt_weights();
    let conj = |c: &DMatrix<f64>| DMatrix::from_fn(m, m, |i, j| sw[i] * c[(i, j)] * sw[j]);
    WeightedMomentPair::from_weighted(
        grid.clone(),
        conj(&raw.c0),
        conj(&raw.c1),
        Some(raw.mean.clone()),
        raw.n,
    )
}

/// Which estimator produced a kernel, together with its resolved tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Tuning {
    Fpca { tau: Option<f64>, k: usize },
    Tikhonov { alpha: f64 },
    /// Kernels not produced by an estimator (true operators, baselines).
    Fixed,
}

impl Tuning {
    /// Resolved K for FPCA, α for Tikhonov.
    pub fn value(&self) -> Option<f64> {
        match self {
            Tuning::Fpca { k, .. } => Some(*k as f64),
            Tuning::Tikhonov { alpha } => Some(*alpha),
            Tuning::Fixed => None,
        }
    }
}

/// An `M × M` kernel matrix with entry `(i, j)` estimating `ψ(uᵢ, uⱼ)`.
#[derive(Debug, Clone)]
pub struct OperatorEstimate {
    grid: GridRef,
    kernel: DMatrix<f64>,
    tuning: Tuning,
}

impl OperatorEstimate {
    pub fn new(grid: GridRef, kernel: DMatrix<f64>, tuning: Tuning) -> Result<Self> {
        let m = grid.len();
        if kernel.nrows() != m || kernel.ncols() != m {
            return Err(FarError::Dimension {
                expected: m,
                found: kernel.nrows(),
            });
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(FarError::Numerical("kernel has non-finite entries".into()));
        }
        Ok(Self { grid, kernel, tuning })
    }

    pub fn zero(grid: GridRef) -> Self {
        let m = grid.len();
        Self {
            grid,
            kernel: DMatrix::zeros(m, m),
            tuning: Tuning::Fixed,
        }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn tuning(&self) -> Tuning {
        self.tuning
    }

    /// `W^{1/2} K W^{1/2}`, the operator in weighted coordinates.
    pub fn weighted_kernel(&self) -> DMatrix<f64> {
        let sw = self.grid.sqrt_weights();
        let m = self.grid.len();
        DMatrix::from_fn(m, m, |i, j| sw[i] * self.kernel[(i, j)] * sw[j])
    }

    /// Applies the kernel to raw values: `out_i = Σⱼ K(i,j) xⱼ wⱼ`.
    pub fn apply_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(x.len())?;
        let w = self.grid.weights();
        let wx: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
        Ok(self
            .kernel
            .row_iter()
            .map(|row| row.iter().zip(&wx).map(|(k, v)| k * v).sum())
            .collect())
    }
}

/// Quadrature action of the estimated operator on a curve.
pub fn apply_kernel(op: &OperatorEstimate, x: &Curve) -> Result<Curve> {
    if !same_grid(&op.grid, x.grid()) {
        return Err(FarError::GridMismatch);
    }
    let out = op.apply_values(x.values())?;
    Curve::new(op.grid.clone(), out)
}

/// `K(i,j) = Ψ̃(i,j) / √(wᵢ wⱼ)`.
pub fn unweight_kernel(
    weighted: &DMatrix<f64>,
    grid: &GridRef,
    tuning: Tuning,
) -> Result<OperatorEstimate> {
    if grid.weights().iter().any(|w| !(*w > 0.0)) {
        return Err(FarError::InvalidGrid("weights must be strictly positive".into()));
    }
    let m = grid.len();
    if weighted.nrows() != m || weighted.ncols() != m {
        return Err(FarError::Dimension {
            expected: m,
            found: weighted.nrows(),
        });
    }
    let sw = grid.sqrt_weights();
    let kernel = DMatrix::from_fn(m, m, |i, j| weighted[(i, j)] / (sw[i] * sw[j]));
    OperatorEstimate::new(grid.clone(), kernel, tuning)
}
