//! Clamped B-spline bases with uniform interior knots and the least-squares
//! smoother built on them.

use nalgebra::DMatrix;

use crate::error::{FarError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// `n_basis` functions of the given degree on `[0, 1]`, with
    /// `n_basis − degree − 1` uniform interior knots and boundary knots
    /// repeated `degree + 1` times.
    pub fn clamped_uniform(n_basis: usize, degree: usize) -> Result<Self> {
        if n_basis < degree + 1 {
            return Err(FarError::InvalidArgument(format!(
                "{n_basis} basis functions cannot carry degree {degree}"
            )));
        }
        let intervals = n_basis - degree;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..intervals).map(|i| i as f64 / intervals as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(Self { degree, knots })
    }

    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Values of every basis function at `x ∈ [0, 1]` (Cox–de Boor).
    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        let p = self.degree;
        let n = self.len();
        let t = &self.knots;
        let x = x.clamp(0.0, 1.0);
        // knot span with t[span] ≤ x < t[span+1]; the right end belongs to the last span
        let span = if x >= t[n] {
            n - 1
        } else {
            (p..n).rfind(|&i| t[i] <= x).unwrap_or(p)
        };
        let mut local = vec![0.0; p + 1];
        local[0] = 1.0;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = local[r] / (right[r + 1] + left[j - r]);
                local[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            local[j] = saved;
        }
        let mut out = vec![0.0; n];
        for (r, v) in local.into_iter().enumerate() {
            out[span - p + r] = v;
        }
        out
    }

    /// Row `i` holds the basis evaluated at `xs[i]`.
    pub fn design(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(xs.len(), self.len());
        for (i, &x) in xs.iter().enumerate() {
            for (j, v) in self.evaluate(x).into_iter().enumerate() {
                d[(i, j)] = v;
            }
        }
        d
    }
}

/// Least-squares spline fit at fixed inputs, evaluated at fixed outputs.
/// The whole pipeline is one linear map, stored as an `outputs × inputs`
/// matrix.
#[derive(Debug, Clone)]
pub struct SplineSmoother {
    map: DMatrix<f64>,
}

impl SplineSmoother {
    pub fn new(basis: &BSplineBasis, inputs: &[f64], outputs: &[f64]) -> Result<Self> {
        let design = basis.design(inputs);
        let gram = design.tr_mul(&design);
        let eig = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > hi * 1e-12) {
            return Err(FarError::Numerical(
                "spline design matrix is rank deficient".into(),
            ));
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| FarError::Numerical("spline normal equations not positive".into()))?;
        let coef_map = chol.solve(&design.transpose());
        Ok(Self {
            map: basis.design(outputs) * coef_map,
        })
    }

    pub fn input_len(&self) -> usize {
        self.map.ncols()
    }

    pub fn output_len(&self) -> usize {
        self.map.nrows()
    }

    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.input_len() {
            return Err(FarError::Dimension {
                expected: self.input_len(),
                found: values.len(),
            });
        }
        Ok((0..self.output_len())
            .map(|i| self.map.row(i).iter().zip(values).map(|(a, b)| a * b).sum())
            .collect())
    }
}
