//! FPCA-FAR(1): truncate the weighted covariance to its leading `K`
//! eigendirections, regress next-period scores on current scores by least
//! squares, and map the score-space transition back to a kernel.
//!
//! The least-squares solution is usually written in row form,
//! `Â = (Σ ξₜξₜᵀ)⁻¹ Σ ξₜξₜ₊₁ᵀ`, so that `ξₜ₊₁ᵀ ≈ ξₜᵀ Â`, and the kernel as
//! `ψ̂(u, v) = Σⱼₖ Âⱼₖ φ̂ₖ(u) φ̂ⱼ(v)`. Both expressions use the same
//! row-form matrix, so the kernel reproduces the score recursion exactly:
//! applying it to `x` gives `Σₖ (Aŝ(x))ₖ φ̂ₖ` with `A = Âᵀ` the predictive
//! (column-form) transition. [`FpcaFit::transition`] stores `A`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FarError, Result};
use crate::grid::{Curve, GridRef};
use crate::moments::{
    centered_moments, unweight_kernel, FunctionalSample, OperatorEstimate, Tuning,
    WeightedMomentPair,
};

/// Eigenvalues below `-NEG_EIG_TOL·λ̂₁` are treated as a numerical failure;
/// those in `[-NEG_EIG_TOL·λ̂₁, 0)` are clamped to zero.
pub const NEG_EIG_TOL: f64 = 1e-10;

/// Largest admissible condition number of the score Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Eigendecomposition of `C̃₀` with eigenvalues sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    grid: GridRef,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal `Q`; column `k` is `vₖ`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    /// `φ̂ₖ = W^{-1/2} vₖ` (zero-based `k`).
    pub fn eigenfunction(&self, k: usize) -> Curve {
        let sw = self.grid.sqrt_weights();
        let vals = self
            .eigenvectors
            .column(k)
            .iter()
            .zip(sw)
            .map(|(v, s)| v / s)
            .collect();
        Curve::new(self.grid.clone(), vals).expect("eigenvectors are finite")
    }

    pub fn leading_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Symmetric eigendecomposition, sorted nonincreasing, with PSD clamping.
pub(crate) fn sorted_psd_eigen(mat: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = mat.nrows();
    let eig = SymmetricEigen::try_new(mat.clone(), f64::EPSILON, 0)
        .ok_or_else(|| FarError::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps the routine's order among ties.
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FarError::Numerical("non-finite eigenvalue".into()));
    }
    let floor = -NEG_EIG_TOL * values[0].max(0.0);
    for v in values.iter_mut() {
        if *v < floor {
            return Err(FarError::Numerical(format!(
                "covariance has a negative eigenvalue {v:.3e} beyond round-off"
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let vectors = DMatrix::from_fn(m, m, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok((values, vectors))
}

/// Full decomposition of the weighted covariance.
pub fn eigendecompose(moments: &WeightedMomentPair) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = sorted_psd_eigen(moments.c0_tilde())?;
    Ok(SpectralDecomposition {
        grid: moments.grid().clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest `k` whose cumulative eigenvalue share reaches `tau`.
pub fn select_k(eigenvalues: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(FarError::InvalidArgument(format!(
            "variance threshold must lie in (0, 1], got {tau}"
        )));
    }
    if eigenvalues.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(FarError::InvalidArgument(
            "eigenvalues must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(FarError::DegenerateSpectrum);
    }
    let mut cum = 0.0;
    for (i, v) in eigenvalues.iter().enumerate() {
        cum += v;
        if cum / total >= tau {
            return Ok(i + 1);
        }
    }
    // Only reachable through rounding when tau == 1.
    Ok(eigenvalues.len())
}

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Cumulative variance threshold τ ∈ (0, 1].
    Tau(f64),
    /// Explicit `K`.
    Components(usize),
}

/// Result of an FPCA-FAR fit.
#[derive(Debug, Clone)]
pub struct FpcaFit {
    pub estimate: OperatorEstimate,
    /// Predictive transition `A` (`ξ̂ₜ₊₁ = A ξₜ`), `K × K`.
    pub transition: DMatrix<f64>,
    pub k: usize,
    pub tau: Option<f64>,
}

/// A sample prepared for FPCA fits at several truncation levels: the
/// decomposition and the weighted centered data are computed once.
#[derive(Debug, Clone)]
pub struct FpcaModel {
    moments: WeightedMomentPair,
    decomposition: SpectralDecomposition,
    centered: DMatrix<f64>,
}

impl FpcaModel {
    pub fn new(sample: &FunctionalSample) -> Result<Self> {
        let mean = sample.mean_values();
        let centered = sample.weighted_centered(&mean)?;
        let (c0, c1) = centered_moments(&centered);
        let moments = WeightedMomentPair::from_weighted(
            sample.grid().clone(),
            c0,
            c1,
            Some(Curve::new(sample.grid().clone(), mean)?),
            sample.len(),
        )?;
        let decomposition = eigendecompose(&moments)?;
        Ok(Self {
            moments,
            decomposition,
            centered,
        })
    }

    pub fn moments(&self) -> &WeightedMomentPair {
        &self.moments
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn resolve_k(&self, truncation: Truncation) -> Result<usize> {
        match truncation {
            Truncation::Tau(tau) => select_k(self.decomposition.eigenvalues(), tau),
            Truncation::Components(k) => Ok(k),
        }
    }

    pub fn fit(&self, truncation: Truncation) -> Result<FpcaFit> {
        let m = self.decomposition.eigenvalues.len();
        let n = self.centered.nrows();
        let k = self.resolve_k(truncation)?;
        if k == 0 || k > m {
            return Err(FarError::InvalidArgument(format!(
                "truncation level must lie in 1..={m}, got {k}"
            )));
        }
        if n < k + 2 {
            return Err(FarError::InsufficientData(format!(
                "K = {k} needs at least {} curves, got {n}",
                k + 2
            )));
        }
        let basis = self.decomposition.eigenvectors.columns(0, k);
        // scores ξₜₖ = ⟨Xₜ − x̄, φ̂ₖ⟩ = vₖᵀ W^{1/2}(xₜ − x̄)
        let scores = &self.centered * basis;
        let lag = scores.rows(0, n - 1);
        let lead = scores.rows(1, n - 1);
        let gram = lag.tr_mul(&lag);
        let cross = lag.tr_mul(&lead);

        let gram_eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let (lo, hi) = (gram_eig.min(), gram_eig.max());
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_GRAM_CONDITION) {
            return Err(FarError::SingularSystem { condition });
        }
        let row_form = gram
            .cholesky()
            .ok_or(FarError::SingularSystem { condition })?
            .solve(&cross);
        let transition = row_form.transpose();

        let weighted = basis * &transition * basis.transpose();
        let tau = match truncation {
            Truncation::Tau(t) => Some(t),
            Truncation::Components(_) => None,
        };
        let estimate = unweight_kernel(&weighted, self.moments.grid(), Tuning::Fpca { tau, k })?;
        Ok(FpcaFit {
            estimate,
            transition,
            k,
            tau,
        })
    }
}

/// One-shot FPCA-FAR fit.
pub fn fpca_far_fit(sample: &FunctionalSample, truncation: Truncation) -> Result<FpcaFit> {
    FpcaModel::new(sample)?.fit(truncation)
}
