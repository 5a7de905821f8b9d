//! Tikhonov-regularized operator estimation, `Ψ̃_α = C̃₁(C̃₀ + αI)⁻¹`, and
//! cross-validated choice of `α`.
//!
//! The estimator is evaluated through the spectral decomposition of `C̃₀`,
//! `C̃₁ Q diag(1/(λₖ + α)) Qᵀ`. Cross-validation reuses a single
//! decomposition of the training covariance for every grid value: after
//! rotating the validation lags into the eigenbasis, the loss for each `α`
//! is a quadratic form in the vector `1/(λ + α)` whose coefficient matrices
//! are precomputed once, so each grid point costs `O(M²)`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FarError, Result};
use crate::fpca::{eigendecompose, sorted_psd_eigen, SpectralDecomposition};
use crate::moments::{
    centered_moments, unweight_kernel, FunctionalSample, OperatorEstimate, Tuning,
    WeightedMomentPair,
};

/// Where an [`AlphaGrid`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridProvenance {
    Default,
    EigenvalueScaled,
    Application,
    Custom,
}

/// Strictly increasing positive candidate values for `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    values: Vec<f64>,
    provenance: GridProvenance,
}

impl AlphaGrid {
    pub fn new(values: Vec<f64>, provenance: GridProvenance) -> Result<Self> {
        if values.is_empty() {
            return Err(FarError::InvalidArgument("alpha grid is empty".into()));
        }
        if values.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(FarError::InvalidArgument(
                "alpha values must be finite and positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FarError::InvalidArgument(
                "alpha values must be strictly increasing".into(),
            ));
        }
        Ok(Self { values, provenance })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> GridProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn log_spaced(lo_exp: f64, hi_exp: f64, count: usize, scale: f64) -> Vec<f64> {
    (0..count)
        .map(|l| scale * 10f64.powf(lo_exp + (hi_exp - lo_exp) * l as f64 / (count - 1) as f64))
        .collect()
}

/// 25 values `scale · 10^{-5 + 5ℓ/24}`, ℓ = 0..24.
pub fn default_alpha_grid(scale: f64) -> Result<AlphaGrid> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(FarError::InvalidArgument(format!(
            "grid scale must be positive, got {scale}"
        )));
    }
    let provenance = if scale == 1.0 {
        GridProvenance::Default
    } else {
        GridProvenance::EigenvalueScaled
    };
    AlphaGrid::new(log_spaced(-5.0, 0.0, 25, scale), provenance)
}

/// 30 log-spaced values from `1e-4·λ̂₁` to `10·λ̂₁`.
pub fn application_alpha_grid(lambda1: f64) -> Result<AlphaGrid> {
    if !(lambda1.is_finite() && lambda1 > 0.0) {
        return Err(FarError::InvalidArgument(format!(
            "leading eigenvalue must be positive, got {lambda1}"
        )));
    }
    AlphaGrid::new(log_spaced(-4.0, 1.0, 30, lambda1), GridProvenance::Application)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(FarError::InvalidArgument(format!(
            "regularization parameter must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// `C̃₁ Q diag(1/(λ+α)) Qᵀ` in weighted coordinates.
pub fn weighted_tikhonov(
    moments: &WeightedMomentPair,
    decomposition: &SpectralDecomposition,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    let q = decomposition.eigenvectors();
    let mut scaled = q.clone();
    for (k, lambda) in decomposition.eigenvalues().iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / (lambda + alpha));
    }
    Ok(moments.c1_tilde() * scaled * q.transpose())
}

/// Tikhonov estimate reusing an existing decomposition of `C̃₀`.
pub fn tikhonov_from_decomposition(
    moments: &WeightedMomentPair,
    decomposition: &SpectralDecomposition,
    alpha: f64,
) -> Result<OperatorEstimate> {
    let weighted = weighted_tikhonov(moments, decomposition, alpha)?;
    unweight_kernel(&weighted, moments.grid(), Tuning::Tikhonov { alpha })
}

pub fn tikhonov_fit(moments: &WeightedMomentPair, alpha: f64) -> Result<OperatorEstimate> {
    check_alpha(alpha)?;
    let decomposition = eigendecompose(moments)?;
    tikhonov_from_decomposition(moments, &decomposition, alpha)
}

/// Direct route: solves `Ψ̃ (C̃₀ + αI) = C̃₁` by LU, one factorization per `α`.
/// Reference path for the spectral implementation and the naive CV.
pub fn weighted_tikhonov_dense(moments: &WeightedMomentPair, alpha: f64) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    let m = moments.c0_tilde().nrows();
    let shifted = moments.c0_tilde() + DMatrix::<f64>::identity(m, m) * alpha;
    // (C̃₀ + αI) is symmetric, so Ψ̃ᵀ = (C̃₀ + αI)⁻¹ C̃₁ᵀ.
    let transposed = shifted
        .lu()
        .solve(&moments.c1_tilde().transpose())
        .ok_or_else(|| FarError::Numerical("regularized system is singular".into()))?;
    Ok(transposed.transpose())
}

/// Cross-validation layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "scheme", content = "folds")]
pub enum CvScheme {
    /// Last `max(⌊0.2n⌋, 20)` curves are validation targets.
    Holdout,
    /// `k` chronological validation folds after an initial training block.
    ForwardFolds(usize),
}

/// One train/validate split. Indices are zero-based; every target `t` is
/// predicted from its observed predecessor `t − 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub train: Range<usize>,
    pub targets: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub selected_alpha: f64,
    /// `(α, CV(α))` in grid order.
    pub curve: Vec<(f64, f64)>,
    pub splits: Vec<CvSplit>,
}

/// Validation size used by the holdout scheme.
pub fn holdout_size(n: usize) -> usize {
    (n / 5).max(20)
}

pub fn cv_splits(n: usize, scheme: CvScheme) -> Result<Vec<CvSplit>> {
    match scheme {
        CvScheme::Holdout => {
            if n < 30 {
                return Err(FarError::InsufficientData(format!(
                    "holdout cross-validation needs at least 30 curves, got {n}"
                )));
            }
            let nv = holdout_size(n);
            Ok(vec![CvSplit {
                train: 0..n - nv,
                targets: n - nv..n,
            }])
        }
        CvScheme::ForwardFolds(k) => {
            if k == 0 {
                return Err(FarError::InvalidArgument("fold count must be positive".into()));
            }
            if n < 5 * k + 10 {
                return Err(FarError::InsufficientData(format!(
                    "{k}-fold forward cross-validation needs at least {} curves, got {n}",
                    5 * k + 10
                )));
            }
            let bound = |i: usize| i * n / (k + 1);
            Ok((1..=k)
                .map(|j| CvSplit {
                    train: 0..bound(j),
                    targets: bound(j)..bound(j + 1),
                })
                .collect())
        }
    }
}

/// Index of the smallest loss, ties resolved toward the later (larger) `α`.
pub fn select_from_curve(curve: &[(f64, f64)]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &(alpha, loss) in curve {
        if !loss.is_finite() {
            return Err(FarError::Numerical(format!(
                "cross-validation loss is not finite at alpha = {alpha}"
            )));
        }
        match best {
            Some((_, b)) if loss > b => {}
            _ => best = Some((alpha, loss)),
        }
    }
    best.map(|(a, _)| a)
        .ok_or_else(|| FarError::InvalidArgument("empty cross-validation curve".into()))
}

/// Training moments and validation data in weighted coordinates for a split.
struct SplitData {
    moments: WeightedMomentPair,
    /// `W^{1/2}(xₜ − x̄_tr)` for targets, one per column.
    targets: DMatrix<f64>,
    /// `W^{1/2}(xₜ₋₁ − x̄_tr)` for the matching lags, one per column.
    lags: DMatrix<f64>,
}

fn prepare_split(sample: &FunctionalSample, split: &CvSplit) -> Result<SplitData> {
    let train = sample.slice(split.train.start, split.train.end)?;
    let mean = train.mean_values();
    let z = train.weighted_centered(&mean)?;
    let (c0, c1) = centered_moments(&z);
    let moments =
        WeightedMomentPair::from_weighted(sample.grid().clone(), c0, c1, None, train.len())?;
    let sw = sample.grid().sqrt_weights();
    let m = sample.grid_len();
    let nv = split.targets.len();
    let data = sample.data();
    let targets = DMatrix::from_fn(m, nv, |i, c| {
        sw[i] * (data[(split.targets.start + c, i)] - mean[i])
    });
    let lags = DMatrix::from_fn(m, nv, |i, c| {
        sw[i] * (data[(split.targets.start + c - 1, i)] - mean[i])
    });
    Ok(SplitData {
        moments,
        targets,
        lags,
    })
}

/// Per-split loss as a function of `α` through precomputed quadratic-form
/// coefficients.
struct FastSplitLoss {
    eigenvalues: Vec<f64>,
    target_energy: f64,
    linear: DVector<f64>,
    quadratic: DMatrix<f64>,
    count: f64,
}

impl FastSplitLoss {
    fn new(data: &SplitData) -> Result<Self> {
        let (eigenvalues, q) = sorted_psd_eigen(data.moments.c0_tilde())?;
        // prediction for target t: B g∘rₜ with B = C̃₁Q, rₜ = Qᵀ lagₜ, g = 1/(λ+α)
        let b = data.moments.c1_tilde() * &q;
        let rotated = q.tr_mul(&data.lags);
        let bty = b.tr_mul(&data.targets);
        let linear = DVector::from_fn(eigenvalues.len(), |k, _| {
            bty.row(k).dot(&rotated.row(k))
        });
        let gram = b.tr_mul(&b);
        let outer = &rotated * rotated.transpose();
        let quadratic = gram.component_mul(&outer);
        Ok(Self {
            eigenvalues,
            target_energy: data.targets.norm_squared(),
            linear,
            quadratic,
            count: data.targets.ncols() as f64,
        })
    }

    fn mean_loss(&self, alpha: f64) -> f64 {
        let g = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|l| 1.0 / (l + alpha)),
        );
        let cross = g.dot(&self.linear);
        let quad = (&self.quadratic * &g).dot(&g);
        (self.target_energy - 2.0 * cross + quad) / self.count
    }
}

fn validate_inputs(sample: &FunctionalSample, grid: &AlphaGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(FarError::InvalidArgument("alpha grid is empty".into()));
    }
    if sample.len() < 2 {
        return Err(FarError::InsufficientData("sample too short".into()));
    }
    Ok(())
}

/// Cross-validated `α` through one eigendecomposition per split.
pub fn cv_select_alpha(
    sample: &FunctionalSample,
    grid: &AlphaGrid,
    scheme: CvScheme,
) -> Result<CvResult> {
    validate_inputs(sample, grid)?;
    let splits = cv_splits(sample.len(), scheme)?;
    let losses = splits
        .iter()
        .map(|s| prepare_split(sample, s).and_then(|d| FastSplitLoss::new(&d)))
        .collect::<Result<Vec<_>>>()?;
    let folds = losses.len() as f64;
    let curve: Vec<(f64, f64)> = grid
        .values()
        .iter()
        .map(|&a| (a, losses.iter().map(|l| l.mean_loss(a)).sum::<f64>() / folds))
        .collect();
    Ok(CvResult {
        selected_alpha: select_from_curve(&curve)?,
        curve,
        splits,
    })
}

/// Reference cross-validation: a dense solve per `α` and explicit prediction
/// of every validation curve.
pub fn cv_select_alpha_naive(
    sample: &FunctionalSample,
    grid: &AlphaGrid,
    scheme: CvScheme,
) -> Result<CvResult> {
    validate_inputs(sample, grid)?;
    let splits = cv_splits(sample.len(), scheme)?;
    let data = splits
        .iter()
        .map(|s| prepare_split(sample, s))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = Vec::with_capacity(grid.len());
    for &alpha in grid.values() {
        let mut total = 0.0;
        for d in &data {
            let psi = weighted_tikhonov_dense(&d.moments, alpha)?;
            let residual = &d.targets - psi * &d.lags;
            total += residual.norm_squared() / d.targets.ncols() as f64;
        }
        curve.push((alpha, total / data.len() as f64));
    }
    Ok(CvResult {
        selected_alpha: select_from_curve(&curve)?,
        curve,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuadratureGrid;
    use std::sync::Arc;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    fn synthetic_pair(c0: DMatrix<f64>, c1: DMatrix<f64>) -> WeightedMomentPair {
        let m = c0.nrows();
        let grid = Arc::new(QuadratureGrid::uniform(m).unwrap());
        WeightedMomentPair::from_weighted(grid, c0, c1, None, 50).unwrap()
    }

    fn random_sample(n: usize, m: usize, seed: u64) -> FunctionalSample {
        let mut next = lcg(seed);
        let grid = Arc::new(QuadratureGrid::uniform(m).unwrap());
        let mut prev = vec![0.0; m];
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let row: Vec<f64> = prev.iter().map(|p| 0.5 * p + next()).collect();
                prev = row.clone();
                row
            })
            .collect();
        FunctionalSample::from_rows(grid, &rows).unwrap()
    }

    #[test]
    fn diagonal_case() {
        let d = [3.0, 1.0, 0.5, 0.1];
        let c = [0.9, -0.3, 0.2, 0.05];
        let pair = synthetic_pair(
            DMatrix::from_diagonal(&DVector::from_row_slice(&d)),
            DMatrix::from_diagonal(&DVector::from_row_slice(&c)),
        );
        let alpha = 0.2;
        let dec = eigendecompose(&pair).unwrap();
        let psi = weighted_tikhonov(&pair, &dec, alpha).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { c[i] / (d[i] + alpha) } else { 0.0 };
                assert!((psi[(i, j)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_cross_covariance_gives_zero_estimate() {
        let mut next = lcg(3);
        let b = DMatrix::from_fn(5, 8, |_, _| next());
        let pair = synthetic_pair(&b * b.transpose(), DMatrix::zeros(5, 5));
        for alpha in [1e-5, 0.1, 10.0] {
            let est = tikhonov_fit(&pair, alpha).unwrap();
            assert!(est.kernel().iter().all(|v| *v == 0.0));
            assert_eq!(est.tuning(), Tuning::Tikhonov { alpha });
        }
    }

    #[test]
    fn spectral_route_matches_dense_solve() {
        let mut next = lcg(8);
        let b = DMatrix::from_fn(8, 12, |_, _| next());
        let pair = synthetic_pair(&b * b.transpose(), DMatrix::from_fn(8, 8, |_, _| next()));
        let dec = eigendecompose(&pair).unwrap();
        let spectral = weighted_tikhonov(&pair, &dec, 0.1).unwrap();
        let dense = weighted_tikhonov_dense(&pair, 0.1).unwrap();
        assert!((&spectral - &dense).norm() <= 1e-10 * dense.norm());
    }

    #[test]
    fn nonpositive_alpha_is_rejected() {
        let pair = synthetic_pair(DMatrix::identity(3, 3), DMatrix::identity(3, 3));
        for a in [0.0, -1.0, f64::NAN] {
            assert!(matches!(tikhonov_fit(&pair, a), Err(FarError::InvalidArgument(_))));
        }
    }

    #[test]
    fn default_grid_values() {
        let g = default_alpha_grid(1.0).unwrap();
        assert_eq!(g.len(), 25);
        assert!((g.values()[0] - 1e-5).abs() < 1e-20);
        assert_eq!(g.values()[24], 1.0);
        let ratio = 10f64.powf(5.0 / 24.0);
        assert!((ratio - 1.6156).abs() < 1e-4);
        for w in g.values().windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        let g10 = default_alpha_grid(10.0).unwrap();
        assert!((g10.values()[0] - 1e-4).abs() < 1e-19);
        assert!((g10.values()[24] - 10.0).abs() < 1e-14);
        assert_eq!(g10.provenance(), GridProvenance::EigenvalueScaled);
        assert!(default_alpha_grid(0.0).is_err());
    }

    #[test]
    fn application_grid_values() {
        let g = application_alpha_grid(1.0).unwrap();
        assert_eq!(g.len(), 30);
        assert!((g.values()[0] - 1e-4).abs() < 1e-18);
        assert!((g.values()[29] - 10.0).abs() < 1e-13);
        let g2 = application_alpha_grid(2.0).unwrap();
        assert!((g2.values()[0] - 2e-4).abs() < 1e-18);
        assert!((g2.values()[29] - 20.0).abs() < 1e-13);
        assert!(g2.values().windows(2).all(|w| w[1] > w[0] && w[0] > 0.0));
        assert!(application_alpha_grid(-1.0).is_err());
    }

    #[test]
    fn holdout_split_layout() {
        let s = cv_splits(100, CvScheme::Holdout).unwrap();
        assert_eq!(s, vec![CvSplit { train: 0..80, targets: 80..100 }]);
        let s = cv_splits(200, CvScheme::Holdout).unwrap();
        assert_eq!(s, vec![CvSplit { train: 0..160, targets: 160..200 }]);
        assert!(matches!(
            cv_splits(29, CvScheme::Holdout),
            Err(FarError::InsufficientData(_))
        ));
    }

    #[test]
    fn forward_fold_layout() {
        let s = cv_splits(100, CvScheme::ForwardFolds(5)).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], CvSplit { train: 0..16, targets: 16..33 });
        assert_eq!(s[4].targets.end, 100);
        for w in s.windows(2) {
            assert_eq!(w[0].targets.end, w[1].targets.start);
            assert_eq!(w[1].train, 0..w[1].targets.start);
        }
        assert!(cv_splits(34, CvScheme::ForwardFolds(5)).is_err());
        assert!(cv_splits(35, CvScheme::ForwardFolds(5)).is_ok());
    }

    #[test]
    fn ties_go_to_the_larger_alpha() {
        let flat = vec![(0.1, 2.0), (1.0, 2.0), (10.0, 2.0)];
        assert_eq!(select_from_curve(&flat).unwrap(), 10.0);
        let dip = vec![(0.1, 2.0), (1.0, 1.0), (10.0, 2.0)];
        assert_eq!(select_from_curve(&dip).unwrap(), 1.0);
        assert!(select_from_curve(&[(1.0, f64::NAN)]).is_err());
    }

    #[test]
    fn fast_cv_matches_naive_cv() {
        let s = random_sample(60, 21, 17);
        let grid = default_alpha_grid(1.0).unwrap();
        for scheme in [CvScheme::Holdout, CvScheme::ForwardFolds(3)] {
            let fast = cv_select_alpha(&s, &grid, scheme).unwrap();
            let naive = cv_select_alpha_naive(&s, &grid, scheme).unwrap();
            for ((a, f), (_, n)) in fast.curve.iter().zip(&naive.curve) {
                assert!((f - n).abs() <= 1e-9 * n.abs(), "alpha {a}: {f} vs {n}");
            }
            assert_eq!(fast.selected_alpha, naive.selected_alpha);
        }
    }

    #[test]
    fn holdout_is_deterministic() {
        let s = random_sample(50, 9, 2);
        let grid = default_alpha_grid(1.0).unwrap();
        let a = cv_select_alpha(&s, &grid, CvScheme::Holdout).unwrap();
        let b = cv_select_alpha(&s, &grid, CvScheme::Holdout).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn well_identified_dynamics_prefer_small_alpha() {
        // Two rotation planes with radius 0.85 acting on the span of four
        // smooth functions, innovations confined to the same span. The
        // regressors span the dynamics exactly, so shrinkage only adds bias.
        let m = 21;
        let grid = Arc::new(QuadratureGrid::uniform(m).unwrap());
        let basis: Vec<Vec<f64>> = (1..=4)
            .map(|j| {
                grid.points()
                    .iter()
                    .map(|u| (std::f64::consts::PI * j as f64 * u).cos())
                    .collect()
            })
            .collect();
        let (c1, s1) = (0.85 * 0.6f64.cos(), 0.85 * 0.6f64.sin());
        let (c2, s2) = (0.85 * 1.7f64.cos(), 0.85 * 1.7f64.sin());
        let mut next = lcg(41);
        let mut xi = [0.0; 4];
        let mut rows = Vec::new();
        for t in 0..500 {
            xi = [
                c1 * xi[0] - s1 * xi[1] + next(),
                s1 * xi[0] + c1 * xi[1] + next(),
                c2 * xi[2] - s2 * xi[3] + next(),
                s2 * xi[2] + c2 * xi[3] + next(),
            ];
            if t >= 100 {
                rows.push(
                    (0..m)
                        .map(|i| (0..4).map(|k| xi[k] * basis[k][i]).sum())
                        .collect::<Vec<f64>>(),
                );
            }
        }
        let s = FunctionalSample::from_rows(grid, &rows).unwrap();
        let lambda1 = eigendecompose(&WeightedMomentPair::from_sample(&s).unwrap())
            .unwrap()
            .leading_eigenvalue();
        let grid = default_alpha_grid(lambda1).unwrap();
        let cv = cv_select_alpha(&s, &grid, CvScheme::Holdout).unwrap();
        let upper: Vec<f64> = cv
            .curve
            .iter()
            .filter(|(a, _)| *a >= 1e-2 * lambda1)
            .map(|p| p.1)
            .collect();
        assert!(upper.windows(2).all(|w| w[1] > w[0]), "{upper:?}");
        assert!(cv.selected_alpha < 1e-2 * lambda1, "selected {}", cv.selected_alpha);
    }

    #[test]
    fn short_samples_are_rejected() {
        let s = random_sample(20, 5, 1);
        let grid = default_alpha_grid(1.0).unwrap();
        assert!(matches!(
            cv_select_alpha(&s, &grid, CvScheme::Holdout),
            Err(FarError::InsufficientData(_))
        ));
    }

    #[test]
    fn regularized_norm_decreases_in_alpha() {
        let s = random_sample(80, 11, 23);
        let pair = WeightedMomentPair::from_sample(&s).unwrap();
        let dec = eigendecompose(&pair).unwrap();
        let grid = default_alpha_grid(1.0).unwrap();
        let mut last = f64::INFINITY;
        for &a in grid.values() {
            let psi = weighted_tikhonov(&pair, &dec, a).unwrap();
            let top = psi.singular_values().max();
            assert!(top <= last * (1.0 + 1e-12));
            last = top;
        }
        let big = 1e6 * dec.leading_eigenvalue();
        let psi = weighted_tikhonov(&pair, &dec, big).unwrap();
        let c1_norm = pair.c1_tilde().singular_values().max();
        assert!(psi.singular_values().max() <= c1_norm / big);
    }
}
