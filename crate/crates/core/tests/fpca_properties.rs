use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use tikfar::fpca::{fpca_far_fit, FpcaModel, Truncation};
use tikfar::grid::{inner_product, Curve, QuadratureGrid};
use tikfar::moments::{apply_kernel, FunctionalSample, WeightedMomentPair};
use tikfar::simulator::{fourier_basis, NormalStream};
use tikfar::tikhonov::weighted_tikhonov_dense;

/// Curves `Σⱼ sₜⱼ eⱼ(u)` on a uniform grid with scores from a diagonal AR(1).
fn fourier_sample(n: usize, m: usize, coeffs: &[f64], sds: &[f64], seed: u64) -> FunctionalSample {
    let grid = Arc::new(QuadratureGrid::uniform(m).unwrap());
    let basis = fourier_basis(coeffs.len(), &grid).unwrap();
    let mut rng = NormalStream::new(seed);
    let mut s = vec![0.0; coeffs.len()];
    for _ in 0..50 {
        for j in 0..s.len() {
            s[j] = coeffs[j] * s[j] + sds[j] * rng.next_normal();
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            for j in 0..s.len() {
                s[j] = coeffs[j] * s[j] + sds[j] * rng.next_normal();
            }
            (0..m)
                .map(|i| (0..s.len()).map(|j| s[j] * basis[(j, i)]).sum())
                .collect()
        })
        .collect();
    FunctionalSample::from_rows(grid, &rows).unwrap()
}

#[test]
fn scalar_ar1_coefficient_is_recovered() {
    let sample = fourier_sample(400, 51, &[0.5], &[1.0], 7);
    let fit = fpca_far_fit(&sample, Truncation::Components(1)).unwrap();
    let a = fit.transition[(0, 0)];
    assert!((a - 0.5).abs() < 0.1, "estimated {a}");
}

#[test]
fn independent_scores_have_no_dynamics() {
    let sample = fourier_sample(400, 51, &[0.0], &[1.0], 11);
    let fit = fpca_far_fit(&sample, Truncation::Components(1)).unwrap();
    assert!(fit.transition[(0, 0)].abs() < 0.15);
}

fn eigenfunctions(sample: &FunctionalSample) -> (Vec<Curve>, DMatrix<f64>) {
    let model = FpcaModel::new(sample).unwrap();
    let d = model.decomposition();
    let m = sample.grid_len();
    let phis = (0..m).map(|k| d.eigenfunction(k)).collect();
    (phis, d.eigenvectors().clone())
}

/// Kernel rebuilt from eigenvectors with arbitrary column signs: scores,
/// least-squares VAR over t = 1..n−1, and `W^{-1/2} V Aᵀ Vᵀ W^{-1/2}`.
fn independent_kernel(sample: &FunctionalSample, k: usize, signs: &[f64]) -> DMatrix<f64> {
    let grid = sample.grid();
    let (_, v) = eigenfunctions(sample);
    let mut v = v.columns(0, k).into_owned();
    for (j, s) in signs.iter().enumerate().take(k) {
        v.column_mut(j).scale_mut(*s);
    }
    let n = sample.len();
    let mean = sample.mean_values();
    let sw = grid.sqrt_weights();
    let xc = DMatrix::from_fn(n, grid.len(), |t, i| (sample.data()[(t, i)] - mean[i]) * sw[i]);
    let scores = &xc * &v;
    let lag = scores.rows(0, n - 1).into_owned();
    let lead = scores.rows(1, n - 1).into_owned();
    let a_row = (lag.transpose() * &lag).try_inverse().unwrap() * (lag.transpose() * lead);
    let weighted = &v * a_row.transpose() * v.transpose();
    DMatrix::from_fn(grid.len(), grid.len(), |i, j| weighted[(i, j)] / (sw[i] * sw[j]))
}

/// Full-rank sample: every grid value follows its own AR(1).
fn pointwise_sample(n: usize, coeffs: &[f64], seed: u64) -> FunctionalSample {
    let m = coeffs.len();
    let grid = Arc::new(QuadratureGrid::uniform(m).unwrap());
    let mut rng = NormalStream::new(seed);
    let mut x = vec![0.0; m];
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            for (v, c) in x.iter_mut().zip(coeffs) {
                *v = c * *v + rng.next_normal();
            }
            x.clone()
        })
        .collect();
    FunctionalSample::from_rows(grid, &rows).unwrap()
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prediction_matches_score_space_recursion(seed in any::<u64>(), k in 1usize..5, xseed in any::<u64>()) {
        let sample = fourier_sample(80, 17, &[0.6, -0.3, 0.4, 0.2, 0.1], &[1.0, 0.8, 0.6, 0.4, 0.3], seed);
        let fit = fpca_far_fit(&sample, Truncation::Components(k)).unwrap();
        let (phis, _) = eigenfunctions(&sample);
        let grid = sample.grid().clone();
        let mut rng = NormalStream::new(xseed);
        let x = Curve::new(grid.clone(), (0..grid.len()).map(|_| rng.next_normal()).collect()).unwrap();
        let s = DVector::from_iterator(k, (0..k).map(|j| inner_product(&x, &phis[j]).unwrap()));
        let next = &fit.transition * s;
        let expected: Vec<f64> = (0..grid.len())
            .map(|i| (0..k).map(|j| next[j] * phis[j].values()[i]).sum())
            .collect();
        let got = apply_kernel(&fit.estimate, &x).unwrap();
        let scale = expected.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let err = got.values().iter().zip(&expected).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-8 * scale, "err {err} scale {scale}");
    }

    #[test]
    fn weighted_kernel_rank_is_at_most_k(seed in any::<u64>(), k in 1usize..6) {
        let sample = fourier_sample(60, 15, &[0.5, 0.4, -0.2, 0.3, 0.1, 0.2, 0.0], &[1.0, 0.9, 0.7, 0.6, 0.5, 0.4, 0.3], seed);
        let fit = fpca_far_fit(&sample, Truncation::Components(k)).unwrap();
        let sv = fit.estimate.weighted_kernel().singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for s in &sv[k..] {
            prop_assert!(*s <= 1e-8 * sv[0]);
        }
    }

    #[test]
    fn kernel_is_invariant_to_eigenvector_signs(seed in any::<u64>(), k in 1usize..5, flips in proptest::collection::vec(any::<bool>(), 5)) {
        let sample = fourier_sample(70, 13, &[0.7, 0.2, -0.4, 0.3, 0.1], &[1.0, 0.8, 0.6, 0.5, 0.4], seed);
        let fit = fpca_far_fit(&sample, Truncation::Components(k)).unwrap();
        let signs: Vec<f64> = flips.iter().map(|f| if *f { -1.0 } else { 1.0 }).collect();
        let plain = independent_kernel(&sample, k, &[1.0; 5]);
        let flipped = independent_kernel(&sample, k, &signs);
        prop_assert!(rel_diff(&flipped, &plain) < 1e-10);
        prop_assert!(rel_diff(fit.estimate.kernel(), &plain) < 1e-10);
    }
}

/// With K = M the FPCA predictor is `Σ lead·lagᵀ (Σ lag·lagᵀ)⁻¹`, the
/// unregularized least-squares operator built from the lagged block. It
/// coincides with the Tikhonov limit when C̃₀ is taken over that same block.
#[test]
fn full_rank_fpca_equals_tikhonov_limit_on_matched_moments() {
    for seed in 0..6 {
        let m = 7;
        let sample = pointwise_sample(60, &[0.5, -0.3, 0.4, 0.2, 0.6, -0.1, 0.3], seed);
        let fit = fpca_far_fit(&sample, Truncation::Components(m)).unwrap();

        let n = sample.len();
        let grid = sample.grid().clone();
        let mean = sample.mean_values();
        let sw = grid.sqrt_weights();
        let xc = DMatrix::from_fn(n, m, |t, i| (sample.data()[(t, i)] - mean[i]) * sw[i]);
        let lag = xc.rows(0, n - 1).into_owned();
        let lead = xc.rows(1, n - 1).into_owned();
        let scale = 1.0 / (n - 1) as f64;
        let c0_lag = lag.transpose() * &lag * scale;
        let c1 = lead.transpose() * &lag * scale;
        let lambda1 = SymmetricEigen::new(c0_lag.clone()).eigenvalues.max();
        let pair = WeightedMomentPair::from_weighted(grid.clone(), c0_lag, c1, None, n).unwrap();
        let tik = weighted_tikhonov_dense(&pair, 1e-12 * lambda1).unwrap();

        let x = sample.curve_values(n - 1);
        let fpca_pred = fit.estimate.apply_values(&x).unwrap();
        let wx = DVector::from_iterator(m, x.iter().zip(sw).map(|(v, s)| v * s));
        let tik_pred: Vec<f64> = (tik * wx).iter().zip(sw).map(|(v, s)| v / s).collect();
        let norm = tik_pred.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = fpca_pred.iter().zip(&tik_pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-6 * norm, "seed {seed}: {err} vs {norm}");
    }
}

/// The same comparison against the full-sample moments (C̃₀ over all n
/// curves with divisor n) differs by a term of order 1/n.
#[test]
fn full_rank_fpca_against_full_sample_moments() {
    let m = 7;
    let sample = pointwise_sample(60, &[0.5, -0.3, 0.4, 0.2, 0.6, -0.1, 0.3], 3);
    let fit = fpca_far_fit(&sample, Truncation::Components(m)).unwrap();
    let pair = WeightedMomentPair::from_sample(&sample).unwrap();
    let lambda1 = SymmetricEigen::new(pair.c0_tilde().clone()).eigenvalues.max();
    let tik = weighted_tikhonov_dense(&pair, 1e-12 * lambda1).unwrap();
    let fpca_w = fit.estimate.weighted_kernel();
    let diff = rel_diff(&fpca_w, &tik);
    assert!(diff < 0.2, "relative kernel gap {diff}");
}
