//! Rolling one-step-ahead forecasting with periodic refits.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FarError, Result};
use crate::evaluation::{fit_method, ise, FitOptions, MethodSpec};
use crate::fpca::FpcaModel;
use crate::moments::{FunctionalSample, OperatorEstimate};
use crate::tikhonov::{application_alpha_grid, cv_select_alpha, tikhonov_from_decomposition, CvScheme};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapPolicy {
    /// Skip forecast pairs whose dates are more than one day apart.
    #[default]
    ExcludeCrossGap,
    /// Treat consecutive curves as consecutive days.
    Contiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RollingConfig {
    pub window: usize,
    /// Evaluation days between refits.
    pub refit_every: usize,
    pub method: MethodSpec,
    pub gap_policy: GapPolicy,
    /// Forward folds used when the method is Tikhonov-CV.
    pub cv_folds: usize,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window: 100,
            refit_every: 20,
            method: MethodSpec::TikhonovCv,
            gap_policy: GapPolicy::ExcludeCrossGap,
            cv_folds: 5,
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 10 {
            return Err(FarError::InvalidArgument(format!(
                "window must be at least 10, got {}",
                self.window
            )));
        }
        if self.refit_every == 0 {
            return Err(FarError::InvalidArgument("refit interval must be positive".into()));
        }
        if self.method == MethodSpec::TikhonovCv {
            cv_required(self.window, self.cv_folds)?;
        }
        Ok(())
    }
}

fn cv_required(window: usize, folds: usize) -> Result<()> {
    if folds == 0 || window < 5 * folds + 10 {
        return Err(FarError::InvalidArgument(format!(
            "{folds}-fold forward cross-validation does not fit a window of {window}"
        )));
    }
    Ok(())
}

/// One evaluation day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingRow {
    /// Zero-based index of the forecast curve.
    pub index: usize,
    pub date: NaiveDate,
    pub ise: Option<f64>,
    /// K for FPCA, α for Tikhonov.
    pub tuning: Option<f64>,
    /// True on the day the operator was refit.
    pub refit: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingOutcome {
    pub method: String,
    pub rows: Vec<RollingRow>,
    pub skipped_gaps: usize,
    pub fits: usize,
}

/// Fits `method` on one training window. Tikhonov-CV searches the
/// eigenvalue-scaled application grid with forward folds.
pub fn fit_window(method: MethodSpec, window: &FunctionalSample, cv_folds: usize) -> Result<OperatorEstimate> {
    let model = FpcaModel::new(window)?;
    match method {
        MethodSpec::TikhonovCv => {
            cv_required(window.len(), cv_folds)?;
            let grid = application_alpha_grid(model.decomposition().leading_eigenvalue())?;
            let cv = cv_select_alpha(window, &grid, CvScheme::ForwardFolds(cv_folds))?;
            tikhonov_from_decomposition(model.moments(), model.decomposition(), cv.selected_alpha)
        }
        other => fit_method(other, window, Some(&model), &FitOptions::default()),
    }
}

/// Forecast targets grouped by the refit that serves them.
fn plan_blocks(dates: &[NaiveDate], config: &RollingConfig) -> (Vec<Vec<usize>>, usize) {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut skipped = 0;
    for t in config.window..dates.len() {
        if config.gap_policy == GapPolicy::ExcludeCrossGap && (dates[t] - dates[t - 1]).num_days() > 1 {
            skipped += 1;
            continue;
        }
        match blocks.last_mut() {
            Some(b) if b.len() < config.refit_every => b.push(t),
            _ => blocks.push(vec![t]),
        }
    }
    (blocks, skipped)
}

fn run_block(sample: &FunctionalSample, dates: &[NaiveDate], block: &[usize], config: &RollingConfig) -> Vec<RollingRow> {
    let start = block[0];
    let fit = sample
        .slice(start - config.window, start)
        .and_then(|w| fit_window(config.method, &w, config.cv_folds));
    block
        .iter()
        .map(|&t| {
            let base = RollingRow {
                index: t,
                date: dates[t],
                ise: None,
                tuning: None,
                refit: t == start,
                error: None,
            };
            let op = match &fit {
                Ok(op) => op,
                Err(e) => {
                    return RollingRow {
                        error: Some(format!("{}: {e}", e.kind())),
                        ..base
                    }
                }
            };
            let forecast = op
                .apply_values(&sample.curve_values(t - 1))
                .and_then(|f| ise(&f, &sample.curve_values(t)));
            match forecast {
                Ok(v) => RollingRow {
                    ise: Some(v),
                    tuning: op.tuning().value(),
                    ..base
                },
                Err(e) => RollingRow {
                    error: Some(format!("{}: {e}", e.kind())),
                    ..base
                },
            }
        })
        .collect()
}

/// Rolling forecasts for every evaluation day after the first window.
/// Each refit uses the `window` curves preceding its first target; a failed
/// refit marks its block as failed and the run continues.
pub fn rolling_forecast(
    sample: &FunctionalSample,
    dates: &[NaiveDate],
    config: &RollingConfig,
) -> Result<RollingOutcome> {
    config.validate()?;
    if dates.len() != sample.len() {
        return Err(FarError::Dimension {
            expected: sample.len(),
            found: dates.len(),
        });
    }
    if dates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FarError::Data("dates must be strictly increasing".into()));
    }
    if sample.len() <= config.window {
        return Err(FarError::InsufficientData(format!(
            "need more than {} curves, got {}",
            config.window,
            sample.len()
        )));
    }
    let (blocks, skipped_gaps) = plan_blocks(dates, config);
    let rows: Vec<RollingRow> = blocks
        .par_iter()
        .map(|b| run_block(sample, dates, b, config))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(RollingOutcome {
        method: config.method.id(),
        rows,
        skipped_gaps,
        fits: blocks.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingSummary {
    pub method: String,
    pub evaluated: usize,
    pub failed: usize,
    pub mean_ise: f64,
    pub median_ise: f64,
    /// Percentage excess of the mean ISE over the best method's.
    pub regret_pct: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Mean and median ISE per method with regret against the lowest mean.
pub fn rolling_summary(outcomes: &[RollingOutcome]) -> Result<Vec<RollingSummary>> {
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let mut v: Vec<f64> = o.rows.iter().filter_map(|r| r.ise).collect();
        if v.is_empty() {
            return Err(FarError::InsufficientData(format!(
                "method {} produced no forecasts",
                o.method
            )));
        }
        v.sort_by(f64::total_cmp);
        rows.push(RollingSummary {
            method: o.method.clone(),
            evaluated: v.len(),
            failed: o.rows.len() - v.len(),
            mean_ise: v.iter().sum::<f64>() / v.len() as f64,
            median_ise: median(&v),
            regret_pct: 0.0,
        });
    }
    let best = rows.iter().map(|r| r.mean_ise).fold(f64::INFINITY, f64::min);
    for r in &mut rows {
        r.regret_pct = 100.0 * (r.mean_ise / best - 1.0);
    }
    Ok(rows)
}
