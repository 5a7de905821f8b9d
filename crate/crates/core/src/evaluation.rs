//! Forecast-error metrics, the Monte Carlo benchmark and its summary tables,
//! and the numerical check of the regularization bias bound.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FarError, Result};
use crate::fpca::{FpcaModel, Truncation};
use crate::grid::{same_grid, Curve};
use crate::moments::{FunctionalSample, OperatorEstimate};
use crate::simulator::{
    draw_regime_operator, operator_seed, path_seed, simulate_far1, RegimeId, RegimeSpec,
    StreamTag,
};
use crate::tikhonov::{cv_select_alpha, default_alpha_grid, tikhonov_from_decomposition, CvScheme};

/// Mean integrated squared one-step forecast error along a test path,
/// `(1/(T−1)) Σₜ ‖Xₜ₊₁ − Ψ̂Xₜ‖²` with quadrature norms.
pub fn misfe(op: &OperatorEstimate, test: &FunctionalSample) -> Result<f64> {
    if !same_grid(op.grid(), test.grid()) {
        return Err(FarError::GridMismatch);
    }
    let t = test.len();
    if t < 2 {
        return Err(FarError::InsufficientData(format!(
            "test path needs at least 2 curves, got {t}"
        )));
    }
    let w = test.grid().weights();
    let data = test.data();
    // predictions for all lags at once: row t of X·(K∘W)ᵀ
    let mut kw = op.kernel().clone();
    for (j, mut col) in kw.column_iter_mut().enumerate() {
        col.scale_mut(w[j]);
    }
    let predicted = data.rows(0, t - 1) * kw.transpose();
    let mut total = 0.0;
    for s in 0..t - 1 {
        total += w
            .iter()
            .enumerate()
            .map(|(i, wi)| wi * (data[(s + 1, i)] - predicted[(s, i)]).powi(2))
            .sum::<f64>();
    }
    Ok(total / (t - 1) as f64)
}

/// Flat-average integrated squared error `(1/M) Σⱼ (X(uⱼ) − X̂(uⱼ))²`.
pub fn ise(forecast: &[f64], actual: &[f64]) -> Result<f64> {
    if forecast.len() != actual.len() {
        return Err(FarError::Dimension {
            expected: actual.len(),
            found: forecast.len(),
        });
    }
    if actual.is_empty() {
        return Err(FarError::InvalidArgument("empty curves".into()));
    }
    Ok(forecast
        .iter()
        .zip(actual)
        .map(|(f, a)| (a - f).powi(2))
        .sum::<f64>()
        / actual.len() as f64)
}

/// Quadrature variant `‖X − X̂‖²`.
pub fn ise_quadrature(forecast: &Curve, actual: &Curve) -> Result<f64> {
    if !same_grid(forecast.grid(), actual.grid()) {
        return Err(FarError::GridMismatch);
    }
    let diff: Vec<f64> = forecast
        .values()
        .iter()
        .zip(actual.values())
        .map(|(f, a)| a - f)
        .collect();
    actual.grid().norm_sq(&diff)
}

/// An estimation rule.
///
/// Text form: `fpca:TAU`, `fpca:K=INT`, `tikhonov:ALPHA`, `tikhonov:cv`,
/// `zero`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    FpcaTau(f64),
    FpcaK(usize),
    TikhonovAlpha(f64),
    TikhonovCv,
    Zero,
}

impl MethodSpec {
    /// The benchmark set: FPCA at τ ∈ {0.80, …, 0.99} and Tikhonov-CV.
    pub fn benchmark_set() -> Vec<MethodSpec> {
        let mut v: Vec<MethodSpec> = [0.80, 0.85, 0.90, 0.95, 0.99]
            .into_iter()
            .map(MethodSpec::FpcaTau)
            .collect();
        v.push(MethodSpec::TikhonovCv);
        v
    }

    /// Short identifier used in tables: `fpca-80`, `fpca-k3`,
    /// `tikhonov-cv`, `tikhonov-0.01`, `zero`.
    pub fn id(&self) -> String {
        match self {
            MethodSpec::FpcaTau(t) => {
                let pct = t * 100.0;
                if (pct - pct.round()).abs() < 1e-9 {
                    format!("fpca-{}", pct.round() as i64)
                } else {
                    format!("fpca-{pct}")
                }
            }
            MethodSpec::FpcaK(k) => format!("fpca-k{k}"),
            MethodSpec::TikhonovAlpha(a) => format!("tikhonov-{a}"),
            MethodSpec::TikhonovCv => "tikhonov-cv".into(),
            MethodSpec::Zero => "zero".into(),
        }
    }

    pub fn is_fpca_tau(&self) -> bool {
        matches!(self, MethodSpec::FpcaTau(_))
    }

    pub fn is_tikhonov(&self) -> bool {
        matches!(self, MethodSpec::TikhonovAlpha(_) | MethodSpec::TikhonovCv)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::FpcaTau(t) => write!(f, "fpca:{t}"),
            MethodSpec::FpcaK(k) => write!(f, "fpca:K={k}"),
            MethodSpec::TikhonovAlpha(a) => write!(f, "tikhonov:{a}"),
            MethodSpec::TikhonovCv => f.write_str("tikhonov:cv"),
            MethodSpec::Zero => f.write_str("zero"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = FarError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| FarError::InvalidArgument(format!("method '{s}': {m}"));
        let s = s.trim();
        if s == "zero" {
            return Ok(MethodSpec::Zero);
        }
        let (family, arg) = s
            .split_once(':')
            .ok_or_else(|| bad("expected FAMILY:ARG"))?;
        match family {
            "fpca" => {
                if let Some(k) = arg.strip_prefix("K=") {
                    let k: usize = k.parse().map_err(|_| bad("K must be a positive integer"))?;
                    if k == 0 {
                        return Err(bad("K must be positive"));
                    }
                    Ok(MethodSpec::FpcaK(k))
                } else {
                    let t: f64 = arg.parse().map_err(|_| bad("threshold must be a number"))?;
                    if !(t > 0.0 && t < 1.0) {
                        return Err(bad("threshold must lie in (0, 1)"));
                    }
                    Ok(MethodSpec::FpcaTau(t))
                }
            }
            "tikhonov" => {
                if arg == "cv" {
                    return Ok(MethodSpec::TikhonovCv);
                }
                let a: f64 = arg.parse().map_err(|_| bad("alpha must be a number or 'cv'"))?;
                if !(a.is_finite() && a > 0.0) {
                    return Err(bad("alpha must be positive"));
                }
                Ok(MethodSpec::TikhonovAlpha(a))
            }
            _ => Err(bad("unknown method family")),
        }
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = FarError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

/// Options shared by every fit of a method on one training sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub cv_scheme: CvScheme,
    pub alpha_grid_scale: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            cv_scheme: CvScheme::Holdout,
            alpha_grid_scale: 1.0,
        }
    }
}

/// Fits a method, reusing `model` when one has been prepared for `sample`.
pub fn fit_method(
    method: MethodSpec,
    sample: &FunctionalSample,
    model: Option<&FpcaModel>,
    options: &FitOptions,
) -> Result<OperatorEstimate> {
    if let MethodSpec::Zero = method {
        return Ok(OperatorEstimate::zero(sample.grid().clone()));
    }
    let owned;
    let model = match model {
        Some(m) => m,
        None => {
            owned = FpcaModel::new(sample)?;
            &owned
        }
    };
    match method {
        MethodSpec::FpcaTau(t) => Ok(model.fit(Truncation::Tau(t))?.estimate),
        MethodSpec::FpcaK(k) => Ok(model.fit(Truncation::Components(k))?.estimate),
        MethodSpec::TikhonovAlpha(a) => {
            tikhonov_from_decomposition(model.moments(), model.decomposition(), a)
        }
        MethodSpec::TikhonovCv => {
            let grid = default_alpha_grid(options.alpha_grid_scale)?;
            let cv = cv_select_alpha(sample, &grid, options.cv_scheme)?;
            tikhonov_from_decomposition(model.moments(), model.decomposition(), cv.selected_alpha)
        }
        MethodSpec::Zero => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub regimes: Vec<RegimeSpec>,
    pub sample_sizes: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub test_length: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub fit: FitOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            regimes: RegimeId::ALL.iter().map(|id| RegimeSpec::preset(*id)).collect(),
            sample_sizes: vec![100, 200, 400, 800],
            methods: MethodSpec::benchmark_set(),
            replications: 50,
            test_length: 200,
            master_seed: 20_240_601,
            fit: FitOptions::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FarError::InvalidArgument(m.to_string()));
        if self.regimes.is_empty() || self.sample_sizes.is_empty() || self.methods.is_empty() {
            return bad("regimes, sample sizes and methods must be nonempty");
        }
        if self.replications == 0 {
            return bad("replications must be positive");
        }
        if self.test_length < 2 {
            return bad("test length must be at least 2");
        }
        if self.sample_sizes.iter().any(|n| *n < 2) {
            return bad("sample sizes must be at least 2");
        }
        let mut labels: Vec<&str> = self.regimes.iter().map(|r| r.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("regime labels must be unique");
        }
        let mut ids: Vec<String> = self.methods.iter().map(|m| m.id()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("methods must be distinct");
        }
        for r in &self.regimes {
            r.validate()?;
        }
        Ok(())
    }
}

/// One (regime, n, method, replication) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub regime: String,
    pub n: usize,
    pub method: String,
    pub replication: usize,
    /// Missing when the fit failed.
    pub misfe: Option<f64>,
    /// Resolved K for FPCA, α̂ for Tikhonov.
    pub tuning: Option<f64>,
    /// Error kind of a failed fit.
    pub error: Option<String>,
}

/// Wall-clock fit time; kept apart from [`CellResult`] so result files are
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub regime: String,
    pub n: usize,
    pub replication: usize,
    /// Method id, or `replication` for the whole replication.
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub regimes: Vec<String>,
    pub sample_sizes: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub records: Vec<CellResult>,
    pub timings: Vec<TimingRecord>,
}

fn run_replication(
    spec: &RegimeSpec,
    op: &crate::simulator::TrueOperator,
    n: usize,
    rep: usize,
    config: &BenchmarkConfig,
) -> Result<(Vec<CellResult>, Vec<TimingRecord>)> {
    let started = Instant::now();
    let seed = config.master_seed;
    let train = simulate_far1(op, spec, n, path_seed(seed, &spec.label, n, rep, StreamTag::Train))?;
    let test = simulate_far1(
        op,
        spec,
        config.test_length,
        path_seed(seed, &spec.label, n, rep, StreamTag::Test),
    )?;
    let model = FpcaModel::new(&train);
    let mut records = Vec::with_capacity(config.methods.len());
    let mut timings = Vec::with_capacity(config.methods.len() + 1);
    for method in &config.methods {
        let t0 = Instant::now();
        let fitted = match (&model, method) {
            (_, MethodSpec::Zero) => fit_method(*method, &train, None, &config.fit),
            (Ok(m), _) => fit_method(*method, &train, Some(m), &config.fit),
            (Err(e), _) => Err(e.clone()),
        };
        let outcome = fitted.and_then(|est| Ok((misfe(&est, &test)?, est.tuning().value())));
        timings.push(TimingRecord {
            regime: spec.label.clone(),
            n,
            replication: rep,
            stage: method.id(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        let (misfe, tuning, error) = match outcome {
            Ok((v, tuning)) => (Some(v), tuning, None),
            Err(e) => (None, None, Some(e.kind().to_string())),
        };
        records.push(CellResult {
            regime: spec.label.clone(),
            n,
            method: method.id(),
            replication: rep,
            misfe,
            tuning,
            error,
        });
    }
    timings.push(TimingRecord {
        regime: spec.label.clone(),
        n,
        replication: rep,
        stage: "replication".into(),
        seconds: started.elapsed().as_secs_f64(),
    });
    Ok((records, timings))
}

/// Runs every (regime, n, replication) in parallel. Output order is fixed by
/// the configuration, not by scheduling.
pub fn run_benchmark(config: &BenchmarkConfig, threads: Option<usize>) -> Result<BenchmarkReport> {
    config.validate()?;
    let operators = config
        .regimes
        .iter()
        .map(|r| draw_regime_operator(r, operator_seed(config.master_seed, &r.label)))
        .collect::<Result<Vec<_>>>()?;
    let mut tasks = Vec::new();
    for (ri, _) in config.regimes.iter().enumerate() {
        for &n in &config.sample_sizes {
            for rep in 0..config.replications {
                tasks.push((ri, n, rep));
            }
        }
    }
    let work = || {
        tasks
            .par_iter()
            .map(|&(ri, n, rep)| run_replication(&config.regimes[ri], &operators[ri], n, rep, config))
            .collect::<Result<Vec<_>>>()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| FarError::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for (r, t) in results {
        records.extend(r);
        timings.extend(t);
    }
    Ok(BenchmarkReport {
        regimes: config.regimes.iter().map(|r| r.label.clone()).collect(),
        sample_sizes: config.sample_sizes.clone(),
        methods: config.methods.clone(),
        records,
        timings,
    })
}

/// Per-(regime, n, method) aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub regime: String,
    pub n: usize,
    pub method: String,
    pub mean_misfe: Option<f64>,
    /// Sample standard deviation over √R.
    pub stderr: Option<f64>,
    pub count: usize,
    pub failures: usize,
}

type CellKey = (String, usize, String);

fn group_records(report: &BenchmarkReport) -> BTreeMap<CellKey, Vec<&CellResult>> {
    let mut groups: BTreeMap<CellKey, Vec<&CellResult>> = BTreeMap::new();
    for r in &report.records {
        groups
            .entry((r.regime.clone(), r.n, r.method.clone()))
            .or_default()
            .push(r);
    }
    groups
}

/// Cell summaries in configuration order.
pub fn summarize(report: &BenchmarkReport) -> Vec<CellSummary> {
    let groups = group_records(report);
    let mut out = Vec::new();
    for regime in &report.regimes {
        for &n in &report.sample_sizes {
            for method in &report.methods {
                let key = (regime.clone(), n, method.id());
                let Some(rs) = groups.get(&key) else { continue };
                let vals: Vec<f64> = rs.iter().filter_map(|r| r.misfe).collect();
                let count = vals.len();
                let mean = (count > 0).then(|| vals.iter().sum::<f64>() / count as f64);
                let stderr = mean.filter(|_| count > 1).map(|m| {
                    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (count - 1) as f64;
                    (var / count as f64).sqrt()
                });
                out.push(CellSummary {
                    regime: regime.clone(),
                    n,
                    method: method.id(),
                    mean_misfe: mean,
                    stderr,
                    count,
                    failures: rs.len() - count,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub regime: String,
    pub n: usize,
    pub method: String,
    /// Percent excess over the best FPCA-τ rule in the cell.
    pub regret: Option<f64>,
}

/// `100·(mean(m) − min_τ mean(FPCA-τ)) / min_τ mean(FPCA-τ)` per cell.
pub fn regret_table(report: &BenchmarkReport) -> Result<Vec<RegretRow>> {
    let summaries = summarize(report);
    let fpca_ids: Vec<String> = report
        .methods
        .iter()
        .filter(|m| m.is_fpca_tau())
        .map(|m| m.id())
        .collect();
    if fpca_ids.is_empty() {
        return Err(FarError::InvalidArgument(
            "regret needs at least one FPCA threshold method".into(),
        ));
    }
    let mut out = Vec::new();
    for regime in &report.regimes {
        for &n in &report.sample_sizes {
            let cell: Vec<&CellSummary> = summaries
                .iter()
                .filter(|s| &s.regime == regime && s.n == n)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let mut best = f64::INFINITY;
            for id in &fpca_ids {
                let mean = cell
                    .iter()
                    .find(|s| &s.method == id)
                    .and_then(|s| s.mean_misfe)
                    .ok_or_else(|| {
                        FarError::Data(format!("cell ({regime}, {n}) has no results for {id}"))
                    })?;
                best = best.min(mean);
            }
            for s in cell {
                out.push(RegretRow {
                    regime: regime.clone(),
                    n,
                    method: s.method.clone(),
                    regret: s.mean_misfe.map(|m| 100.0 * (m - best) / best),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRow {
    pub n: usize,
    pub method: String,
    pub worst_mean_misfe: f64,
    pub worst_regime: String,
}

/// Largest mean MISFE across regimes for every (method, n).
pub fn worst_case_table(report: &BenchmarkReport) -> Result<Vec<WorstCaseRow>> {
    let summaries = summarize(report);
    let mut out = Vec::new();
    for &n in &report.sample_sizes {
        for method in &report.methods {
            let id = method.id();
            let mut worst: Option<(f64, &str)> = None;
            for regime in &report.regimes {
                let mean = summaries
                    .iter()
                    .find(|s| &s.regime == regime && s.n == n && s.method == id)
                    .and_then(|s| s.mean_misfe)
                    .ok_or_else(|| {
                        FarError::Data(format!("regime {regime} missing for {id} at n = {n}"))
                    })?;
                if worst.is_none_or(|(w, _)| mean > w) {
                    worst = Some((mean, regime));
                }
            }
            if let Some((w, regime)) = worst {
                out.push(WorstCaseRow {
                    n,
                    method: id,
                    worst_mean_misfe: w,
                    worst_regime: regime.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub regime: String,
    pub n: usize,
    pub method: String,
    /// Mean K for FPCA, mean log₁₀ α̂ for Tikhonov.
    pub mean: f64,
    pub count: usize,
}

pub fn tuning_summary(report: &BenchmarkReport) -> Vec<TuningRow> {
    let groups = group_records(report);
    let mut out = Vec::new();
    for regime in &report.regimes {
        for &n in &report.sample_sizes {
            for method in &report.methods {
                if matches!(method, MethodSpec::Zero) {
                    continue;
                }
                let key = (regime.clone(), n, method.id());
                let Some(rs) = groups.get(&key) else { continue };
                let vals: Vec<f64> = rs
                    .iter()
                    .filter_map(|r| r.tuning)
                    .map(|v| if method.is_tikhonov() { v.log10() } else { v })
                    .collect();
                if vals.is_empty() {
                    continue;
                }
                out.push(TuningRow {
                    regime: regime.clone(),
                    n,
                    method: method.id(),
                    mean: vals.iter().sum::<f64>() / vals.len() as f64,
                    count: vals.len(),
                });
            }
        }
    }
    out
}

/// Least-squares slope of `log₁₀ α̂` on `log₁₀ n` over pooled `(n, log₁₀ α̂)`
/// points.
pub fn rate_slope(points: &[(usize, f64)]) -> Result<f64> {
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 || distinct[0] == 0 {
        return Err(FarError::InvalidArgument(
            "rate slope needs at least two distinct positive sample sizes".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).log10()).collect();
    let k = points.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Slope pooled across regimes from the Tikhonov-CV tuning summaries.
pub fn report_rate_slope(report: &BenchmarkReport) -> Result<f64> {
    let id = MethodSpec::TikhonovCv.id();
    let points: Vec<(usize, f64)> = tuning_summary(report)
        .into_iter()
        .filter(|r| r.method == id)
        .map(|r| (r.n, r.mean))
        .collect();
    rate_slope(&points)
}

/// Writes one CSV row per record.
pub fn write_records_csv<W: Write>(records: &[CellResult], out: W) -> Result<()> {
    write_csv(records, out)
}

pub fn write_timings_csv<W: Write>(timings: &[TimingRecord], out: W) -> Result<()> {
    write_csv(timings, out)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| FarError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// A finite-dimensional source-condition probe: diagonal `C₀ = diag(λ)`,
/// diagonal `F`, and `Ψ = F·C₀^β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryProbe {
    pub beta: f64,
    pub rho: f64,
    pub f_diag: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl TheoryProbe {
    /// Probe with `ρ = ‖F‖_HS`.
    pub fn diagonal(beta: f64, lambdas: Vec<f64>, f_diag: Vec<f64>) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(FarError::InvalidArgument("source exponent must be positive".into()));
        }
        if lambdas.len() != f_diag.len() {
            return Err(FarError::Dimension {
                expected: lambdas.len(),
                found: f_diag.len(),
            });
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(FarError::InvalidArgument("eigenvalues must be positive".into()));
        }
        let rho = f_diag.iter().map(|f| f * f).sum::<f64>().sqrt();
        Ok(Self {
            beta,
            rho,
            f_diag,
            lambdas,
        })
    }

    /// `λₖ = k⁻²`, `Fₖₖ = 1/k`, `k = 1..dim`.
    pub fn standard(beta: f64, dim: usize) -> Result<Self> {
        Self::diagonal(
            beta,
            (1..=dim).map(|k| (k as f64).powi(-2)).collect(),
            (1..=dim).map(|k| 1.0 / k as f64).collect(),
        )
    }

    /// Diagonal of `Ψ = F·C₀^β`.
    pub fn psi(&self) -> Vec<f64> {
        self.f_diag
            .iter()
            .zip(&self.lambdas)
            .map(|(f, l)| f * l.powf(self.beta))
            .collect()
    }

    /// `‖Ψ_α − Ψ‖_HS` with `Ψ_α = Ψ C₀ (C₀ + αI)⁻¹`.
    pub fn bias(&self, alpha: f64) -> f64 {
        self.psi()
            .iter()
            .zip(&self.lambdas)
            .map(|(p, l)| (p * alpha / (l + alpha)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn bound(&self, alpha: f64) -> f64 {
        self.rho * alpha.powf(self.beta.min(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasCheck {
    pub alpha: f64,
    pub bias: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn verify_bias_bound(probe: &TheoryProbe, alphas: &[f64]) -> Vec<BiasCheck> {
    alphas
        .iter()
        .map(|&alpha| {
            let (bias, bound) = (probe.bias(alpha), probe.bound(alpha));
            BiasCheck {
                alpha,
                bias,
                bound,
                holds: bias <= bound,
            }
        })
        .collect()
}
