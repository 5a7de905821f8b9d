//! One function per subcommand. Each writes its artifacts into `out` and
//! returns the list of files written.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use tikfar::evaluation::{
    fit_method, regret_table, report_rate_slope, run_benchmark, summarize, tuning_summary,
    verify_bias_bound, worst_case_table, write_csv, write_records_csv, write_timings_csv,
    BenchmarkConfig, FitOptions, MethodSpec, TheoryProbe,
};
use tikfar::fpca::FpcaModel;
use tikfar::grid::QuadratureGrid;
use tikfar::moments::{FunctionalSample, Tuning, WeightedMomentPair};
use tikfar::preprocess::{
    filter_and_interpolate, load_halfhourly_csv, preprocess_curves, rolling_forecast,
    rolling_summary, FilterReport, PipelineConfig, RollingConfig, RollingSummary,
};
use tikfar::simulator::{
    draw_regime_operator, fourier_basis, operator_seed, path_seed, simulate_far1, NormalStream,
    RegimeSpec, StreamTag, NORMAL_ALGORITHM,
};
use tikfar::tikhonov::{
    cv_select_alpha, cv_select_alpha_naive, default_alpha_grid, tikhonov_fit,
    tikhonov_from_decomposition, weighted_tikhonov_dense, CvScheme,
};

use crate::config::{RollingSection, RunConfig, VerifySection};
use crate::error::{CliError, Result};
use crate::io::{create, ensure_dir, read_sample_csv, write_json, write_kernel_csv, write_sample_csv};
use crate::SCHEMA_VERSION;

fn csv_file<T: Serialize>(out: &Path, name: &str, rows: &[T], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_csv(rows, create(&path)?)?;
    written.push(path);
    Ok(())
}

fn json_file<T: Serialize>(out: &Path, name: &str, value: &T, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_json(&path, value)?;
    written.push(path);
    Ok(())
}

fn in_pool<T: Send>(threads: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}

#[derive(Debug, Serialize)]
struct SimulateMeta<'a> {
    schema_version: u32,
    command: &'static str,
    regime: &'a RegimeSpec,
    seed: u64,
    n: usize,
    grid_points: usize,
    operator_spectral_radius: f64,
    normal_algorithm: &'static str,
}

/// Simulates `n` curves of one regime: `sample.csv`, the true kernel on the
/// grid as `operator.csv`, and `sample.json`.
pub fn simulate(config: &RunConfig, regime: &str, n: usize, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let spec = config.simulate.regime(regime)?;
    let op = draw_regime_operator(&spec, operator_seed(seed, &spec.label))?;
    let sample = simulate_far1(&op, &spec, n, path_seed(seed, &spec.label, n, 0, StreamTag::Train))?;
    ensure_dir(out)?;
    let mut written = Vec::new();

    let path = out.join("sample.csv");
    write_sample_csv(&sample, create(&path)?)?;
    written.push(path);

    let grid = sample.grid().clone();
    let truth = op.grid_operator(&grid)?;
    let path = out.join("operator.csv");
    write_kernel_csv(grid.points(), truth.kernel(), create(&path)?)?;
    written.push(path);

    let meta = SimulateMeta {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        regime: &spec,
        seed,
        n,
        grid_points: grid.len(),
        operator_spectral_radius: op.spectral_radius(),
        normal_algorithm: NORMAL_ALGORITHM,
    };
    json_file(out, "sample.json", &meta, &mut written)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct CvPoint {
    alpha: f64,
    loss: f64,
}

#[derive(Debug, Serialize)]
struct CvMeta {
    scheme: CvScheme,
    grid_scale: f64,
    selected_alpha: f64,
    curve: Vec<CvPoint>,
}

#[derive(Debug, Serialize)]
struct FitMeta {
    schema_version: u32,
    command: &'static str,
    input: String,
    method: String,
    n: usize,
    grid_points: usize,
    tuning: Tuning,
    #[serde(skip_serializing_if = "Option::is_none")]
    explained_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<CvMeta>,
}

/// Fits one method to a sample file: `kernel.csv` and `fit.json`.
pub fn fit(config: &RunConfig, input: &Path, method: MethodSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let sample = read_sample_csv(input)?;
    let options: FitOptions = config.benchmark.fit;
    let model = FpcaModel::new(&sample)?;
    let (estimate, cv) = match method {
        MethodSpec::TikhonovCv => {
            let grid = default_alpha_grid(options.alpha_grid_scale)?;
            let cv = cv_select_alpha(&sample, &grid, options.cv_scheme)?;
            let est = tikhonov_from_decomposition(model.moments(), model.decomposition(), cv.selected_alpha)?;
            let meta = CvMeta {
                scheme: options.cv_scheme,
                grid_scale: options.alpha_grid_scale,
                selected_alpha: cv.selected_alpha,
                curve: cv.curve.iter().map(|&(alpha, loss)| CvPoint { alpha, loss }).collect(),
            };
            (est, Some(meta))
        }
        other => (fit_method(other, &sample, Some(&model), &options)?, None),
    };
    let explained_variance = match estimate.tuning() {
        Tuning::Fpca { k, .. } => {
            let ev = model.decomposition().eigenvalues();
            Some(ev[..k].iter().sum::<f64>() / ev.iter().sum::<f64>())
        }
        _ => None,
    };

    ensure_dir(out)?;
    let mut written = Vec::new();
    let path = out.join("kernel.csv");
    write_kernel_csv(sample.grid().points(), estimate.kernel(), create(&path)?)?;
    written.push(path);
    if let Some(cv) = &cv {
        csv_file(out, "cv_curve.csv", &cv.curve, &mut written)?;
    }
    let meta = FitMeta {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        input: input.display().to_string(),
        method: method.to_string(),
        n: sample.len(),
        grid_points: sample.grid_len(),
        tuning: estimate.tuning(),
        explained_variance,
        cv,
    };
    json_file(out, "fit.json", &meta, &mut written)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct BenchmarkMeta<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a BenchmarkConfig,
    threads: usize,
    records: usize,
    failed_fits: usize,
    rate_slope: Option<f64>,
    wall_clock_seconds: f64,
}

/// Runs the Monte Carlo benchmark and writes the record and table CSVs plus
/// `summary.json`. Only `summary.json` and `timings.csv` depend on timing.
pub fn benchmark(config: &RunConfig, threads: Option<usize>, out: &Path) -> Result<Vec<PathBuf>> {
    let bench = config.benchmark.resolve()?;
    let threads = threads.unwrap_or(config.benchmark.threads);
    if threads == 0 {
        return Err(CliError::Config("threads must be positive".into()));
    }
    ensure_dir(out)?;
    let started = Instant::now();
    let report = run_benchmark(&bench, Some(threads))?;
    let wall = started.elapsed().as_secs_f64();

    let mut written = Vec::new();
    let path = out.join("records.csv");
    write_records_csv(&report.records, create(&path)?)?;
    written.push(path);
    let path = out.join("timings.csv");
    write_timings_csv(&report.timings, create(&path)?)?;
    written.push(path);
    csv_file(out, "cells.csv", &summarize(&report), &mut written)?;
    if bench.methods.iter().any(MethodSpec::is_fpca_tau) {
        csv_file(out, "regret.csv", &regret_table(&report)?, &mut written)?;
    }
    csv_file(out, "worst_case.csv", &worst_case_table(&report)?, &mut written)?;
    csv_file(out, "tuning.csv", &tuning_summary(&report), &mut written)?;

    let meta = BenchmarkMeta {
        schema_version: SCHEMA_VERSION,
        command: "benchmark",
        config: &bench,
        threads,
        records: report.records.len(),
        failed_fits: report.records.iter().filter(|r| r.misfe.is_none()).count(),
        rate_slope: report_rate_slope(&report).ok(),
        wall_clock_seconds: wall,
    };
    json_file(out, "summary.json", &meta, &mut written)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct DayRow<'a> {
    date: chrono::NaiveDate,
    method: &'a str,
    ise: Option<f64>,
    alpha_or_k: Option<f64>,
    refit_flag: u8,
}

#[derive(Debug, Serialize)]
struct RollingMeta<'a> {
    schema_version: u32,
    command: &'static str,
    raw: String,
    pipeline: &'a PipelineConfig,
    rolling: &'a RollingSection,
    filter: FilterReport,
    curves: usize,
    skipped_gaps: usize,
    summary: &'a [RollingSummary],
}

/// Preprocesses a raw half-hourly file and runs the rolling forecast for
/// every configured method: `daily_ise.csv`, `summary.csv`,
/// `weekday_means.csv` and `rolling.json`.
pub fn rolling(config: &RunConfig, raw: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let section = &config.rolling;
    if section.methods.is_empty() {
        return Err(CliError::Config("rolling.methods must not be empty".into()));
    }
    if section.threads == 0 {
        return Err(CliError::Config("threads must be positive".into()));
    }
    let records = load_halfhourly_csv(raw).map_err(|e| match e {
        tikfar::error::FarError::Io(m) => CliError::File {
            path: raw.display().to_string(),
            message: m,
        },
        other => other.into(),
    })?;
    let (days, filter) = filter_and_interpolate(&records, &config.pipeline)?;
    let pre = preprocess_curves(&days, &config.pipeline)?;

    let configs: Vec<RollingConfig> = section
        .methods
        .iter()
        .map(|&method| RollingConfig {
            window: section.window,
            refit_every: section.refit_every,
            method,
            gap_policy: section.gap_policy,
            cv_folds: section.cv_folds,
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let outcomes = in_pool(section.threads, || {
        configs
            .iter()
            .map(|c| rolling_forecast(&pre.sample, &pre.dates, c))
            .collect::<tikfar::error::Result<Vec<_>>>()
    })??;
    let summary = rolling_summary(&outcomes)?;

    ensure_dir(out)?;
    let mut written = Vec::new();
    let rows: Vec<DayRow> = outcomes
        .iter()
        .flat_map(|o| {
            o.rows.iter().map(|r| DayRow {
                date: r.date,
                method: &o.method,
                ise: r.ise,
                alpha_or_k: r.tuning,
                refit_flag: r.refit as u8,
            })
        })
        .collect();
    csv_file(out, "daily_ise.csv", &rows, &mut written)?;
    csv_file(out, "summary.csv", &summary, &mut written)?;
    let path = out.join("weekday_means.csv");
    pre.weekday_means.write_csv(create(&path)?)?;
    written.push(path);

    let meta = RollingMeta {
        schema_version: SCHEMA_VERSION,
        command: "rolling",
        raw: raw.display().to_string(),
        pipeline: &config.pipeline,
        rolling: section,
        filter,
        curves: pre.sample.len(),
        skipped_gaps: outcomes.first().map_or(0, |o| o.skipped_gaps),
        summary: &summary,
    };
    json_file(out, "rolling.json", &meta, &mut written)?;
    Ok(written)
}

/// One named assertion of the verify suite.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: String, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            pass: value <= limit,
        }
    }
}

/// Random sample for the oracle checks: a smooth AR(1) part on a Fourier
/// basis plus pointwise noise, so that C̃₀ has full rank.
fn oracle_instance(stream: &mut NormalStream, n: usize, m: usize) -> Result<FunctionalSample> {
    let grid = std::sync::Arc::new(QuadratureGrid::uniform(m)?);
    let j = 7.min(m);
    let basis = fourier_basis(j, &grid)?;
    let mut state = vec![0.0; j];
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        for (k, s) in state.iter_mut().enumerate() {
            *s = 0.6 * *s + stream.next_normal() / (k + 1) as f64;
        }
        rows.push(
            (0..m)
                .map(|i| (0..j).map(|k| state[k] * basis[(k, i)]).sum::<f64>() + 0.1 * stream.next_normal())
                .collect(),
        );
    }
    Ok(FunctionalSample::from_rows(grid, &rows)?)
}

fn oracle_checks(section: &VerifySection) -> Result<Vec<Check>> {
    let grid = default_alpha_grid(1.0)?;
    let mut stream = NormalStream::new(section.seed);
    let mut checks = Vec::new();
    for i in 0..section.oracle_instances {
        let n = 40 + (i * 37) % 81;
        let m = 11 + (i * 13) % 31;
        let sample = oracle_instance(&mut stream, n, m)?;
        let moments = WeightedMomentPair::from_sample(&sample)?;
        let mut worst: f64 = 0.0;
        for &alpha in grid.values() {
            let spectral = tikhonov_fit(&moments, alpha)?.weighted_kernel();
            let dense = weighted_tikhonov_dense(&moments, alpha)?;
            worst = worst.max((&spectral - &dense).norm() / dense.norm().max(f64::MIN_POSITIVE));
        }
        checks.push(Check::at_most(format!("tikhonov-spectral-vs-dense[{i}]"), worst, 1e-10));

        let fast = cv_select_alpha(&sample, &grid, CvScheme::Holdout)?;
        let naive = cv_select_alpha_naive(&sample, &grid, CvScheme::Holdout)?;
        let gap = fast
            .curve
            .iter()
            .zip(&naive.curve)
            .map(|(f, n)| (f.1 - n.1).abs() / n.1.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("fast-cv-vs-naive[{i}]"), gap, 1e-9));
    }
    Ok(checks)
}

fn bias_checks(section: &VerifySection) -> Result<Vec<Check>> {
    let alphas = default_alpha_grid(1.0)?;
    let mut checks = Vec::new();
    for &beta in &section.betas {
        let mut probe = TheoryProbe::standard(beta, section.probe_dim)?;
        probe.rho *= section.rho_scale;
        for c in verify_bias_bound(&probe, alphas.values()) {
            checks.push(Check::at_most(
                format!("bias-bound[beta={beta},alpha={:.3e}]", c.alpha),
                c.bias,
                c.bound,
            ));
        }
        let biases: Vec<f64> = alphas.values().iter().map(|&a| probe.bias(a)).collect();
        let drops = biases.windows(2).filter(|w| w[1] < w[0]).count();
        checks.push(Check::at_most(format!("bias-monotone[beta={beta}]"), drops as f64, 0.0));
    }
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct VerifyMeta<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a VerifySection,
    passed: usize,
    failed: Vec<String>,
}

/// Bias-bound probes and estimator oracle checks. Writes `checks.csv` and
/// `verify.json`, then fails with the names of any failed checks.
pub fn verify(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let section = &config.verify;
    section.validate()?;
    let mut checks = bias_checks(section)?;
    checks.extend(oracle_checks(section)?);
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();

    ensure_dir(out)?;
    let mut written = Vec::new();
    csv_file(out, "checks.csv", &checks, &mut written)?;
    let meta = VerifyMeta {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        config: section,
        passed: checks.len() - failed.len(),
        failed: failed.clone(),
    };
    json_file(out, "verify.json", &meta, &mut written)?;
    if failed.is_empty() {
        Ok(written)
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}
