//! Half-hourly concentration records to smoothed daily curves.
//!
//! Stages: seasonal filtering and gap interpolation
//! ([`filter_and_interpolate`]), then square root, weekday centering and
//! B-spline smoothing ([`preprocess_curves`]). The rolling forecast protocol
//! lives in [`rolling`].

pub mod bspline;
pub mod rolling;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{FarError, Result};
use crate::grid::QuadratureGrid;
use crate::moments::FunctionalSample;

use bspline::{BSplineBasis, SplineSmoother};

pub use rolling::{
    rolling_forecast, rolling_summary, GapPolicy, RollingConfig, RollingOutcome, RollingRow, RollingSummary,
};

pub const SLOTS: usize = 48;

/// One calendar day of half-hourly readings; `None` marks a missing slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDayRecord {
    pub date: NaiveDate,
    pub values: [Option<f64>; SLOTS],
}

impl RawDayRecord {
    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// A day with every slot present.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteDay {
    pub date: NaiveDate,
    pub values: [f64; SLOTS],
}

fn expected_header() -> Vec<String> {
    std::iter::once("date".to_string())
        .chain((1..=SLOTS).map(|s| format!("h{s:02}")))
        .collect()
}

/// Parses `date,h01,…,h48` CSV. Empty cells are missing values. Output is
/// sorted by date; duplicate dates are rejected.
pub fn parse_halfhourly_csv<R: Read>(input: R) -> Result<Vec<RawDayRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => {
            return Err(FarError::Parse {
                line: 1,
                message: "empty input".into(),
            })
        }
        Some(h) => h.map_err(|e| csv_error(e, 1))?,
    };
    if header.iter().ne(expected_header().iter().map(String::as_str)) {
        return Err(FarError::Parse {
            line: 1,
            message: "header must be exactly date,h01,...,h48".into(),
        });
    }
    let mut out = Vec::new();
    for row in records {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| FarError::Parse { line, message };
        if row.len() != SLOTS + 1 {
            return Err(err(format!("expected {} fields, found {}", SLOTS + 1, row.len())));
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d")
            .map_err(|_| err(format!("invalid date '{}'", &row[0])))?;
        let mut values = [None; SLOTS];
        for (slot, cell) in row.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| err(format!("slot h{:02}: invalid number '{cell}'", slot + 1)))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(err(format!(
                    "slot h{:02}: value must be finite and nonnegative",
                    slot + 1
                )));
            }
            values[slot] = Some(v);
        }
        out.push(RawDayRecord { date, values });
    }
    out.sort_by_key(|r| r.date);
    if let Some(w) = out.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(FarError::Data(format!("duplicate date {}", w[0].date)));
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> FarError {
    let line = e
        .position()
        .map_or(fallback_line, |p| p.line() as usize);
    FarError::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn load_halfhourly_csv(path: impl AsRef<Path>) -> Result<Vec<RawDayRecord>> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_halfhourly_csv(std::io::BufReader::new(file))
}

/// Month and day, written `MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self> {
        // 2000 is a leap year, so 02-29 is accepted
        NaiveDate::from_ymd_opt(2000, month, day)
            .map(|_| Self { month, day })
            .ok_or_else(|| FarError::InvalidArgument(format!("invalid month-day {month:02}-{day:02}")))
    }

    pub fn of(date: NaiveDate) -> Self {
        Self {
            month: date.month(),
            day: date.day(),
        }
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

impl FromStr for MonthDay {
    type Err = FarError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || FarError::InvalidArgument(format!("expected MM-DD, got '{s}'"));
        let (m, d) = s.split_once('-').ok_or_else(bad)?;
        Self::new(m.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)
    }
}

impl Serialize for MonthDay {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDay {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive calendar window that may wrap over the new year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateWindow {
    pub start: MonthDay,
    pub end: MonthDay,
}

impl DateWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        let md = MonthDay::of(date);
        if self.start <= self.end {
            self.start <= md && md <= self.end
        } else {
            md >= self.start || md <= self.end
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Days outside this window are dropped; `None` keeps every date.
    pub season: Option<DateWindow>,
    /// Days inside this window are dropped.
    pub exclusion: Option<DateWindow>,
    pub max_missing: usize,
    pub n_basis: usize,
    pub output_points: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            season: Some(DateWindow {
                start: MonthDay { month: 10, day: 1 },
                end: MonthDay { month: 3, day: 31 },
            }),
            exclusion: Some(DateWindow {
                start: MonthDay { month: 12, day: 28 },
                end: MonthDay { month: 1, day: 7 },
            }),
            max_missing: 5,
            n_basis: 10,
            output_points: 100,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_missing >= SLOTS {
            return Err(FarError::InvalidArgument(format!(
                "max missing must be below {SLOTS}"
            )));
        }
        if self.n_basis < 4 {
            return Err(FarError::InvalidArgument("need at least 4 cubic basis functions".into()));
        }
        if self.output_points < self.n_basis {
            return Err(FarError::InvalidArgument(
                "output grid must have at least as many points as basis functions".into(),
            ));
        }
        Ok(())
    }
}

/// Counts of days removed at each filtering step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub outside_season: usize,
    pub excluded: usize,
    pub too_many_missing: usize,
    pub kept: usize,
}

/// Linear interpolation in slot index, flat beyond the first and last
/// observed slots. `None` when nothing is observed.
pub fn interpolate_day(values: &[Option<f64>; SLOTS]) -> Option<[f64; SLOTS]> {
    let present: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x)))
        .collect();
    let (&(first, first_v), &(last, last_v)) = (present.first()?, present.last()?);
    let mut out = [0.0; SLOTS];
    for (i, o) in out.iter_mut().enumerate() {
        *o = if i <= first {
            first_v
        } else if i >= last {
            last_v
        } else if let Some(v) = values[i] {
            v
        } else {
            let hi = present.partition_point(|p| p.0 < i);
            let (i0, v0) = present[hi - 1];
            let (i1, v1) = present[hi];
            v0 + (v1 - v0) * (i - i0) as f64 / (i1 - i0) as f64
        };
    }
    Some(out)
}

pub fn filter_and_interpolate(
    records: &[RawDayRecord],
    config: &PipelineConfig,
) -> Result<(Vec<CompleteDay>, FilterReport)> {
    config.validate()?;
    let mut report = FilterReport {
        input: records.len(),
        ..FilterReport::default()
    };
    let mut out = Vec::new();
    for r in records {
        if config.season.is_some_and(|w| !w.contains(r.date)) {
            report.outside_season += 1;
            continue;
        }
        if config.exclusion.is_some_and(|w| w.contains(r.date)) {
            report.excluded += 1;
            continue;
        }
        match interpolate_day(&r.values).filter(|_| r.missing() <= config.max_missing) {
            Some(values) => out.push(CompleteDay {
                date: r.date,
                values,
            }),
            None => report.too_many_missing += 1,
        }
    }
    report.kept = out.len();
    Ok((out, report))
}

/// Mean post-transform day per weekday (Monday first); `None` for weekdays
/// absent from the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekdayMeans {
    pub means: [Option<[f64; SLOTS]>; 7],
}

impl WeekdayMeans {
    pub fn from_days(days: &[CompleteDay]) -> Self {
        let mut sums = [[0.0; SLOTS]; 7];
        let mut counts = [0usize; 7];
        for d in days {
            let w = d.date.weekday().num_days_from_monday() as usize;
            counts[w] += 1;
            for (s, v) in sums[w].iter_mut().zip(&d.values) {
                *s += v;
            }
        }
        let mut means = [None; 7];
        for w in 0..7 {
            if counts[w] > 0 {
                let mut m = sums[w];
                for v in &mut m {
                    *v /= counts[w] as f64;
                }
                means[w] = Some(m);
            }
        }
        Self { means }
    }

    pub fn get(&self, date: NaiveDate) -> Option<&[f64; SLOTS]> {
        self.means[date.weekday().num_days_from_monday() as usize].as_ref()
    }

    /// `weekday,h01,…,h48`, seven rows; a weekday with no data has empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["weekday".to_string()];
        header.extend(expected_header().into_iter().skip(1));
        w.write_record(&header).map_err(|e| FarError::Io(e.to_string()))?;
        const NAMES: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
        for (name, m) in NAMES.iter().zip(&self.means) {
            let mut row = vec![name.to_string()];
            match m {
                Some(v) => row.extend(v.iter().map(|x| x.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), SLOTS)),
            }
            w.write_record(&row).map_err(|e| FarError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sqrt_transform(days: &[CompleteDay]) -> Vec<CompleteDay> {
    days.iter()
        .map(|d| CompleteDay {
            date: d.date,
            values: d.values.map(f64::sqrt),
        })
        .collect()
}

pub fn center_by_weekday(days: &[CompleteDay], table: &WeekdayMeans) -> Result<Vec<CompleteDay>> {
    days.iter()
        .map(|d| {
            let m = table
                .get(d.date)
                .ok_or_else(|| FarError::Data(format!("no weekday mean for {}", d.date)))?;
            let mut values = d.values;
            for (v, mu) in values.iter_mut().zip(m) {
                *v -= mu;
            }
            Ok(CompleteDay {
                date: d.date,
                values,
            })
        })
        .collect()
}

/// Slot `s` (1-based) sits at `(s − 0.5)/48`.
pub fn slot_abscissae() -> Vec<f64> {
    (0..SLOTS).map(|s| (s as f64 + 0.5) / SLOTS as f64).collect()
}

/// Spline smoother from the 48 slot midpoints to the uniform output grid.
pub fn day_smoother(config: &PipelineConfig) -> Result<(SplineSmoother, Arc<QuadratureGrid>)> {
    config.validate()?;
    let grid = Arc::new(QuadratureGrid::uniform(config.output_points)?);
    let basis = BSplineBasis::clamped_uniform(config.n_basis, 3)?;
    let smoother = SplineSmoother::new(&basis, &slot_abscissae(), grid.points())?;
    Ok((smoother, grid))
}

/// Smoothed curves with the dates and weekday table that produced them.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub sample: FunctionalSample,
    pub dates: Vec<NaiveDate>,
    pub weekday_means: WeekdayMeans,
}

/// Square root, weekday centering over the full sample, then spline
/// smoothing onto the output grid.
pub fn preprocess_curves(days: &[CompleteDay], config: &PipelineConfig) -> Result<Preprocessed> {
    if days.len() < 14 {
        return Err(FarError::InsufficientData(format!(
            "need at least 14 days to estimate weekday means, got {}",
            days.len()
        )));
    }
    let rooted = sqrt_transform(days);
    let table = WeekdayMeans::from_days(&rooted);
    preprocess_with_table(&rooted, &table, config)
}

/// Centering and smoothing of already square-rooted days against a given
/// weekday table.
pub fn preprocess_with_table(
    rooted: &[CompleteDay],
    table: &WeekdayMeans,
    config: &PipelineConfig,
) -> Result<Preprocessed> {
    let centered = center_by_weekday(rooted, table)?;
    let (smoother, grid) = day_smoother(config)?;
    let rows = centered
        .iter()
        .map(|d| smoother.apply(&d.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(Preprocessed {
        sample: FunctionalSample::from_rows(grid, &rows)?,
        dates: rooted.iter().map(|d| d.date).collect(),
        weekday_means: table.clone(),
    })
}
