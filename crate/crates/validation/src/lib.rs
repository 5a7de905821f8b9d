//! Bookkeeping for the acceptance suite: each criterion records a verdict,
//! which is printed as one line as soon as it is known.

use std::fmt;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Not evaluated, e.g. because an external dataset is absent.
    Skip,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "criterion {:<4} {}  {}", self.id, self.outcome, self.detail)
    }
}

/// Ordered collection of verdicts plus free-form diagnostic lines.
#[derive(Debug, Default)]
pub struct Scorecard {
    verdicts: Vec<Verdict>,
    filters: Vec<String>,
}

impl Scorecard {
    /// Only criteria whose id starts with one of `filters` run; an empty
    /// list runs everything.
    pub fn new(filters: Vec<String>) -> Self {
        Self {
            verdicts: Vec::new(),
            filters,
        }
    }

    pub fn wants(&self, id: &str) -> bool {
        self.filters.is_empty() || self.filters.iter().any(|f| id.starts_with(f.as_str()))
    }

    pub fn record(&mut self, id: &str, passed: bool, detail: impl Into<String>) {
        let outcome = if passed { Outcome::Pass } else { Outcome::Fail };
        self.push(id, outcome, detail.into());
    }

    pub fn skip(&mut self, id: &str, reason: impl Into<String>) {
        self.push(id, Outcome::Skip, reason.into());
    }

    fn push(&mut self, id: &str, outcome: Outcome, detail: String) {
        let v = Verdict {
            id: id.to_string(),
            outcome,
            detail,
        };
        println!("{v}");
        self.verdicts.push(v);
    }

    pub fn note(&self, line: impl fmt::Display) {
        println!("    {line}");
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn failures(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| v.outcome == Outcome::Fail)
            .map(|v| v.id.as_str())
            .collect()
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.verdicts.iter().filter(|v| v.outcome == outcome).count()
    }
}

pub fn seconds(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}
