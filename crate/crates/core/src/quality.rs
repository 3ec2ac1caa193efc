//! Data-quality audit: how often the actual and day-ahead forecast columns
//! are missing or zero, relative to the number of intervals the period should
//! contain.

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{CountryCode, Frequency, LoadSeries};

/// Half-open audit window `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Period {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if end <= start {
            return Err(Error::invalid(format!("audit period {start} .. {end} is empty")));
        }
        Ok(Period { start, end })
    }
}

/// Raw counts behind a report; reports over adjacent periods pool by adding
/// these.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueCounts {
    pub expected_slots: u64,
    pub target_na: u64,
    pub target_zero: u64,
    pub forecast_na: u64,
    pub forecast_zero: u64,
}

impl IssueCounts {
    pub fn bad_cells(&self) -> u64 {
        self.target_na + self.target_zero + self.forecast_na + self.forecast_zero
    }

    pub fn pooled(self, other: IssueCounts) -> IssueCounts {
        IssueCounts {
            expected_slots: self.expected_slots + other.expected_slots,
            target_na: self.target_na + other.target_na,
            target_zero: self.target_zero + other.target_zero,
            forecast_na: self.forecast_na + other.forecast_na,
            forecast_zero: self.forecast_zero + other.forecast_zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub country: CountryCode,
    pub country_name: String,
    pub period: Period,
    pub frequency: Frequency,
    pub counts: IssueCounts,
    pub expected_slots: u64,
    pub target_na_pct: f64,
    pub target_zero_pct: f64,
    pub forecast_na_pct: f64,
    pub forecast_zero_pct: f64,
    pub overall_score: f64,
}

impl QualityReport {
    fn from_counts(country: CountryCode, period: Period, frequency: Frequency, counts: IssueCounts) -> Self {
        let slots = counts.expected_slots;
        let pct = |n: u64| (100 * n) as f64 / slots as f64;
        let total = 2 * slots;
        QualityReport {
            country_name: country.name().to_string(),
            country,
            period,
            frequency,
            counts,
            expected_slots: slots,
            target_na_pct: pct(counts.target_na),
            target_zero_pct: pct(counts.target_zero),
            forecast_na_pct: pct(counts.forecast_na),
            forecast_zero_pct: pct(counts.forecast_zero),
            overall_score: (100 * (total - counts.bad_cells())) as f64 / total as f64,
        }
    }

    /// Report over the union of two adjacent periods of the same series.
    pub fn pooled(&self, other: &QualityReport) -> Result<QualityReport> {
        if self.country != other.country || self.frequency != other.frequency {
            return Err(Error::invalid("pooled reports must share country and frequency"));
        }
        let period = if self.period.end == other.period.start {
            Period::new(self.period.start, other.period.end)?
        } else if other.period.end == self.period.start {
            Period::new(other.period.start, self.period.end)?
        } else {
            return Err(Error::invalid("pooled reports must cover adjacent periods"));
        };
        Ok(QualityReport::from_counts(
            self.country.clone(),
            period,
            self.frequency,
            self.counts.pooled(other.counts),
        ))
    }
}

/// Audits `series` over `period`. Intervals with no row count as missing in
/// both columns.
pub fn audit(series: &LoadSeries, period: Period) -> Result<QualityReport> {
    let step = series.frequency.minutes() * 60;
    let span = (period.end - period.start).num_seconds();
    let expected = span / step;
    if expected <= 0 {
        return Err(Error::invalid(format!(
            "audit period is shorter than one {} interval",
            series.frequency.label()
        )));
    }
    let mut present: HashMap<i64, (Option<f64>, Option<f64>)> = HashMap::new();
    for obs in &series.observations {
        let start = obs.interval_start.timestamp();
        let offset = start - period.start.timestamp();
        if offset >= 0 && offset % step == 0 && offset / step < expected {
            present.insert(offset / step, (obs.actual_load, obs.day_ahead_forecast));
        }
    }
    let mut counts = IssueCounts {
        expected_slots: expected as u64,
        ..Default::default()
    };
    for slot in 0..expected {
        let (actual, forecast) = present.get(&slot).copied().unwrap_or((None, None));
        match actual {
            None => counts.target_na += 1,
            Some(v) if v == 0.0 => counts.target_zero += 1,
            Some(_) => {}
        }
        match forecast {
            None => counts.forecast_na += 1,
            Some(v) if v == 0.0 => counts.forecast_zero += 1,
            Some(_) => {}
        }
    }
    Ok(QualityReport::from_counts(series.country.clone(), period, series.frequency, counts))
}

fn sorted(reports: &[QualityReport]) -> Vec<&QualityReport> {
    let mut rows: Vec<&QualityReport> = reports.iter().collect();
    rows.sort_by(|a, b| a.country_name.cmp(&b.country_name).then(a.country.cmp(&b.country)));
    rows
}

/// Overall score per country, one decimal.
pub fn render_scores(reports: &[QualityReport]) -> String {
    let mut out = format!(
        "{:<18}  {:<16}  {:>12}  {}\n",
        "Country code", "Country name", "Data quality", "Frequency"
    );
    for r in sorted(reports) {
        out.push_str(&format!(
            "{:<18}  {:<16}  {:>12}  {}\n",
            r.country.as_str(),
            r.country_name,
            format!("{:.1}%", r.overall_score),
            r.frequency.label()
        ));
    }
    out
}

/// Per-column issue frequencies, two decimals.
pub fn render_issues(reports: &[QualityReport]) -> String {
    let mut out = format!(
        "{:<16}  {:>12}  {:>12}  {:>14}  {:>14}\n",
        "Country name", "Target N/A", "Target is 0", "Forecast N/A", "Forecast is 0"
    );
    for r in sorted(reports) {
        let cell = |v: f64| format!("{v:.2}%");
        out.push_str(&format!(
            "{:<16}  {:>12}  {:>12}  {:>14}  {:>14}\n",
            r.country_name,
            cell(r.target_na_pct),
            cell(r.target_zero_pct),
            cell(r.forecast_na_pct),
            cell(r.forecast_zero_pct)
        ));
    }
    out
}

/// Both tables, separated by a blank line.
pub fn render_report(reports: &[QualityReport]) -> String {
    format!("{}\n{}", render_scores(reports), render_issues(reports))
}
