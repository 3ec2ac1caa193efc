//! Load series: types, CSV import/export, hourly aggregation, merging of the
//! Total and Vertical Load sources, and the file-backed document store.

mod csv_format;
mod hourly;
pub mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_format::{parse_load_csv, to_csv, CSV_HEADER};
pub use hourly::{aggregate_to_hourly, merge_load_sources, DEFAULT_VERTICAL_CUTOFF};
pub use store::DocumentStore;

/// Bidding-zone identifier, e.g. `10YHU-MAVIR----U`. Restricted to
/// characters that are safe as a file name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let ok = !code.is_empty()
            && code.len() <= 64
            && !code.starts_with('.')
            && code
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        if ok {
            Ok(CountryCode(code))
        } else {
            Err(Error::invalid(format!("invalid country code {code:?}")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Display name for known codes, the code itself otherwise.
    pub fn name(&self) -> &str {
        crate::countries::country_name(&self.0).unwrap_or(&self.0)
    }
}

impl TryFrom<String> for CountryCode {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        CountryCode::new(value)
    }
}

impl From<CountryCode> for String {
    fn from(value: CountryCode) -> Self {
        value.0
    }
}

impl FromStr for CountryCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CountryCode::new(s)
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    QuarterHourly,
    HalfHourly,
    Hourly,
}

impl Frequency {
    pub fn from_minutes(minutes: i64) -> Result<Self> {
        match minutes {
            15 => Ok(Frequency::QuarterHourly),
            30 => Ok(Frequency::HalfHourly),
            60 => Ok(Frequency::Hourly),
            other => Err(Error::UnsupportedFrequency(other)),
        }
    }

    pub fn minutes(self) -> i64 {
        match self {
            Frequency::QuarterHourly => 15,
            Frequency::HalfHourly => 30,
            Frequency::Hourly => 60,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Frequency::QuarterHourly => "Quarter-hourly",
            Frequency::HalfHourly => "Half-hourly",
            Frequency::Hourly => "Hourly",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    TotalLoad,
    VerticalLoad,
}

impl FromStr for SourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" | "total_load" => Ok(SourceKind::TotalLoad),
            "vertical" | "vertical_load" => Ok(SourceKind::VerticalLoad),
            other => Err(Error::invalid(format!("unknown load source {other:?}"))),
        }
    }
}

/// One reported interval. `None` stands for the portal's `N/A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadObservation {
    pub interval_start: DateTime<FixedOffset>,
    pub interval_end: DateTime<FixedOffset>,
    pub day_ahead_forecast: Option<f64>,
    pub actual_load: Option<f64>,
}

impl LoadObservation {
    pub fn length_minutes(&self) -> i64 {
        (self.interval_end - self.interval_start).num_minutes()
    }

    /// UTC hour the interval starts in, as hours since the epoch.
    pub fn hour_key(&self) -> i64 {
        self.interval_start.timestamp().div_euclid(3600)
    }
}

/// Observations of one country and source, ordered by start and of uniform
/// length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    pub country: CountryCode,
    pub frequency: Frequency,
    #[serde(default)]
    pub source: SourceKind,
    pub observations: Vec<LoadObservation>,
}

impl LoadSeries {
    pub fn new(
        country: CountryCode,
        frequency: Frequency,
        source: SourceKind,
        mut observations: Vec<LoadObservation>,
    ) -> Result<Self> {
        observations.sort_by_key(|o| o.interval_start);
        let series = LoadSeries {
            country,
            frequency,
            source,
            observations,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn with_source(mut self, source: SourceKind) -> Self {
        self.source = source;
        self
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// First interval start and last interval end.
    pub fn span(&self) -> Option<(DateTime<FixedOffset>, DateTime<FixedOffset>)> {
        Some((
            self.observations.first()?.interval_start,
            self.observations.last()?.interval_end,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        let minutes = self.frequency.minutes();
        for (i, obs) in self.observations.iter().enumerate() {
            if obs.length_minutes() != minutes {
                return Err(Error::invalid(format!(
                    "observation {i} spans {} minutes, series is {}",
                    obs.length_minutes(),
                    self.frequency.label()
                )));
            }
            for v in [obs.day_ahead_forecast, obs.actual_load].into_iter().flatten() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("observation {i} has invalid value {v}")));
                }
            }
            if i > 0 && obs.interval_start < self.observations[i - 1].interval_end {
                return Err(Error::invalid(format!(
                    "observation {i} overlaps or duplicates its predecessor"
                )));
            }
        }
        Ok(())
    }

    /// Union of two series of the same country, source and frequency. Where
    /// both hold an interval, `newer` wins.
    pub fn merged_with(&self, newer: &LoadSeries) -> Result<LoadSeries> {
        if self.country != newer.country || self.frequency != newer.frequency || self.source != newer.source {
            return Err(Error::invalid(format!(
                "cannot merge {} {:?} {:?} with {} {:?} {:?}",
                self.country, self.source, self.frequency, newer.country, newer.source, newer.frequency
            )));
        }
        let mut by_start: BTreeMap<DateTime<Utc>, LoadObservation> = BTreeMap::new();
        for obs in self.observations.iter().chain(&newer.observations) {
            by_start.insert(obs.interval_start.with_timezone(&Utc), obs.clone());
        }
        LoadSeries::new(
            self.country.clone(),
            self.frequency,
            self.source,
            by_start.into_values().collect(),
        )
    }
}

/// Modal interval length of the series mapped to a reporting frequency.
pub fn detect_frequency(series: &LoadSeries) -> Result<Frequency> {
    if series.observations.len() < 2 {
        return Err(Error::invalid("frequency detection needs at least two observations"));
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for obs in &series.observations {
        *counts.entry(obs.length_minutes()).or_default() += 1;
    }
    let (&modal, _) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("non-empty");
    Frequency::from_minutes(modal)
}
