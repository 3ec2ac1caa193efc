//! Feature rows for the per-horizon models: calendar variables of the target
//! hour in the country's local time, plus two lagged loads (one week back and
//! the last value known when the forecast is issued).

mod calendar;

use std::collections::HashMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbrt::SampleSet;
use crate::ingestion::{Frequency, LoadSeries};

pub use calendar::{calendar_features, parse_holidays, Calendar, CalendarPart};

/// Longest horizon served.
pub const MAX_HORIZON: u8 = 24;
/// Hours in a week; the lag and imputation step.
pub const WEEK_HOURS: i64 = 168;
/// Weekly attempts made when imputing a missing lag.
pub const IMPUTATION_WEEKS: i64 = 6;

pub const BASIC_FEATURES: [&str; 5] = ["hour_of_day", "day_of_week", "day_of_month", "month", "is_holiday"];
pub const ADVANCED_FEATURES: [&str; 7] = [
    "hour_of_day",
    "day_of_week",
    "day_of_month",
    "month",
    "is_holiday",
    "lag_week",
    "lag_last_known",
];

/// Calendar-only rows feed the basic model; rows with both lags feed the
/// advanced one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Basic,
    Advanced,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Basic => "basic",
            ModelKind::Advanced => "advanced",
        }
    }

    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Basic => &BASIC_FEATURES,
            ModelKind::Advanced => &ADVANCED_FEATURES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub target_time: DateTime<Utc>,
    pub horizon: u8,
    pub calendar: CalendarPart,
    pub lag_week: Option<f64>,
    pub lag_last_known: Option<f64>,
    pub kind: ModelKind,
}

impl FeatureRow {
    /// Model input in the column order of [`ModelKind::feature_names`].
    pub fn values(&self) -> Vec<f64> {
        let mut v = self.calendar.values().to_vec();
        if self.kind == ModelKind::Advanced {
            v.push(self.lag_week.expect("advanced rows carry both lags"));
            v.push(self.lag_last_known.expect("advanced rows carry both lags"));
        }
        v
    }

    /// The same target hour stripped to its calendar part.
    pub fn to_basic(&self) -> FeatureRow {
        FeatureRow {
            lag_week: None,
            lag_last_known: None,
            kind: ModelKind::Basic,
            ..self.clone()
        }
    }
}

/// Actual loads of an hourly series addressed by UTC hour.
#[derive(Clone, Debug)]
pub struct LoadIndex {
    actual: HashMap<i64, f64>,
    hours: Vec<i64>,
}

impl LoadIndex {
    pub fn new(series: &LoadSeries) -> Result<Self> {
        if series.frequency != Frequency::Hourly {
            return Err(Error::invalid(format!(
                "features need an hourly series, got {}",
                series.frequency.label()
            )));
        }
        let mut actual = HashMap::with_capacity(series.len());
        let mut hours = Vec::with_capacity(series.len());
        for obs in &series.observations {
            let key = obs.hour_key();
            hours.push(key);
            if let Some(v) = obs.actual_load {
                actual.insert(key, v);
            }
        }
        Ok(LoadIndex { actual, hours })
    }

    /// Actual load of the hour starting at `time`.
    pub fn actual_at(&self, time: DateTime<Utc>) -> Option<f64> {
        self.actual.get(&time.timestamp().div_euclid(3600)).copied()
    }

    /// Start times of every hour in the series, ascending.
    pub fn hours(&self) -> impl Iterator<Item = DateTime<Utc>> + '_ {
        self.hours.iter().map(|&k| hour_from_key(k))
    }
}

fn hour_from_key(key: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(key * 3600, 0).expect("hour key in range")
}

fn check_horizon(horizon: u8) -> Result<()> {
    if (1..=MAX_HORIZON).contains(&horizon) {
        Ok(())
    } else {
        Err(Error::invalid(format!("horizon must be in 1..=24, got {horizon}")))
    }
}

/// Training rows for one horizon.
#[derive(Clone, Debug, Default)]
pub struct TrainingRows {
    /// Hours with a present actual load.
    pub candidates: usize,
    pub advanced: Vec<FeatureRow>,
    pub advanced_targets: Vec<f64>,
    pub basic: Vec<FeatureRow>,
    pub basic_targets: Vec<f64>,
}

impl TrainingRows {
    pub fn samples(&self, kind: ModelKind) -> Result<SampleSet> {
        let (rows, targets) = match kind {
            ModelKind::Basic => (&self.basic, &self.basic_targets),
            ModelKind::Advanced => (&self.advanced, &self.advanced_targets),
        };
        if rows.is_empty() {
            return Err(Error::InsufficientData {
                message: format!("no {} training rows", kind.as_str()),
                candidates: self.candidates,
                usable: 0,
            });
        }
        SampleSet::with_names(
            kind.feature_names().iter().map(|s| s.to_string()).collect(),
            rows.iter().map(FeatureRow::values).collect(),
            targets.clone(),
        )
    }
}

/// Every training row derivable for `horizon`, empty sets included.
pub fn collect_training_rows(index: &LoadIndex, calendar: &Calendar, horizon: u8) -> Result<TrainingRows> {
    check_horizon(horizon)?;
    let mut out = TrainingRows::default();
    for t in index.hours() {
        let Some(target) = index.actual_at(t) else {
            continue;
        };
        out.candidates += 1;
        let row = FeatureRow {
            target_time: t,
            horizon,
            calendar: calendar_features(t, calendar),
            lag_week: index.actual_at(t - Duration::hours(WEEK_HOURS)),
            lag_last_known: index.actual_at(t - Duration::hours(i64::from(horizon))),
            kind: ModelKind::Advanced,
        };
        if row.lag_week.is_some() && row.lag_last_known.is_some() {
            out.advanced.push(row.clone());
            out.advanced_targets.push(target);
        }
        out.basic.push(row.to_basic());
        out.basic_targets.push(target);
    }
    Ok(out)
}

/// Training rows for `horizon`. Hours without an actual load are skipped;
/// advanced rows missing either lag are dropped. Fails when no advanced row
/// survives.
pub fn build_training_rows(series: &LoadSeries, calendar: &Calendar, horizon: u8) -> Result<TrainingRows> {
    let rows = collect_training_rows(&LoadIndex::new(series)?, calendar, horizon)?;
    if rows.advanced.is_empty() {
        return Err(Error::InsufficientData {
            message: format!("no training row at horizon {horizon} has both lags"),
            candidates: rows.candidates,
            usable: 0,
        });
    }
    Ok(rows)
}

/// The row used to forecast `target_time` at `horizon`. A missing lag is
/// looked up one week earlier, up to six times; when either lag is still
/// missing the row falls back to the basic kind.
pub fn inference_row(index: &LoadIndex, calendar: &Calendar, target_time: DateTime<Utc>, horizon: u8) -> Result<FeatureRow> {
    check_horizon(horizon)?;
    let week = Duration::hours(WEEK_HOURS);
    let lag_week = (1..=IMPUTATION_WEEKS).find_map(|k| index.actual_at(target_time - week * k as i32));
    let last = target_time - Duration::hours(i64::from(horizon));
    let lag_last_known = (0..IMPUTATION_WEEKS).find_map(|k| index.actual_at(last - week * k as i32));
    let row = FeatureRow {
        target_time,
        horizon,
        calendar: calendar_features(target_time, calendar),
        lag_week,
        lag_last_known,
        kind: ModelKind::Advanced,
    };
    Ok(if lag_week.is_some() && lag_last_known.is_some() {
        row
    } else {
        row.to_basic()
    })
}

pub fn build_inference_row(
    series: &LoadSeries,
    calendar: &Calendar,
    target_time: DateTime<Utc>,
    horizon: u8,
) -> Result<FeatureRow> {
    inference_row(&LoadIndex::new(series)?, calendar, target_time, horizon)
}
