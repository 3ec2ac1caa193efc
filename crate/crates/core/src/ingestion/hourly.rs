use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};

use super::{Frequency, LoadObservation, LoadSeries, SourceKind};
use crate::error::{Error, Result};

/// Hours before this instant are taken from the Vertical Load source when
/// merging.
pub const DEFAULT_VERTICAL_CUTOFF: DateTime<Utc> = DateTime::from_timestamp_nanos(1_420_070_400_000_000_000);

/// Averages sub-hourly observations into clock hours keyed on UTC. An hour
/// whose sub-slots are not all present (missing rows included) has an absent
/// value for that column.
pub fn aggregate_to_hourly(series: &LoadSeries) -> LoadSeries {
    if series.frequency == Frequency::Hourly {
        return series.clone();
    }
    let slots = (60 / series.frequency.minutes()) as usize;
    let mut hours: BTreeMap<i64, Vec<&LoadObservation>> = BTreeMap::new();
    for obs in &series.observations {
        hours.entry(obs.hour_key()).or_default().push(obs);
    }
    let observations = hours
        .into_iter()
        .map(|(key, group)| {
            let offset = *group[0].interval_start.offset();
            let start = offset.from_utc_datetime(
                &DateTime::from_timestamp(key * 3600, 0)
                    .expect("hour key is in range")
                    .naive_utc(),
            );
            let column = |pick: fn(&LoadObservation) -> Option<f64>| -> Option<f64> {
                if group.len() != slots {
                    return None;
                }
                let values: Option<Vec<f64>> = group.iter().map(|o| pick(o)).collect();
                values.map(|v| v.iter().sum::<f64>() / v.len() as f64)
            };
            LoadObservation {
                interval_start: start,
                interval_end: start + Duration::hours(1),
                day_ahead_forecast: column(|o| o.day_ahead_forecast),
                actual_load: column(|o| o.actual_load),
            }
        })
        .collect();
    LoadSeries {
        country: series.country.clone(),
        frequency: Frequency::Hourly,
        source: series.source,
        observations,
    }
}

/// Combines hourly Total and Vertical Load series. Before `cutoff` an hour's
/// actual load comes from the vertical series when it has a row for that
/// hour; from `cutoff` on only the total series is used. The day-ahead
/// forecast always comes from the total series.
pub fn merge_load_sources(total: &LoadSeries, vertical: &LoadSeries, cutoff: DateTime<Utc>) -> Result<LoadSeries> {
    if total.country != vertical.country {
        return Err(Error::invalid(format!(
            "cannot merge load sources of {} and {}",
            total.country, vertical.country
        )));
    }
    for s in [total, vertical] {
        if s.frequency != Frequency::Hourly {
            return Err(Error::invalid(format!(
                "merging needs hourly series, got {}",
                s.frequency.label()
            )));
        }
    }

    let mut hours: BTreeMap<i64, LoadObservation> = BTreeMap::new();
    for obs in &vertical.observations {
        if obs.interval_start.with_timezone(&Utc) < cutoff {
            hours.insert(
                obs.hour_key(),
                LoadObservation {
                    day_ahead_forecast: None,
                    ..obs.clone()
                },
            );
        }
    }
    for obs in &total.observations {
        let key = obs.hour_key();
        let before_cutoff = obs.interval_start.with_timezone(&Utc) < cutoff;
        match hours.get_mut(&key) {
            Some(existing) if before_cutoff => existing.day_ahead_forecast = obs.day_ahead_forecast,
            _ => {
                hours.insert(key, obs.clone());
            }
        }
    }
    LoadSeries::new(
        total.country.clone(),
        Frequency::Hourly,
        SourceKind::TotalLoad,
        hours.into_values().collect(),
    )
}
