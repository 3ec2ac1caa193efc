use chrono::{DateTime, Duration, Utc};

use super::{train_models, EngineConfig, ForecastRecord, ModelSet};
use crate::error::{Error, Result};
use crate::features::{inference_row, Calendar, LoadIndex, MAX_HORIZON};
use crate::ingestion::LoadSeries;

/// Forecasts replayed over a test window.
#[derive(Clone, Debug, Default)]
pub struct BacktestResult {
    /// What the engine would have issued: advanced where possible.
    pub preferred: Vec<ForecastRecord>,
    /// The basic model's forecasts for the same targets.
    pub basic: Vec<ForecastRecord>,
    /// (target hour, actual load) for every test hour with an actual.
    pub actuals: Vec<(DateTime<Utc>, f64)>,
}

/// Trains on the hours before `train_end`, then forecasts every test hour in
/// `[train_end, test_end)` at every horizon as if issued `horizon` hours
/// earlier. Lags only reach back to the issue hour, so no test actual is
/// seen before its time.
pub fn backtest(
    series: &LoadSeries,
    calendar: &Calendar,
    config: &EngineConfig,
    train_end: DateTime<Utc>,
    test_end: DateTime<Utc>,
) -> Result<BacktestResult> {
    if test_end <= train_end {
        return Err(Error::invalid("test window is empty"));
    }
    let train = LoadSeries {
        observations: series
            .observations
            .iter()
            .filter(|o| o.interval_start < train_end)
            .cloned()
            .collect(),
        ..series.clone()
    };
    let outcome = train_models(&series.country, &train, calendar, config, train_end)?;
    let models = ModelSet::new(outcome.records);
    let index = LoadIndex::new(series)?;

    let mut result = BacktestResult::default();
    for t in index.hours().filter(|t| *t >= train_end && *t < test_end) {
        let Some(actual) = index.actual_at(t) else { continue };
        result.actuals.push((t, actual));
        for h in 1..=MAX_HORIZON {
            let issued = t - Duration::hours(i64::from(h));
            let row = inference_row(&index, calendar, t, h)?;
            result.preferred.push(models.forecast_row(&series.country, issued, &row, false)?);
            result.basic.push(models.forecast_row(&series.country, issued, &row, true)?);
        }
    }
    Ok(result)
}
