//! Per-horizon model maintenance and forecasting.
//!
//! Each (country, horizon) pair gets a calendar-only basic model and a lagged
//! advanced model, optionally with nine decile models beside the advanced
//! one. Forecasting picks the advanced model whenever the inference row has
//! both lags and falls back to the basic model otherwise.

mod backtest;
mod records;
mod scheduler;

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, DurationRound, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{collect_training_rows, inference_row, Calendar, FeatureRow, LoadIndex, ModelKind, MAX_HORIZON};
use crate::gbrt::{fit, BoostConfig, Loss};
use crate::ingestion::{
    aggregate_to_hourly, merge_load_sources, CountryCode, DocumentStore, LoadSeries, SourceKind,
    DEFAULT_VERTICAL_CUTOFF,
};

pub use backtest::{backtest, BacktestResult};
pub use records::{ForecastBatch, ForecastRecord, HorizonError, LossTag, ModelKey, ModelRecord, DECILES};
pub use scheduler::{Clock, Scheduler, SchedulerConfig, SystemClock, TickReport};

/// Hyperparameters of the model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub basic: BoostConfig,
    pub advanced: BoostConfig,
    /// Trees of the decile models; the loss is set per decile.
    pub decile: BoostConfig,
    /// Also train the nine decile models per horizon.
    pub deciles: bool,
    /// Hours before this instant use the vertical load series when present.
    pub vertical_cutoff: DateTime<Utc>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            basic: BoostConfig {
                n_trees: 50,
                learning_rate: 0.1,
                max_depth: 5,
                min_samples_leaf: 20,
                loss: Loss::Squared,
            },
            advanced: BoostConfig {
                n_trees: 100,
                learning_rate: 0.1,
                max_depth: 7,
                min_samples_leaf: 20,
                loss: Loss::Squared,
            },
            decile: BoostConfig {
                n_trees: 100,
                learning_rate: 0.1,
                max_depth: 3,
                min_samples_leaf: 50,
                loss: Loss::Squared,
            },
            deciles: false,
            vertical_cutoff: DEFAULT_VERTICAL_CUTOFF,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, cfg) in [("basic", &self.basic), ("advanced", &self.advanced), ("decile", &self.decile)] {
            cfg.validate()
                .map_err(|e| Error::Configuration(format!("{name} model: {e}")))?;
        }
        for (name, cfg) in [("basic", &self.basic), ("advanced", &self.advanced)] {
            if cfg.loss != Loss::Squared {
                return Err(Error::Configuration(format!("{name} model must use squared loss")));
            }
        }
        Ok(())
    }
}

/// Records produced by one rebuild and the horizons that could only get a
/// basic model.
#[derive(Clone, Debug, Default)]
pub struct RebuildOutcome {
    pub records: Vec<ModelRecord>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCounts {
    pub basic: usize,
    pub advanced: usize,
    pub decile: usize,
}

impl RebuildOutcome {
    pub fn counts(&self) -> RecordCounts {
        let mut c = RecordCounts::default();
        for r in &self.records {
            match (r.kind, r.loss) {
                (ModelKind::Basic, _) => c.basic += 1,
                (ModelKind::Advanced, LossTag::Point) => c.advanced += 1,
                (ModelKind::Advanced, LossTag::Decile { .. }) => c.decile += 1,
            }
        }
        c
    }
}

/// Trains every model for the country without touching the store. Fails
/// only when some horizon has no basic training row at all.
pub fn train_models(
    country: &CountryCode,
    series: &LoadSeries,
    calendar: &Calendar,
    config: &EngineConfig,
    trained_at: DateTime<Utc>,
) -> Result<RebuildOutcome> {
    config.validate()?;
    let index = LoadIndex::new(series)?;
    let per_horizon: Vec<Result<(Vec<ModelRecord>, Option<String>)>> = (1..=MAX_HORIZON)
        .into_par_iter()
        .map(|h| train_horizon(country, &index, calendar, config, trained_at, h))
        .collect();

    let mut outcome = RebuildOutcome::default();
    for result in per_horizon {
        let (records, warning) = result?;
        outcome.records.extend(records);
        outcome.warnings.extend(warning);
    }
    outcome.records.sort_by_key(ModelRecord::key);
    Ok(outcome)
}

fn train_horizon(
    country: &CountryCode,
    index: &LoadIndex,
    calendar: &Calendar,
    config: &EngineConfig,
    trained_at: DateTime<Utc>,
    horizon: u8,
) -> Result<(Vec<ModelRecord>, Option<String>)> {
    let rows = collect_training_rows(index, calendar, horizon)?;
    let basic = rows.samples(ModelKind::Basic)?;
    let mut records = vec![ModelRecord::new(
        country.clone(),
        horizon,
        ModelKind::Basic,
        LossTag::Point,
        trained_at,
        fit(&basic, &config.basic)?,
    )?];

    let advanced = match rows.samples(ModelKind::Advanced) {
        Ok(s) => s,
        Err(e) => return Ok((records, Some(format!("horizon {horizon}: advanced model skipped: {e}")))),
    };
    let mut tags = vec![LossTag::Point];
    if config.deciles {
        tags.extend(DECILES.iter().map(|&percent| LossTag::Decile { percent }));
    }
    let advanced_records: Result<Vec<ModelRecord>> = tags
        .into_par_iter()
        .map(|tag| {
            let base = match tag {
                LossTag::Point => config.advanced,
                LossTag::Decile { .. } => config.decile,
            };
            let model = fit(&advanced, &base.with_loss(tag.loss()))?;
            ModelRecord::new(country.clone(), horizon, ModelKind::Advanced, tag, trained_at, model)
        })
        .collect();
    records.extend(advanced_records?);
    Ok((records, None))
}

/// Trains and persists all models for the country in one batch.
pub fn rebuild_models(
    store: &DocumentStore,
    country: &CountryCode,
    series: &LoadSeries,
    calendar: &Calendar,
    config: &EngineConfig,
    trained_at: DateTime<Utc>,
) -> Result<RebuildOutcome> {
    let outcome = train_models(country, series, calendar, config, trained_at)?;
    for w in &outcome.warnings {
        log::warn!("{country}: {w}");
    }
    store.store_models(&outcome.records)?;
    Ok(outcome)
}

/// The stored total load series, aggregated to hours and merged with the
/// vertical load series when one is stored.
pub fn prepare_series(store: &DocumentStore, country: &CountryCode, vertical_cutoff: DateTime<Utc>) -> Result<LoadSeries> {
    let total = aggregate_to_hourly(&store.load_series(country, SourceKind::TotalLoad)?);
    match store.load_series(country, SourceKind::VerticalLoad) {
        Ok(vertical) => merge_load_sources(&total, &aggregate_to_hourly(&vertical), vertical_cutoff),
        Err(Error::NotFound(_)) => Ok(total),
        Err(e) => Err(e),
    }
}

/// Sorts decile forecasts so they no longer cross.
pub fn repair_decile_crossing(deciles: [f64; 9]) -> [f64; 9] {
    let mut out = deciles;
    out.sort_by(f64::total_cmp);
    out
}

/// The models applied to one forecast batch.
#[derive(Clone, Debug, Default)]
pub struct ModelSet {
    models: BTreeMap<ModelKey, ModelRecord>,
}

impl ModelSet {
    pub fn new(records: impl IntoIterator<Item = ModelRecord>) -> Self {
        let mut models: BTreeMap<ModelKey, ModelRecord> = BTreeMap::new();
        for r in records {
            match models.get(&r.key()) {
                Some(existing) if existing.trained_at > r.trained_at => {}
                _ => {
                    models.insert(r.key(), r);
                }
            }
        }
        ModelSet { models }
    }

    /// Latest stored model for every key of the country, read at once.
    pub fn load(store: &DocumentStore, country: &CountryCode) -> Result<Self> {
        let keys = all_keys();
        Ok(ModelSet {
            models: store.latest_models(country, &keys)?,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, horizon: u8, kind: ModelKind, loss: LossTag) -> Option<&ModelRecord> {
        self.models.get(&ModelKey { horizon, kind, loss })
    }

    /// Forecast for one target hour. `row` decides the preferred kind;
    /// `force_basic` uses the basic model regardless.
    pub fn forecast_row(&self, country: &CountryCode, issued_at: DateTime<Utc>, row: &FeatureRow, force_basic: bool) -> Result<ForecastRecord> {
        let h = row.horizon;
        let advanced = (!force_basic && row.kind == ModelKind::Advanced)
            .then(|| self.get(h, ModelKind::Advanced, LossTag::Point))
            .flatten();
        let (record, row) = match advanced {
            Some(r) => (r, row.clone()),
            None => {
                let basic = self.get(h, ModelKind::Basic, LossTag::Point).ok_or_else(|| {
                    Error::NotFound(format!("no basic model for {country} at horizon {h}"))
                })?;
                (basic, row.to_basic())
            }
        };
        let values = row.values();
        let point = record.model.predict(&values)?;
        let deciles = if record.kind == ModelKind::Advanced {
            let mut q = [0.0; 9];
            let mut complete = true;
            for (slot, &percent) in q.iter_mut().zip(&DECILES) {
                match self.get(h, ModelKind::Advanced, LossTag::Decile { percent }) {
                    Some(m) => *slot = m.model.predict(&values)?,
                    None => complete = false,
                }
            }
            complete.then(|| repair_decile_crossing(q).to_vec())
        } else {
            None
        };
        Ok(ForecastRecord {
            country: country.clone(),
            issued_at,
            target_time: row.target_time,
            horizon: h,
            kind: record.kind,
            point,
            deciles,
            model_trained_at: record.trained_at,
        })
    }

    /// Forecasts for the 24 hours following the hour containing `now`.
    pub fn forecast_next_24(&self, country: &CountryCode, index: &LoadIndex, calendar: &Calendar, now: DateTime<Utc>) -> ForecastBatch {
        let base = truncate_hour(now);
        let mut batch = ForecastBatch {
            country: country.clone(),
            issued_at: now,
            records: Vec::with_capacity(usize::from(MAX_HORIZON)),
            errors: Vec::new(),
        };
        let results: Vec<(u8, Result<ForecastRecord>)> = (1..=MAX_HORIZON)
            .into_par_iter()
            .map(|h| {
                let target = base + Duration::hours(i64::from(h));
                let result = inference_row(index, calendar, target, h).and_then(|row| self.forecast_row(country, now, &row, false));
                (h, result)
            })
            .collect();
        for (horizon, result) in results {
            match result {
                Ok(r) => batch.records.push(r),
                Err(e) => batch.errors.push(HorizonError {
                    horizon,
                    message: e.to_string(),
                }),
            }
        }
        batch
    }
}

fn all_keys() -> Vec<ModelKey> {
    let mut keys = Vec::new();
    for horizon in 1..=MAX_HORIZON {
        keys.push(ModelKey { horizon, kind: ModelKind::Basic, loss: LossTag::Point });
        keys.push(ModelKey { horizon, kind: ModelKind::Advanced, loss: LossTag::Point });
        for &percent in &DECILES {
            keys.push(ModelKey { horizon, kind: ModelKind::Advanced, loss: LossTag::Decile { percent } });
        }
    }
    keys
}

pub fn truncate_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    t.duration_trunc(Duration::hours(1)).expect("hour truncation in range")
}

/// Forecasts the next 24 hours from the newest stored models. Models are
/// read in one snapshot, so a concurrent rebuild never mixes generations
/// within the batch.
pub fn forecast_next_24(
    store: &DocumentStore,
    country: &CountryCode,
    series: &LoadSeries,
    calendar: &Calendar,
    now: DateTime<Utc>,
) -> Result<ForecastBatch> {
    let models = ModelSet::load(store, country)?;
    let index = LoadIndex::new(series)?;
    Ok(models.forecast_next_24(country, &index, calendar, now))
}
