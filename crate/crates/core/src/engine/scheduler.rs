use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, Utc};
use serde::{Deserialize, Serialize};

use super::{forecast_next_24, prepare_series, rebuild_models, truncate_hour, EngineConfig, RecordCounts};
use crate::error::Result;
use crate::features::Calendar;
use crate::ingestion::{CountryCode, DocumentStore};

/// Source of the current time, replaceable in tests.
pub trait Clock {
    fn now(&self) -> DateTime<Utc>;
    fn sleep_until(&self, deadline: DateTime<Utc>);
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep_until(&self, deadline: DateTime<Utc>) {
        if let Ok(d) = (deadline - Utc::now()).to_std() {
            std::thread::sleep(d);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    /// Countries to serve; every country with a stored series when absent.
    pub countries: Option<Vec<CountryCode>>,
    /// Local time of day at which models are rebuilt.
    pub rebuild_at: NaiveTime,
    /// Directory holding `<country>.txt` holiday files.
    pub calendar_dir: Option<PathBuf>,
    pub engine: EngineConfig,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            countries: None,
            rebuild_at: NaiveTime::MIN,
            calendar_dir: None,
            engine: EngineConfig::default(),
        }
    }
}

/// What one tick did, per country.
#[derive(Clone, Debug, Default)]
pub struct TickReport {
    pub rebuilds: Vec<(CountryCode, std::result::Result<RecordCounts, String>)>,
    pub forecasts: Vec<(CountryCode, std::result::Result<usize, String>)>,
}

/// Drives nightly rebuilds and hourly forecasts.
pub struct Scheduler {
    store: DocumentStore,
    config: SchedulerConfig,
    last_rebuild: HashMap<CountryCode, NaiveDate>,
    last_forecast_hour: HashMap<CountryCode, DateTime<Utc>>,
}

impl Scheduler {
    pub fn new(store: DocumentStore, config: SchedulerConfig) -> Result<Self> {
        config.engine.validate()?;
        Ok(Scheduler {
            store,
            config,
            last_rebuild: HashMap::new(),
            last_forecast_hour: HashMap::new(),
        })
    }

    fn countries(&self) -> Result<Vec<CountryCode>> {
        match &self.config.countries {
            Some(c) => Ok(c.clone()),
            None => self.store.list_series_countries(),
        }
    }

    /// Runs whatever is due at `now`: a rebuild when the country's local
    /// rebuild time has passed on a date without one, then a forecast batch
    /// once per clock hour. A failing country does not affect the others.
    pub fn tick(&mut self, now: DateTime<Utc>) -> TickReport {
        let mut report = TickReport::default();
        let countries = match self.countries() {
            Ok(c) => c,
            Err(e) => {
                log::error!("cannot list countries: {e}");
                return report;
            }
        };
        for country in countries {
            let calendar = match Calendar::load(&country, None, self.config.calendar_dir.as_deref()) {
                Ok(c) => c,
                Err(e) => {
                    log::error!("{country}: {e}");
                    report.forecasts.push((country, Err(e.to_string())));
                    continue;
                }
            };
            let series = match prepare_series(&self.store, &country, self.config.engine.vertical_cutoff) {
                Ok(s) => s,
                Err(e) => {
                    log::error!("{country}: {e}");
                    report.forecasts.push((country, Err(e.to_string())));
                    continue;
                }
            };

            let local = now.with_timezone(&calendar.zone);
            let today = local.date_naive();
            let due = self.last_rebuild.get(&country).is_none_or(|d| *d < today)
                && local.time() >= self.config.rebuild_at;
            if due {
                let started = Instant::now();
                match rebuild_models(&self.store, &country, &series, &calendar, &self.config.engine, now) {
                    Ok(outcome) => {
                        log::info!("{country}: rebuilt {} models in {:?}", outcome.records.len(), started.elapsed());
                        self.last_rebuild.insert(country.clone(), today);
                        report.rebuilds.push((country.clone(), Ok(outcome.counts())));
                    }
                    Err(e) => {
                        log::error!("{country}: rebuild failed after {:?}: {e}", started.elapsed());
                        report.rebuilds.push((country.clone(), Err(e.to_string())));
                    }
                }
            }

            let hour = truncate_hour(now);
            if self.last_forecast_hour.get(&country) == Some(&hour) {
                continue;
            }
            let started = Instant::now();
            let result = forecast_next_24(&self.store, &country, &series, &calendar, now).and_then(|batch| {
                for e in &batch.errors {
                    log::warn!("{country}: horizon {}: {}", e.horizon, e.message);
                }
                self.store.store_forecast_batch(&batch)?;
                Ok(batch.records.len())
            });
            match result {
                Ok(n) => {
                    log::info!("{country}: issued {n} forecasts in {:?}", started.elapsed());
                    self.last_forecast_hour.insert(country.clone(), hour);
                    report.forecasts.push((country, Ok(n)));
                }
                Err(e) => {
                    log::error!("{country}: forecast failed: {e}");
                    report.forecasts.push((country, Err(e.to_string())));
                }
            }
        }
        report
    }

    /// Ticks at every hour boundary, forever.
    pub fn run(&mut self, clock: &dyn Clock) -> ! {
        loop {
            self.run_until(clock, DateTime::<Utc>::MAX_UTC);
        }
    }

    /// Ticks at every hour boundary until the clock reaches `stop`.
    pub fn run_until(&mut self, clock: &dyn Clock, stop: DateTime<Utc>) {
        loop {
            let now = clock.now();
            if now >= stop {
                return;
            }
            self.tick(now);
            clock.sleep_until(truncate_hour(now) + Duration::hours(1));
        }
    }
}
