//! The operations behind each endpoint and subcommand. Both front ends call
//! these and serialize the result with [`to_json`], so a CLI run and the
//! matching request yield the same document.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, Utc};
use loadcast_core::engine::{
    prepare_series, train_models, truncate_hour, EngineConfig, ForecastBatch, ForecastRecord, ModelSet, RecordCounts,
};
use loadcast_core::evaluation::{self, EvaluationResult};
use loadcast_core::features::{Calendar, LoadIndex, MAX_HORIZON};
use loadcast_core::ingestion::{parse_load_csv, CountryCode, DocumentStore, Frequency, LoadSeries, SourceKind};
use loadcast_core::quality::{self, Period, QualityReport};
use loadcast_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

pub type OpResult<T> = Result<T, ApiError>;

/// Store handle and settings shared by all operations.
#[derive(Clone, Debug)]
pub struct Context {
    pub store: DocumentStore,
    pub engine: EngineConfig,
    pub calendar_dir: Option<PathBuf>,
}

impl Context {
    pub fn open(data_dir: impl Into<PathBuf>, engine: EngineConfig, calendar_dir: Option<PathBuf>) -> OpResult<Self> {
        Ok(Context {
            store: DocumentStore::open(data_dir)?,
            engine,
            calendar_dir,
        })
    }

    fn calendar(&self, country: &CountryCode) -> OpResult<Calendar> {
        Calendar::load(country, None, self.calendar_dir.as_deref()).map_err(ApiError::from)
    }

    fn require_series(&self, country: &CountryCode) -> OpResult<LoadSeries> {
        match self.store.load_series(country, SourceKind::TotalLoad) {
            Err(Error::NotFound(_)) => Err(ApiError::not_found(format!("unknown country {country}"))),
            other => other.map_err(ApiError::from),
        }
    }

    fn hourly_series(&self, country: &CountryCode) -> OpResult<LoadSeries> {
        self.require_series(country)?;
        Ok(prepare_series(&self.store, country, self.engine.vertical_cutoff)?)
    }
}

/// Compact JSON text of a response document.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("response documents serialize")
}

pub fn parse_country(code: &str) -> OpResult<CountryCode> {
    CountryCode::new(code).map_err(ApiError::from)
}

/// Accepts RFC 3339 instants, `YYYY-MM-DDTHH:MM[:SS]` read as UTC, and bare
/// dates meaning midnight UTC. A space where the offset sign should be is
/// read as `+`, since query strings decode `+` to a space.
pub fn parse_instant(text: &str) -> OpResult<DateTime<Utc>> {
    let text = text.trim();
    let repaired = match text.rfind(' ') {
        Some(i) if i > 10 => format!("{}+{}", &text[..i], &text[i + 1..]),
        _ => text.to_string(),
    };
    if let Ok(t) = DateTime::parse_from_rfc3339(&repaired) {
        return Ok(t.with_timezone(&Utc));
    }
    for format in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, format) {
            return Ok(t.and_utc());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc());
    }
    Err(ApiError::invalid(format!("cannot read {text:?} as a date or timestamp")))
}

pub fn parse_bool(text: &str) -> OpResult<bool> {
    match text {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(ApiError::invalid(format!("expected true or false, got {other:?}"))),
    }
}

fn parse_horizon(value: u8) -> OpResult<u8> {
    if (1..=MAX_HORIZON).contains(&value) {
        Ok(value)
    } else {
        Err(ApiError::invalid(format!("horizon must be in 1..=24, got {value}")))
    }
}

pub fn parse_hours(text: &str) -> OpResult<u8> {
    let n: u8 = text
        .parse()
        .map_err(|_| ApiError::invalid(format!("hours must be an integer in 1..=24, got {text:?}")))?;
    parse_horizon(n)
}

// ---------------------------------------------------------------------------
// Countries

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountryEntry {
    pub country: CountryCode,
    pub name: String,
    pub frequency: Frequency,
    pub observations: usize,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    pub trained_at: Option<DateTime<Utc>>,
}

pub fn list_countries(ctx: &Context) -> OpResult<Vec<CountryEntry>> {
    let mut out = Vec::new();
    for country in ctx.store.list_series_countries()? {
        let series = ctx.store.load_series(&country, SourceKind::TotalLoad)?;
        let Some((start, end)) = series.span() else { continue };
        out.push(CountryEntry {
            name: country.name().to_string(),
            frequency: series.frequency,
            observations: series.len(),
            start,
            end,
            trained_at: ctx.store.latest_trained_at(&country)?,
            country,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Ingest

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub country: CountryCode,
    pub source: SourceKind,
    /// Data rows in the uploaded file.
    pub rows: usize,
    pub frequency: Frequency,
    pub period: Period,
    /// Rows held for the country and source after the merge.
    pub stored_rows: usize,
    /// False when the upload added nothing new.
    pub changed: bool,
}

/// Parses a CSV upload and merges it into the stored series. Rows already
/// stored for the same interval are replaced by the uploaded ones.
pub fn ingest(ctx: &Context, country: &CountryCode, source: SourceKind, body: &[u8]) -> OpResult<IngestSummary> {
    ctx.calendar(country)
        .map_err(|_| ApiError::invalid(format!("no time zone is known for country {country}")))?;
    let upload = parse_load_csv(body, country)?.with_source(source);
    let (start, end) = upload.span().expect("parsed series has rows");
    let merged = match ctx.store.load_series(country, source) {
        Ok(existing) => existing.merged_with(&upload)?,
        Err(Error::NotFound(_)) => upload.clone(),
        Err(e) => return Err(e.into()),
    };
    let changed = ctx.store.store_series(&merged)?;
    Ok(IngestSummary {
        country: country.clone(),
        source,
        rows: upload.len(),
        frequency: upload.frequency,
        period: Period {
            start: start.with_timezone(&Utc),
            end: end.with_timezone(&Utc),
        },
        stored_rows: merged.len(),
        changed,
    })
}

// ---------------------------------------------------------------------------
// Rebuild

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RebuildSummary {
    pub country: CountryCode,
    pub trained_at: DateTime<Utc>,
    pub deciles: bool,
    pub counts: RecordCounts,
    /// Model kinds trained at each horizon.
    pub horizons: BTreeMap<u8, Vec<String>>,
    pub warnings: Vec<String>,
}

pub fn rebuild(ctx: &Context, country: &CountryCode, deciles: Option<bool>, now: DateTime<Utc>) -> OpResult<RebuildSummary> {
    let series = ctx.hourly_series(country)?;
    let calendar = ctx.calendar(country)?;
    let mut engine = ctx.engine.clone();
    if let Some(d) = deciles {
        engine.deciles = d;
    }
    let outcome = train_models(country, &series, &calendar, &engine, now)?;
    for w in &outcome.warnings {
        log::warn!("{country}: {w}");
    }
    ctx.store.store_models(&outcome.records)?;
    let mut horizons: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for r in &outcome.records {
        let label = match r.loss {
            loadcast_core::engine::LossTag::Point => r.kind.as_str().to_string(),
            loadcast_core::engine::LossTag::Decile { percent } => format!("q{percent}"),
        };
        horizons.entry(r.horizon).or_default().push(label);
    }
    Ok(RebuildSummary {
        country: country.clone(),
        trained_at: now,
        deciles: engine.deciles,
        counts: outcome.counts(),
        horizons,
        warnings: outcome.warnings,
    })
}

// ---------------------------------------------------------------------------
// Forecasts

/// Issues and stores the 24-hour batch for `now`.
pub fn issue_forecast(ctx: &Context, country: &CountryCode, now: DateTime<Utc>) -> OpResult<ForecastBatch> {
    let series = ctx.hourly_series(country)?;
    let calendar = ctx.calendar(country)?;
    let models = ModelSet::load(&ctx.store, country)?;
    if models.is_empty() {
        return Err(ApiError::insufficient(format!("no models trained for {country}; rebuild first")));
    }
    let batch = models.forecast_next_24(country, &LoadIndex::new(&series)?, &calendar, now);
    if batch.records.is_empty() {
        return Err(ApiError::insufficient(format!("no horizon could be forecast for {country}")));
    }
    ctx.store.store_forecast_batch(&batch)?;
    Ok(batch)
}

/// Records of the latest batch, ordered by target time, starting at `from`
/// (the first target when absent) and at most `hours` long.
pub fn latest_forecast(ctx: &Context, country: &CountryCode, from: Option<DateTime<Utc>>, hours: u8) -> OpResult<Vec<ForecastRecord>> {
    parse_horizon(hours)?;
    ctx.require_series(country)?;
    let batch = ctx
        .store
        .latest_forecast_batch(country)?
        .ok_or_else(|| ApiError::insufficient(format!("no forecasts issued for {country} yet")))?;
    let mut records = batch.records;
    records.sort_by_key(|r| r.target_time);
    let from = from.map(truncate_hour);
    let out: Vec<ForecastRecord> = records
        .into_iter()
        .filter(|r| from.is_none_or(|f| r.target_time >= f))
        .take(usize::from(hours))
        .collect();
    if out.is_empty() {
        return Err(ApiError::insufficient(format!(
            "the latest forecast for {country} does not cover the requested window"
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Quality

/// Audits every stored country whose series overlaps the period.
pub fn quality(ctx: &Context, from: DateTime<Utc>, to: DateTime<Utc>) -> OpResult<Vec<QualityReport>> {
    let period = Period::new(from, to)?;
    let mut reports = Vec::new();
    for country in ctx.store.list_series_countries()? {
        let series = ctx.store.load_series(&country, SourceKind::TotalLoad)?;
        let Some((start, end)) = series.span() else { continue };
        if end.with_timezone(&Utc) <= period.start || start.with_timezone(&Utc) >= period.end {
            continue;
        }
        reports.push(quality::audit(&series, period)?);
    }
    reports.sort_by(|a, b| a.country_name.cmp(&b.country_name).then(a.country.cmp(&b.country)));
    Ok(reports)
}

pub fn render_quality(reports: &[QualityReport]) -> String {
    if reports.is_empty() {
        return "no stored series overlaps the period\n".to_string();
    }
    quality::render_report(reports)
}

// ---------------------------------------------------------------------------
// Evaluation

/// Scores stored forecasts against the stored actuals. When one target hour
/// was forecast more than once at the same horizon the latest issue counts.
/// The period defaults to the span of the stored forecasts.
pub fn evaluate(
    ctx: &Context,
    country: &CountryCode,
    from: Option<DateTime<Utc>>,
    to: Option<DateTime<Utc>>,
    horizon: Option<u8>,
) -> OpResult<EvaluationResult> {
    let horizon = horizon.map(parse_horizon).transpose()?;
    let series = ctx.hourly_series(country)?;
    let mut latest: BTreeMap<(DateTime<Utc>, u8), ForecastRecord> = BTreeMap::new();
    for batch in ctx.store.load_forecast_batches(country)? {
        for r in batch.records {
            latest.insert((r.target_time, r.horizon), r);
        }
    }
    let records: Vec<ForecastRecord> = latest.into_values().collect();
    let (Some(first), Some(last)) = (
        records.iter().map(|r| r.target_time).min(),
        records.iter().map(|r| r.target_time).max(),
    ) else {
        return Err(ApiError::insufficient(format!("no forecasts issued for {country} yet")));
    };
    let from = from.unwrap_or(first);
    let to = to.unwrap_or(last + chrono::Duration::hours(1));
    let period = Period::new(from, to)?;
    Ok(evaluation::evaluate(country, &records, &series, period, horizon)?)
}

pub fn render_evaluation(result: &EvaluationResult) -> String {
    evaluation::render_evaluation(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instants() {
        let want = DateTime::parse_from_rfc3339("2015-03-01T10:00:00Z").unwrap().with_timezone(&Utc);
        for text in [
            "2015-03-01T10:00:00Z",
            "2015-03-01T11:00:00+01:00",
            "2015-03-01T11:00:00 01:00",
            "2015-03-01T10:00",
            "2015-03-01T10:00:00",
        ] {
            assert_eq!(parse_instant(text).unwrap(), want, "{text}");
        }
        assert_eq!(parse_instant("2015-03-01").unwrap(), want - chrono::Duration::hours(10));
        assert!(parse_instant("yesterday").is_err());
    }

    #[test]
    fn hours_bounds() {
        assert_eq!(parse_hours("24").unwrap(), 24);
        assert!(parse_hours("0").is_err());
        assert!(parse_hours("25").is_err());
        assert!(parse_hours("-1").is_err());
    }
}
