//! Append-only JSON-lines document files under a data directory:
//!
//! ```text
//! series/<country>.docs                      total load series
//! series/<country>.vertical.docs             vertical load series
//! models/<country>/<horizon>/<kind>.docs     point models
//! models/<country>/<horizon>/<kind>-q<a>.docs decile models
//! forecasts/<country>.docs                   issued forecast batches
//! ```
//!
//! Every write goes to a temporary file that is renamed over the target, so a
//! reader sees either the old or the new file. Within a process, writers take
//! an exclusive lock and readers a shared one.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::RwLock;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CountryCode, LoadSeries, SourceKind};
use crate::engine::{ForecastBatch, LossTag, ModelKey, ModelRecord};
use crate::error::{Error, Result};
use crate::features::ModelKind;

const EXT: &str = "docs";

#[derive(Clone, Debug)]
pub struct DocumentStore {
    root: PathBuf,
    lock: Arc<RwLock<()>>,
}

/// Metadata of a stored model, read without decoding its trees.
#[derive(Deserialize)]
struct RecordHeader {
    trained_at: DateTime<Utc>,
}

impl DocumentStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(DocumentStore {
            root,
            lock: Arc::new(RwLock::new(())),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn series_path(&self, country: &CountryCode, source: SourceKind) -> PathBuf {
        let name = match source {
            SourceKind::TotalLoad => format!("{country}.{EXT}"),
            SourceKind::VerticalLoad => format!("{country}.vertical.{EXT}"),
        };
        self.root.join("series").join(name)
    }

    fn model_path(&self, country: &CountryCode, key: ModelKey) -> PathBuf {
        self.root
            .join("models")
            .join(country.as_str())
            .join(key.horizon.to_string())
            .join(format!("{}.{EXT}", key.loss.file_stem(key.kind)))
    }

    fn forecast_path(&self, country: &CountryCode) -> PathBuf {
        self.root.join("forecasts").join(format!("{country}.{EXT}"))
    }

    /// Appends the series as a new document unless it equals the latest one.
    /// Returns whether anything was written.
    pub fn store_series(&self, series: &LoadSeries) -> Result<bool> {
        let _guard = self.lock.write();
        let path = self.series_path(&series.country, series.source);
        if let Some(current) = last_document::<LoadSeries>(&path)? {
            if &current == series {
                return Ok(false);
            }
        }
        append_documents(&path, std::slice::from_ref(series))?;
        Ok(true)
    }

    pub fn load_series(&self, country: &CountryCode, source: SourceKind) -> Result<LoadSeries> {
        let _guard = self.lock.read();
        let path = self.series_path(country, source);
        last_document(&path)?.ok_or_else(|| {
            Error::NotFound(format!("no {} series stored for {country}", source_label(source)))
        })
    }

    /// Countries with a stored total load series, sorted by code.
    pub fn list_series_countries(&self) -> Result<Vec<CountryCode>> {
        let _guard = self.lock.read();
        let dir = self.root.join("series");
        let mut out = Vec::new();
        if !dir.exists() {
            return Ok(out);
        }
        for entry in fs::read_dir(&dir)? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(stem) = name.strip_suffix(&format!(".{EXT}")) else { continue };
            if stem.ends_with(".vertical") {
                continue;
            }
            if let Ok(code) = CountryCode::new(stem) {
                out.push(code);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn store_model(&self, record: &ModelRecord) -> Result<()> {
        self.store_models(std::slice::from_ref(record))
    }

    /// Appends several records while holding the write lock once, so readers
    /// see all of them or none.
    pub fn store_models(&self, records: &[ModelRecord]) -> Result<()> {
        for r in records {
            r.validate()?;
        }
        let mut by_path: BTreeMap<PathBuf, Vec<&ModelRecord>> = BTreeMap::new();
        for r in records {
            by_path.entry(self.model_path(&r.country, r.key())).or_default().push(r);
        }
        let _guard = self.lock.write();
        for (path, group) in by_path {
            append_documents(&path, &group)?;
        }
        Ok(())
    }

    /// The record with the greatest `trained_at` for the key; among equal
    /// timestamps the one appended last.
    pub fn find_latest_model(
        &self,
        country: &CountryCode,
        horizon: u8,
        kind: ModelKind,
        loss: LossTag,
    ) -> Result<ModelRecord> {
        let _guard = self.lock.read();
        self.latest_unlocked(country, ModelKey { horizon, kind, loss })?
            .ok_or_else(|| {
                Error::NotFound(format!(
                    "no {} {} model for {country} at horizon {horizon}",
                    kind.as_str(),
                    loss_label(loss)
                ))
            })
    }

    /// Latest record for every key in `keys` that has one, read under a
    /// single shared lock so no rebuild can interleave.
    pub fn latest_models(
        &self,
        country: &CountryCode,
        keys: &[ModelKey],
    ) -> Result<BTreeMap<ModelKey, ModelRecord>> {
        let _guard = self.lock.read();
        let mut out = BTreeMap::new();
        for &key in keys {
            if let Some(record) = self.latest_unlocked(country, key)? {
                out.insert(key, record);
            }
        }
        Ok(out)
    }

    /// Most recent `trained_at` over all point models of the country.
    pub fn latest_trained_at(&self, country: &CountryCode) -> Result<Option<DateTime<Utc>>> {
        let _guard = self.lock.read();
        let mut latest = None;
        for horizon in 1..=crate::features::MAX_HORIZON {
            for kind in [ModelKind::Basic, ModelKind::Advanced] {
                let key = ModelKey { horizon, kind, loss: LossTag::Point };
                let path = self.model_path(country, key);
                for (_, line) in read_lines(&path)? {
                    let header: RecordHeader = decode(&path, &line)?;
                    latest = latest.max(Some(header.trained_at));
                }
            }
        }
        Ok(latest)
    }

    fn latest_unlocked(&self, country: &CountryCode, key: ModelKey) -> Result<Option<ModelRecord>> {
        let path = self.model_path(country, key);
        let mut best: Option<(DateTime<Utc>, String)> = None;
        for (_, line) in read_lines(&path)? {
            let header: RecordHeader = decode(&path, &line)?;
            if best.as_ref().is_none_or(|(t, _)| header.trained_at >= *t) {
                best = Some((header.trained_at, line));
            }
        }
        let Some((_, line)) = best else { return Ok(None) };
        let record: ModelRecord = decode(&path, &line)?;
        record.validate().map_err(|e| integrity(&path, e.to_string()))?;
        if record.country != *country || record.key() != key {
            return Err(integrity(&path, "record does not belong in this file"));
        }
        Ok(Some(record))
    }

    pub fn store_forecast_batch(&self, batch: &ForecastBatch) -> Result<()> {
        let _guard = self.lock.write();
        append_documents(&self.forecast_path(&batch.country), std::slice::from_ref(batch))
    }

    /// All batches issued for the country, in issue order.
    pub fn load_forecast_batches(&self, country: &CountryCode) -> Result<Vec<ForecastBatch>> {
        let _guard = self.lock.read();
        let path = self.forecast_path(country);
        read_lines(&path)?
            .into_iter()
            .map(|(_, line)| decode(&path, &line))
            .collect()
    }

    pub fn latest_forecast_batch(&self, country: &CountryCode) -> Result<Option<ForecastBatch>> {
        let _guard = self.lock.read();
        let path = self.forecast_path(country);
        match read_lines(&path)?.pop() {
            Some((_, line)) => decode(&path, &line).map(Some),
            None => Ok(None),
        }
    }
}

fn source_label(source: SourceKind) -> &'static str {
    match source {
        SourceKind::TotalLoad => "total load",
        SourceKind::VerticalLoad => "vertical load",
    }
}

fn loss_label(loss: LossTag) -> String {
    match loss {
        LossTag::Point => "point".to_string(),
        LossTag::Decile { percent } => format!("q{percent}"),
    }
}

fn integrity(path: &Path, message: impl Into<String>) -> Error {
    Error::Integrity {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Non-empty lines with their 1-based line numbers; a missing file has none.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
            return Err(integrity(path, "file is not valid UTF-8"))
        }
        Err(e) => return Err(e.into()),
    };
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(integrity(path, "last document is truncated"));
    }
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn decode<T: DeserializeOwned>(path: &Path, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| integrity(path, format!("corrupt document: {e}")))
}

fn last_document<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    match read_lines(path)?.pop() {
        Some((_, line)) => decode(path, &line).map(Some),
        None => Ok(None),
    }
}

/// Copies the current file plus the new documents into a sibling temporary
/// file, then renames it over the original.
fn append_documents<T: Serialize>(path: &Path, docs: &[T]) -> Result<()> {
    let dir = path.parent().expect("document paths have a parent");
    fs::create_dir_all(dir)?;
    let file_name = path.file_name().and_then(|n| n.to_str()).expect("utf-8 file name");
    let tmp = dir.join(format!(".{file_name}.tmp"));
    if path.exists() {
        fs::copy(path, &tmp)?;
    } else {
        fs::File::create(&tmp)?;
    }
    let mut file = fs::OpenOptions::new().append(true).open(&tmp)?;
    let mut buf = Vec::new();
    for doc in docs {
        serde_json::to_writer(&mut buf, doc).map_err(|e| Error::invalid(format!("cannot serialize document: {e}")))?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbrt::{BoostConfig, BoostedModel};
    use crate::ingestion::{Frequency, LoadObservation};
    use chrono::{Duration, TimeZone};

    fn code() -> CountryCode {
        CountryCode::new("10YHU-MAVIR----U").unwrap()
    }

    fn record(hour: u32, f0: f64) -> ModelRecord {
        let trained_at = Utc.with_ymd_and_hms(2015, 3, 1, hour, 0, 0).unwrap();
        let model = BoostedModel::constant(f0, 7, BoostConfig::default());
        ModelRecord::new(code(), 24, ModelKind::Advanced, LossTag::Point, trained_at, model).unwrap()
    }

    fn series(n: usize) -> LoadSeries {
        let start = chrono::DateTime::parse_from_rfc3339("2015-03-01T00:00:00+01:00").unwrap();
        let obs = (0..n)
            .map(|i| LoadObservation {
                interval_start: start + Duration::hours(i as i64),
                interval_end: start + Duration::hours(i as i64 + 1),
                day_ahead_forecast: Some(1.0 + i as f64),
                actual_load: if i % 5 == 0 { None } else { Some(0.1 * i as f64) },
            })
            .collect();
        LoadSeries::new(code(), Frequency::Hourly, SourceKind::TotalLoad, obs).unwrap()
    }

    #[test]
    fn latest_model_wins() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocumentStore::open(dir.path()).unwrap();
        store.store_model(&record(23, 2.0)).unwrap();
        store.store_model(&record(10, 1.0)).unwrap();
        let got = store.find_latest_model(&code(), 24, ModelKind::Advanced, LossTag::Point).unwrap();
        assert_eq!(got, record(23, 2.0));
        assert!(dir.path().join("models/10YHU-MAVIR----U/24/advanced.docs").exists());
        assert_eq!(store.latest_trained_at(&code()).unwrap(), Some(record(23, 0.0).trained_at));
    }

    #[test]
    fn missing_model_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocumentStore::open(dir.path()).unwrap();
        let err = store.find_latest_model(&code(), 1, ModelKind::Basic, LossTag::Point).unwrap_err();
        assert!(matches!(err, Error::NotFound(_)));
        assert_eq!(store.latest_trained_at(&code()).unwrap(), None);
    }

    #[test]
    fn series_round_trip_and_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocumentStore::open(dir.path()).unwrap();
        let s = series(50);
        assert!(store.store_series(&s).unwrap());
        assert!(!store.store_series(&s).unwrap());
        assert_eq!(store.load_series(&code(), SourceKind::TotalLoad).unwrap(), s);
        assert!(matches!(
            store.load_series(&code(), SourceKind::VerticalLoad),
            Err(Error::NotFound(_))
        ));
        let vertical = s.clone().with_source(SourceKind::VerticalLoad);
        store.store_series(&vertical).unwrap();
        assert_eq!(store.list_series_countries().unwrap(), vec![code()]);
        let text = fs::read_to_string(dir.path().join("series/10YHU-MAVIR----U.docs")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn corruption_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocumentStore::open(dir.path()).unwrap();
        store.store_series(&series(3)).unwrap();
        let path = dir.path().join("series/10YHU-MAVIR----U.docs");
        fs::write(&path, "{not json}\n").unwrap();
        match store.load_series(&code(), SourceKind::TotalLoad) {
            Err(Error::Integrity { path: p, .. }) => assert_eq!(p, path),
            other => panic!("{other:?}"),
        }
        fs::write(&path, "{\"country\":").unwrap();
        assert!(matches!(
            store.load_series(&code(), SourceKind::TotalLoad),
            Err(Error::Integrity { .. })
        ));
    }

    #[test]
    fn forecast_batches_append() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocumentStore::open(dir.path()).unwrap();
        assert_eq!(store.latest_forecast_batch(&code()).unwrap(), None);
        for h in 0..3 {
            let batch = ForecastBatch {
                country: code(),
                issued_at: Utc.with_ymd_and_hms(2015, 3, 1, h, 0, 0).unwrap(),
                records: vec![],
                errors: vec![],
            };
            store.store_forecast_batch(&batch).unwrap();
        }
        assert_eq!(store.load_forecast_batches(&code()).unwrap().len(), 3);
        assert_eq!(
            store.latest_forecast_batch(&code()).unwrap().unwrap().issued_at,
            Utc.with_ymd_and_hms(2015, 3, 1, 2, 0, 0).unwrap()
        );
    }
}
