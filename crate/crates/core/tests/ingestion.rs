use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Duration, FixedOffset, TimeZone, Utc};
use loadcast_core::engine::{LossTag, ModelRecord};
use loadcast_core::features::ModelKind;
use loadcast_core::gbrt::{fit, BoostConfig, SampleSet};
use loadcast_core::ingestion::{
    aggregate_to_hourly, merge_load_sources, parse_load_csv, to_csv, CountryCode, DocumentStore, Frequency,
    LoadObservation, LoadSeries, SourceKind,
};
use proptest::prelude::*;

fn hu() -> CountryCode {
    CountryCode::new("HU").unwrap()
}

fn offset(hours: i32) -> FixedOffset {
    FixedOffset::east_opt(hours * 3600).unwrap()
}

fn obs(start: DateTime<FixedOffset>, minutes: i64, forecast: Option<f64>, actual: Option<f64>) -> LoadObservation {
    LoadObservation {
        interval_start: start,
        interval_end: start + Duration::minutes(minutes),
        day_ahead_forecast: forecast,
        actual_load: actual,
    }
}

/// `slots` quarter-hour rows from `start_utc`, with the
/// UTC offset switching from `before` to `after` at `switch_utc`. Row `i`
/// carries actual `1000 + i` and forecast `2000 + 2i`.
fn quarter_day(start_utc: DateTime<Utc>, slots: usize, switch_utc: DateTime<Utc>, before: i32, after: i32) -> LoadSeries {
    let rows = (0..slots)
        .map(|i| {
            let t = start_utc + Duration::minutes(15 * i as i64);
            let off = if t < switch_utc { offset(before) } else { offset(after) };
            obs(t.with_timezone(&off), 15, Some(2000.0 + 2.0 * i as f64), Some(1000.0 + i as f64))
        })
        .collect();
    LoadSeries::new(hu(), Frequency::QuarterHourly, SourceKind::TotalLoad, rows).unwrap()
}

#[test]
fn spring_forward_day_has_twenty_three_hours() {
    // Local 2015-03-29 in Budapest: 00:00+01:00 is 23:00Z the day before, and
    // clocks jump at 01:00Z.
    let start = Utc.with_ymd_and_hms(2015, 3, 28, 23, 0, 0).unwrap();
    let switch = Utc.with_ymd_and_hms(2015, 3, 29, 1, 0, 0).unwrap();
    let series = quarter_day(start, 23 * 4, switch, 1, 2);
    let hourly = aggregate_to_hourly(&series);
    assert_eq!(hourly.frequency, Frequency::Hourly);
    assert_eq!(hourly.len(), 23);
    for (k, o) in hourly.observations.iter().enumerate() {
        assert_eq!(o.interval_start.with_timezone(&Utc), start + Duration::hours(k as i64));
        let first = 4.0 * k as f64;
        assert_eq!(o.actual_load, Some(1000.0 + first + 1.5));
        assert_eq!(o.day_ahead_forecast, Some(2000.0 + 2.0 * first + 3.0));
    }
    let local: Vec<String> = hourly.observations.iter().map(|o| o.interval_start.format("%H%:z").to_string()).collect();
    assert_eq!(local[1], "01+01:00");
    assert_eq!(local[2], "03+02:00");
}

#[test]
fn fall_back_day_keeps_both_two_oclock_hours() {
    // Local 2015-10-25: 00:00+02:00 is 22:00Z, clocks fall back at 01:00Z.
    let start = Utc.with_ymd_and_hms(2015, 10, 24, 22, 0, 0).unwrap();
    let switch = Utc.with_ymd_and_hms(2015, 10, 25, 1, 0, 0).unwrap();
    let series = quarter_day(start, 25 * 4, switch, 2, 1);
    let hourly = aggregate_to_hourly(&series);
    assert_eq!(hourly.len(), 25);
    let twos: Vec<_> = hourly
        .observations
        .iter()
        .filter(|o| o.interval_start.format("%H").to_string() == "02")
        .map(|o| (o.interval_start.offset().local_minus_utc() / 3600, o.actual_load))
        .collect();
    // Hours 2 and 3 of the UTC-keyed day, i.e. quarters 8..12 and 12..16.
    assert_eq!(twos, vec![(2, Some(1000.0 + 8.0 + 1.5)), (1, Some(1000.0 + 12.0 + 1.5))]);
}

#[test]
fn dst_fixture_survives_csv_round_trip() {
    let start = Utc.with_ymd_and_hms(2015, 3, 28, 23, 0, 0).unwrap();
    let switch = Utc.with_ymd_and_hms(2015, 3, 29, 1, 0, 0).unwrap();
    let series = quarter_day(start, 23 * 4, switch, 1, 2);
    let text = to_csv(&series);
    let parsed = parse_load_csv(text.as_bytes(), &hu()).unwrap();
    assert_eq!(parsed, series);
    assert_eq!(aggregate_to_hourly(&parsed), aggregate_to_hourly(&series));
}

#[test]
fn hour_with_one_na_quarter_is_absent_but_forecast_survives() {
    let start = Utc.with_ymd_and_hms(2015, 6, 1, 0, 0, 0).unwrap();
    let mut series = quarter_day(start, 8, start + Duration::days(1), 2, 2);
    series.observations[5].actual_load = None;
    let hourly = aggregate_to_hourly(&series);
    assert_eq!(hourly.observations[0].actual_load, Some(1001.5));
    assert_eq!(hourly.observations[1].actual_load, None);
    assert_eq!(hourly.observations[1].day_ahead_forecast, Some(2000.0 + 8.0 + 3.0));
}

// ---------------------------------------------------------------------------
// Properties

fn arb_value() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        1 => Just(Some(0.0)),
        6 => (0.0f64..50_000.0).prop_map(Some),
        2 => (0u32..50_000).prop_map(|v| Some(f64::from(v))),
    ]
}

fn arb_series() -> impl Strategy<Value = LoadSeries> {
    let freq = prop::sample::select(vec![Frequency::QuarterHourly, Frequency::HalfHourly, Frequency::Hourly]);
    (freq, prop::collection::vec((0u8..3, arb_value(), arb_value(), -2i32..=3), 1..60), 0i64..100_000)
        .prop_map(|(freq, slots, base)| {
            let minutes = freq.minutes();
            let mut t = Utc.timestamp_opt(1_420_070_400 + base * 900, 0).unwrap();
            let mut rows = Vec::new();
            for (gap, forecast, actual, off) in slots {
                t += Duration::minutes(minutes * i64::from(gap));
                rows.push(obs(t.with_timezone(&offset(off)), minutes, forecast, actual));
                t += Duration::minutes(minutes);
            }
            LoadSeries::new(hu(), freq, SourceKind::TotalLoad, rows).unwrap()
        })
}

fn arb_hourly(base: i64) -> impl Strategy<Value = LoadSeries> {
    prop::collection::vec((any::<bool>(), arb_value()), 1..72).prop_map(move |slots| {
        let rows = slots
            .into_iter()
            .enumerate()
            .filter(|(_, (keep, _))| *keep)
            .map(|(i, (_, v))| {
                let t = Utc.timestamp_opt(base + 3600 * i as i64, 0).unwrap();
                obs(t.fixed_offset(), 60, v, v)
            })
            .collect();
        LoadSeries::new(hu(), Frequency::Hourly, SourceKind::TotalLoad, rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_serialize_parse_is_a_fixed_point(series in arb_series()) {
        let text = to_csv(&series);
        let once = parse_load_csv(text.as_bytes(), &hu()).unwrap();
        prop_assert_eq!(&once, &series);
        let again = to_csv(&once);
        prop_assert_eq!(again, text);
    }

    #[test]
    fn hourly_count_equals_distinct_clock_hours(series in arb_series()) {
        let hourly = aggregate_to_hourly(&series);
        let hours: BTreeSet<i64> = series.observations.iter().map(LoadObservation::hour_key).collect();
        prop_assert_eq!(hourly.len(), hours.len());
        let keys: Vec<i64> = hourly.observations.iter().map(LoadObservation::hour_key).collect();
        prop_assert_eq!(keys, hours.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn merge_takes_each_hour_from_exactly_one_source(
        total in arb_hourly(1_420_000_000 - 1_420_000_000 % 3600),
        vertical in arb_hourly(1_420_000_000 - 1_420_000_000 % 3600 - 36_000),
        cutoff_hours in 0i64..100,
    ) {
        let vertical = vertical.with_source(SourceKind::VerticalLoad);
        let origin = 1_420_000_000 - 1_420_000_000 % 3600 - 36_000;
        let cutoff = Utc.timestamp_opt(origin + 3600 * cutoff_hours, 0).unwrap();
        let merged = merge_load_sources(&total, &vertical, cutoff).unwrap();
        let find = |s: &LoadSeries, k: i64| s.observations.iter().find(|o| o.hour_key() == k).cloned();
        for o in &merged.observations {
            let k = o.hour_key();
            let t = find(&total, k);
            let v = find(&vertical, k);
            let before_cutoff = o.interval_start.with_timezone(&Utc) < cutoff;
            match (before_cutoff, &v, &t) {
                (true, Some(v), t) => {
                    prop_assert_eq!(o.actual_load, v.actual_load);
                    prop_assert_eq!(o.day_ahead_forecast, t.as_ref().and_then(|t| t.day_ahead_forecast));
                }
                (_, _, Some(t)) => prop_assert_eq!(o, t),
                (false, Some(_), None) | (_, None, None) => prop_assert!(false, "hour {} has no source", k),
            }
        }
        let mut expected: BTreeSet<i64> = total.observations.iter().map(LoadObservation::hour_key).collect();
        expected.extend(
            vertical.observations.iter().filter(|o| o.interval_start.with_timezone(&Utc) < cutoff).map(LoadObservation::hour_key),
        );
        let got: BTreeSet<i64> = merged.observations.iter().map(LoadObservation::hour_key).collect();
        prop_assert_eq!(got, expected);
    }
}

// ---------------------------------------------------------------------------
// Store

fn constant_record(horizon: u8, trained_at: DateTime<Utc>, level: f64) -> ModelRecord {
    let kind = ModelKind::Basic;
    let rows = vec![vec![0.0; kind.feature_names().len()]; 3];
    let samples = SampleSet::new(rows, vec![level; 3]).unwrap();
    let cfg = BoostConfig { n_trees: 2, learning_rate: 0.5, max_depth: 1, min_samples_leaf: 1, ..BoostConfig::default() };
    let model = fit(&samples, &cfg).unwrap();
    ModelRecord::new(hu(), horizon, kind, LossTag::Point, trained_at, model).unwrap()
}

#[test]
fn readers_on_independent_handles_never_see_partial_documents() {
    let dir = tempfile::tempdir().unwrap();
    let writer = DocumentStore::open(dir.path()).unwrap();
    let base = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    writer.store_model(&constant_record(3, base, 1.0)).unwrap();

    let stop = Arc::new(AtomicBool::new(false));
    let readers: Vec<_> = (0..3)
        .map(|_| {
            let root = dir.path().to_path_buf();
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                // A separate handle has its own lock, so only the rename
                // protocol stands between it and the writer.
                let reader = DocumentStore::open(root).unwrap();
                let mut seen = 0u32;
                let mut last = base;
                while !stop.load(Ordering::Relaxed) {
                    let rec = reader.find_latest_model(&hu(), 3, ModelKind::Basic, LossTag::Point).unwrap();
                    assert!(rec.trained_at >= last, "trained_at went backwards");
                    last = rec.trained_at;
                    seen += 1;
                }
                seen
            })
        })
        .collect();

    for i in 1..=40 {
        writer.store_model(&constant_record(3, base + Duration::hours(i), i as f64)).unwrap();
    }
    stop.store(true, Ordering::Relaxed);
    for r in readers {
        assert!(r.join().unwrap() > 0);
    }
    let latest = writer.find_latest_model(&hu(), 3, ModelKind::Basic, LossTag::Point).unwrap();
    assert_eq!(latest.trained_at, base + Duration::hours(40));
    assert_eq!(latest.model.predict(&[0.0; 5]).unwrap(), 40.0);
}

#[test]
fn older_decoy_appended_last_does_not_win() {
    let dir = tempfile::tempdir().unwrap();
    let store = DocumentStore::open(dir.path()).unwrap();
    let base = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    store.store_model(&constant_record(7, base + Duration::days(1), 2.0)).unwrap();
    store.store_model(&constant_record(7, base, 1.0)).unwrap();
    let rec = store.find_latest_model(&hu(), 7, ModelKind::Basic, LossTag::Point).unwrap();
    assert_eq!(rec.trained_at, base + Duration::days(1));
    assert_eq!(store.latest_trained_at(&hu()).unwrap(), Some(base + Duration::days(1)));
}

#[test]
fn storing_the_same_series_twice_leaves_the_file_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let store = DocumentStore::open(dir.path()).unwrap();
    let start = Utc.with_ymd_and_hms(2015, 6, 1, 0, 0, 0).unwrap();
    let series = quarter_day(start, 16, start + Duration::days(1), 2, 2);
    assert!(store.store_series(&series).unwrap());
    let path = dir.path().join("series").join("HU.docs");
    let before = std::fs::read(&path).unwrap();
    assert!(!store.store_series(&series).unwrap());
    assert_eq!(std::fs::read(&path).unwrap(), before);
    assert_eq!(store.load_series(&hu(), SourceKind::TotalLoad).unwrap(), series);
}
