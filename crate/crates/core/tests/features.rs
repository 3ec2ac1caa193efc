use std::path::PathBuf;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use loadcast_core::features::{
    calendar_features, collect_training_rows, inference_row, Calendar, FeatureRow, LoadIndex, ModelKind, WEEK_HOURS,
};
use loadcast_core::ingestion::{CountryCode, Frequency, LoadObservation, LoadSeries, SourceKind};
use proptest::prelude::*;

fn calendars_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../calendars")
}

fn start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2015, 3, 2, 0, 0, 0).unwrap()
}

fn series(actuals: &[Option<f64>]) -> LoadSeries {
    let rows = actuals
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let t = start() + Duration::hours(i as i64);
            LoadObservation {
                interval_start: t.fixed_offset(),
                interval_end: (t + Duration::hours(1)).fixed_offset(),
                day_ahead_forecast: None,
                actual_load: *a,
            }
        })
        .collect();
    LoadSeries::new(CountryCode::new("HU").unwrap(), Frequency::Hourly, SourceKind::TotalLoad, rows).unwrap()
}

fn hu_calendar() -> Calendar {
    Calendar::load(&CountryCode::new("HU").unwrap(), None, Some(&calendars_dir())).unwrap()
}

#[test]
fn shipped_calendars_parse() {
    for code in ["HU", "CZ"] {
        let cal = Calendar::load(&CountryCode::new(code).unwrap(), None, Some(&calendars_dir())).unwrap();
        assert_eq!(cal.holidays.len(), 12, "{code}");
        assert!(cal.is_holiday(NaiveDate::from_ymd_opt(2015, 12, 25).unwrap()));
        assert!(!cal.is_holiday(NaiveDate::from_ymd_opt(2015, 12, 27).unwrap()));
    }
}

#[test]
fn eic_code_falls_back_to_the_two_letter_file() {
    let eic = CountryCode::new("10YHU-MAVIR----U").unwrap();
    let cal = Calendar::load(&eic, None, Some(&calendars_dir())).unwrap();
    assert!(cal.is_holiday(NaiveDate::from_ymd_opt(2015, 3, 15).unwrap()));
    assert_eq!(cal.zone, chrono_tz::Europe::Budapest);
}

#[test]
fn calendar_features_use_local_time() {
    let cal = hu_calendar();
    // 23:00Z on New Year's Eve is already 00:00 on a holiday in Budapest.
    let t = Utc.with_ymd_and_hms(2014, 12, 31, 23, 0, 0).unwrap();
    let c = calendar_features(t, &cal);
    assert_eq!((c.hour_of_day, c.day_of_month, c.month, c.is_holiday), (0, 1, 1, true));
    // 2015-01-01 was a Thursday.
    assert_eq!(c.day_of_week, 3);
    // Summer time: 22:00Z on 2015-08-19 is midnight of the 20th.
    let t = Utc.with_ymd_and_hms(2015, 8, 19, 22, 0, 0).unwrap();
    let c = calendar_features(t, &cal);
    assert_eq!((c.hour_of_day, c.day_of_month, c.is_holiday), (0, 20, true));
}

fn mask() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(
        prop_oneof![1 => Just(None), 5 => (1000.0f64..9000.0).prop_map(Some)],
        (WEEK_HOURS as usize)..(4 * WEEK_HOURS as usize),
    )
}

fn no_absent_input(row: &FeatureRow) -> bool {
    let values = row.values();
    values.len() == row.kind.feature_names().len() && values.iter().all(|v| v.is_finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drop_rule_is_sound(actuals in mask(), horizon in 1u8..=24) {
        let s = series(&actuals);
        let index = LoadIndex::new(&s).unwrap();
        let cal = hu_calendar();
        let rows = collect_training_rows(&index, &cal, horizon).unwrap();
        prop_assert_eq!(rows.candidates, actuals.iter().filter(|a| a.is_some()).count());
        prop_assert_eq!(rows.basic.len(), rows.candidates);
        for r in &rows.basic {
            prop_assert_eq!(r.kind, ModelKind::Basic);
            prop_assert!(no_absent_input(r));
        }
        let kept: Vec<DateTime<Utc>> = rows.advanced.iter().map(|r| r.target_time).collect();
        for r in &rows.basic {
            let t = r.target_time;
            let week = index.actual_at(t - Duration::hours(WEEK_HOURS));
            let last = index.actual_at(t - Duration::hours(i64::from(horizon)));
            let both = week.is_some() && last.is_some();
            prop_assert_eq!(kept.contains(&t), both, "hour {}", t);
        }
        for (r, y) in rows.advanced.iter().zip(&rows.advanced_targets) {
            prop_assert!(no_absent_input(r));
            prop_assert_eq!(Some(*y), index.actual_at(r.target_time));
        }
    }

    #[test]
    fn inference_matches_training_on_covered_hours(actuals in mask(), horizon in 1u8..=24) {
        let s = series(&actuals);
        let index = LoadIndex::new(&s).unwrap();
        let cal = hu_calendar();
        let rows = collect_training_rows(&index, &cal, horizon).unwrap();
        for r in &rows.advanced {
            let inferred = inference_row(&index, &cal, r.target_time, horizon).unwrap();
            prop_assert_eq!(&inferred, r);
            prop_assert_eq!(inferred.values(), r.values());
        }
    }

    #[test]
    fn inference_rows_never_carry_absent_inputs(actuals in mask(), horizon in 1u8..=24, ahead in -200i64..200) {
        let s = series(&actuals);
        let index = LoadIndex::new(&s).unwrap();
        let cal = hu_calendar();
        let t = start() + Duration::hours(actuals.len() as i64 + ahead);
        let row = inference_row(&index, &cal, t, horizon).unwrap();
        prop_assert!(no_absent_input(&row));
        match row.kind {
            ModelKind::Advanced => prop_assert!(row.lag_week.is_some() && row.lag_last_known.is_some()),
            ModelKind::Basic => prop_assert!(row.lag_week.is_none() && row.lag_last_known.is_none()),
        }
    }
}
