use std::collections::{BTreeMap, HashMap};

use chrono::{Duration, TimeZone, Utc};
use loadcast_core::engine::ForecastRecord;
use loadcast_core::evaluation::{
    benchmark_compare, error_stats, evaluate, horizon_table, mape, pinball, pinball_loss, CellStatus, MonthlyTable,
};
use loadcast_core::features::ModelKind;
use loadcast_core::gbrt::{initial_prediction, Loss};
use loadcast_core::ingestion::{CountryCode, Frequency, LoadObservation, LoadSeries, SourceKind};
use loadcast_core::quality::Period;
use loadcast_testkit::fixtures::{published_error_stats, BENCHMARK_MAPE_BY_MONTH, MODEL_MAPE_BY_MONTH};
use loadcast_testkit::oracle::oracle_percentile;
use proptest::prelude::*;

#[test]
fn pinball_reference_values() {
    assert!((pinball_loss(50, 10.0, 20.0).unwrap() - 5.0).abs() < 1e-12);
    assert_eq!(pinball_loss(37, 812.5, 812.5).unwrap(), 0.0);
    assert!((pinball_loss(10, 5.0, 2.0).unwrap() - 2.7).abs() < 1e-12);
}

#[test]
fn mape_reference_values() {
    assert!((mape(&[95.0, 210.0], &[100.0, 200.0]).unwrap() - 5.0).abs() < 1e-12);
    assert_eq!(mape(&[0.0], &[100.0]).unwrap(), 100.0);
}

#[test]
fn replayed_tables_give_the_czech_march_delta() {
    let model = MonthlyTable::parse_csv(MODEL_MAPE_BY_MONTH).unwrap();
    let bench = MonthlyTable::parse_csv(BENCHMARK_MAPE_BY_MONTH).unwrap();
    let cmp = benchmark_compare(&model, &bench);
    let cz = cmp.get("CZ", "Mar").unwrap();
    assert!((cz.delta.unwrap() - -2.020).abs() < 1e-9);
    assert_eq!(cz.status, CellStatus::Model);
    for month in ["Aug", "Sep", "Oct"] {
        assert_eq!(cmp.get("IT", month).unwrap().status, CellStatus::Unavailable);
    }
    assert_eq!(cmp.get("IT", "Jul").unwrap().status, CellStatus::Benchmark);
    assert_eq!(cmp.render(), benchmark_compare(&model, &bench).render());
}

#[test]
fn identical_tables_have_zero_deltas() {
    let model = MonthlyTable::parse_csv(MODEL_MAPE_BY_MONTH).unwrap();
    let cmp = benchmark_compare(&model, &model);
    for row in &cmp.rows {
        match row.delta {
            Some(d) => assert_eq!(d, 0.0),
            None => assert_eq!(row.status, CellStatus::Unavailable),
        }
    }
}

#[test]
fn published_error_distributions_are_right_skewed() {
    let stats = published_error_stats();
    assert_eq!(stats.len(), 10);
    for s in &stats {
        assert!(s.min <= s.p25 && s.p25 <= s.p50 && s.p50 <= s.p75 && s.p75 <= s.max, "{}", s.country);
        assert!(s.mean > s.p50, "{} mean {} not above median {}", s.country, s.mean, s.p50);
    }
    let de = stats.iter().find(|s| s.country == "DE").unwrap();
    assert_eq!((de.mean, de.p50), (5.17, 2.747));
}

fn hourly_series(values: &[Option<f64>]) -> LoadSeries {
    let start = Utc.with_ymd_and_hms(2015, 3, 31, 22, 0, 0).unwrap();
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = start + Duration::hours(i as i64);
            LoadObservation {
                interval_start: t.fixed_offset(),
                interval_end: (t + Duration::hours(1)).fixed_offset(),
                day_ahead_forecast: v.map(|v| v * 1.1),
                actual_load: *v,
            }
        })
        .collect();
    LoadSeries::new(CountryCode::new("HU").unwrap(), Frequency::Hourly, SourceKind::TotalLoad, rows).unwrap()
}

#[test]
fn evaluate_splits_months_and_skips_unusable_actuals() {
    let series = hourly_series(&[Some(100.0), Some(200.0), Some(0.0), None, Some(400.0)]);
    let hu = CountryCode::new("HU").unwrap();
    let issued = Utc.with_ymd_and_hms(2015, 3, 31, 21, 0, 0).unwrap();
    let records: Vec<ForecastRecord> = series
        .observations
        .iter()
        .enumerate()
        .map(|(i, o)| ForecastRecord {
            country: hu.clone(),
            issued_at: issued,
            target_time: o.interval_start.with_timezone(&Utc),
            horizon: (i + 1) as u8,
            kind: ModelKind::Advanced,
            point: [110.0, 220.0, 5.0, 5.0, 440.0][i],
            deciles: None,
            model_trained_at: issued,
        })
        .collect();
    let period = Period::new(issued, issued + Duration::days(1)).unwrap();
    let r = evaluate(&hu, &records, &series, period, None).unwrap();
    // Usable hours: 22Z and 23Z in March (10% and 10%), 02Z in April
    // (440 vs 400 is 10%).
    assert_eq!(r.forecasts, 3);
    assert!((r.mape - 10.0).abs() < 1e-9);
    assert_eq!(r.monthly_mape.keys().cloned().collect::<Vec<_>>(), vec!["2015-03", "2015-04"]);
    assert!((r.benchmark_mape.unwrap() - 10.0).abs() < 1e-9);
    assert_eq!(r.horizon_mape.keys().copied().collect::<Vec<_>>(), vec![1, 2, 5]);
    let h5 = evaluate(&hu, &records, &series, period, Some(5)).unwrap();
    assert_eq!(h5.forecasts, 1);
}

#[test]
fn horizon_table_has_one_row_per_horizon() {
    let hu = CountryCode::new("HU").unwrap();
    let t = Utc.with_ymd_and_hms(2015, 5, 1, 12, 0, 0).unwrap();
    let rec = |h: u8, point: f64| ForecastRecord {
        country: hu.clone(),
        issued_at: t - Duration::hours(i64::from(h)),
        target_time: t,
        horizon: h,
        kind: ModelKind::Advanced,
        point,
        deciles: None,
        model_trained_at: t,
    };
    let actuals: HashMap<_, _> = [((hu.clone(), t), 100.0)].into_iter().collect();
    let table = horizon_table(&[rec(1, 100.0), rec(24, 103.0)], &actuals);
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.get(1, &hu), Some(0.0));
    assert!((table.get(24, &hu).unwrap() - 3.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pinball_at_the_median_is_half_the_absolute_error(q in -1e5f64..1e5, y in -1e5f64..1e5) {
        let l = pinball_loss(50, q, y).unwrap();
        prop_assert!((l - 0.5 * (y - q).abs()).abs() <= 1e-9 * (1.0 + (y - q).abs()));
    }

    #[test]
    fn pinball_is_positive_and_zero_only_on_a_hit(a in 1u8..=99, q in -1e4f64..1e4, y in -1e4f64..1e4) {
        let l = pinball_loss(a, q, y).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert_eq!(l == 0.0, q == y);
        prop_assert_eq!(pinball_loss(a, y, y).unwrap(), 0.0);
    }

    #[test]
    fn averaged_pinball_is_the_mean_over_present_quantiles(
        qs in prop::collection::btree_map(1u8..=99, 0.0f64..1000.0, 1..9),
        y in 0.0f64..1000.0,
    ) {
        let expected: f64 = qs.iter().map(|(&a, &q)| pinball_loss(a, q, y).unwrap()).sum::<f64>() / qs.len() as f64;
        prop_assert!((pinball(&qs, y).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn mape_is_scale_invariant(
        pairs in prop::collection::vec((1.0f64..1e4, 1.0f64..1e4), 1..50),
        c in prop_oneof![Just(2.0), Just(0.5), 1e-3f64..1e3],
    ) {
        let (f, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = mape(&f, &a).unwrap();
        let fs: Vec<f64> = f.iter().map(|v| v * c).collect();
        let as_: Vec<f64> = a.iter().map(|v| v * c).collect();
        let scaled = mape(&fs, &as_).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn evaluation_and_learner_share_one_percentile(values in prop::collection::vec(-1e4f64..1e4, 1..64)) {
        let stats = error_stats(&values).unwrap();
        let at = |p: u8| initial_prediction(&values, Loss::quantile(p)).unwrap();
        prop_assert_eq!(stats.p25, at(25));
        prop_assert_eq!(stats.p50, at(50));
        prop_assert_eq!(stats.p75, at(75));
        prop_assert!((stats.p50 - oracle_percentile(&values, 0.5)).abs() < 1e-9);
        prop_assert!(stats.min <= stats.p25 && stats.p25 <= stats.p50 && stats.p50 <= stats.p75 && stats.p75 <= stats.max);
    }
}

#[test]
fn quantile_map_keys_are_validated() {
    let bad: BTreeMap<u8, f64> = [(100u8, 1.0)].into_iter().collect();
    assert!(pinball(&bad, 1.0).is_err());
}
