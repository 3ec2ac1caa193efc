//! Published monthly and distribution tables, kept as CSV for replay tests.

/// Model MAPE by country and month, March to October 2015. Italy has no
/// values from August on.
pub const MODEL_MAPE_BY_MONTH: &str = include_str!("../fixtures/model_mape_by_month.csv");

/// MAPE of the TSO day-ahead forecasts over the same cells.
pub const BENCHMARK_MAPE_BY_MONTH: &str = include_str!("../fixtures/benchmark_mape_by_month.csv");

/// Absolute percentage error statistics by country.
pub const ERROR_STATS_BY_COUNTRY: &str = include_str!("../fixtures/error_stats_by_country.csv");

/// One row of [`ERROR_STATS_BY_COUNTRY`].
#[derive(Clone, Debug, PartialEq)]
pub struct PublishedStats {
    pub country: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

pub fn published_error_stats() -> Vec<PublishedStats> {
    ERROR_STATS_BY_COUNTRY
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let n = |i: usize| f[i].parse::<f64>().expect("numeric fixture cell");
            PublishedStats {
                country: f[0].to_string(),
                mean: n(1),
                std: n(2),
                min: n(3),
                p25: n(4),
                p50: n(5),
                p75: n(6),
                max: n(7),
            }
        })
        .collect()
}
