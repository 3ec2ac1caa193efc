//! Forecast accuracy: MAPE, pinball loss, error distributions, and the
//! per-month and per-horizon tables built from them.

mod tables;

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{ForecastRecord, DECILES};
use crate::error::{Error, Result};
use crate::ingestion::{CountryCode, LoadSeries};
use crate::quality::Period;
use crate::stats;

pub use tables::{
    benchmark_compare, horizon_table, CellStatus, Comparison, ComparisonRow, HorizonTable, MonthlyTable, TableRow,
};

/// Mean absolute percentage error in percent. Pairs whose actual is zero are
/// left out; an error is returned when nothing is left.
pub fn mape(forecasts: &[f64], actuals: &[f64]) -> Result<f64> {
    if forecasts.len() != actuals.len() {
        return Err(Error::invalid(format!(
            "{} forecasts but {} actuals",
            forecasts.len(),
            actuals.len()
        )));
    }
    mape_pairs(forecasts.iter().copied().zip(actuals.iter().copied().map(Some)))
}

/// MAPE over (forecast, actual) pairs; absent or zero actuals are skipped.
pub fn mape_pairs(pairs: impl IntoIterator<Item = (f64, Option<f64>)>) -> Result<f64> {
    let errors = absolute_percentage_errors(pairs);
    if errors.is_empty() {
        return Err(Error::invalid("no forecast has a usable (present, nonzero) actual"));
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// `100 * |forecast - actual| / |actual|` for each usable pair.
pub fn absolute_percentage_errors(pairs: impl IntoIterator<Item = (f64, Option<f64>)>) -> Vec<f64> {
    pairs
        .into_iter()
        .filter_map(|(f, a)| match a {
            Some(a) if a != 0.0 => Some(100.0 * (f - a).abs() / a.abs()),
            _ => None,
        })
        .collect()
}

/// Pinball loss of the `percent`-th quantile forecast `q` against `actual`.
pub fn pinball_loss(percent: u8, q: f64, actual: f64) -> Result<f64> {
    if !(1..=99).contains(&percent) {
        return Err(Error::invalid(format!("quantile must be in 1..=99, got {percent}")));
    }
    if !q.is_finite() || !actual.is_finite() {
        return Err(Error::invalid("pinball loss needs finite values"));
    }
    let a = f64::from(percent) / 100.0;
    Ok(if actual < q { (1.0 - a) * (q - actual) } else { a * (actual - q) })
}

/// Average pinball loss over the quantiles present in `forecasts`.
pub fn pinball(forecasts: &BTreeMap<u8, f64>, actual: f64) -> Result<f64> {
    if forecasts.is_empty() {
        return Err(Error::invalid("no quantile forecasts given"));
    }
    let mut total = 0.0;
    for (&a, &q) in forecasts {
        total += pinball_loss(a, q, actual)?;
    }
    Ok(total / forecasts.len() as f64)
}

/// Running pinball loss over many observations.
#[derive(Clone, Debug, Default)]
pub struct PinballAccumulator {
    per_quantile: BTreeMap<u8, (f64, usize)>,
}

impl PinballAccumulator {
    pub fn add(&mut self, forecasts: &BTreeMap<u8, f64>, actual: f64) -> Result<()> {
        for (&a, &q) in forecasts {
            let loss = pinball_loss(a, q, actual)?;
            let slot = self.per_quantile.entry(a).or_default();
            slot.0 += loss;
            slot.1 += 1;
        }
        Ok(())
    }

    pub fn summary(&self) -> Option<PinballSummary> {
        if self.per_quantile.is_empty() {
            return None;
        }
        let per_quantile: BTreeMap<u8, f64> = self
            .per_quantile
            .iter()
            .map(|(&a, &(sum, n))| (a, sum / n as f64))
            .collect();
        let (sum, n) = self
            .per_quantile
            .values()
            .fold((0.0, 0), |(s, c), &(sum, n)| (s + sum, c + n));
        Some(PinballSummary {
            average: sum / n as f64,
            observations: self.per_quantile.values().map(|v| v.1).max().unwrap_or(0),
            per_quantile,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinballSummary {
    /// Mean over every (quantile, observation) pair, in MW.
    pub average: f64,
    pub observations: usize,
    pub per_quantile: BTreeMap<u8, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

pub fn error_stats(values: &[f64]) -> Result<ErrorStats> {
    let mean = stats::mean(values).ok_or_else(|| Error::invalid("no errors to summarize"))?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let std = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ErrorStats {
        count: n,
        mean,
        std,
        min: sorted[0],
        p25: stats::percentile_sorted(&sorted, 0.25),
        p50: stats::percentile_sorted(&sorted, 0.5),
        p75: stats::percentile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: f64,
    pub count: usize,
}

/// Counts of `values` in bins `[k*width, (k+1)*width)`, from the lowest to
/// the highest occupied bin with empty bins included.
pub fn histogram(values: &[f64], width: f64) -> Result<Vec<HistogramBin>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid(format!("bin width must be positive, got {width}")));
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values.iter().filter(|v| v.is_finite()) {
        *counts.entry((v / width).floor() as i64).or_default() += 1;
    }
    let (Some(&lo), Some(&hi)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Ok(Vec::new());
    };
    Ok((lo..=hi)
        .map(|k| HistogramBin {
            start: k as f64 * width,
            count: counts.get(&k).copied().unwrap_or(0),
        })
        .collect())
}

/// Accuracy of stored forecasts for one country.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub country: CountryCode,
    pub period: Period,
    /// Only forecasts at this horizon were scored; all when absent.
    pub horizon: Option<u8>,
    pub forecasts: usize,
    pub mape: f64,
    /// MAPE per calendar month (UTC), keyed `YYYY-MM`.
    pub monthly_mape: BTreeMap<String, f64>,
    /// MAPE of the published day-ahead forecast over the same hours.
    pub benchmark_mape: Option<f64>,
    pub benchmark_monthly_mape: BTreeMap<String, f64>,
    pub error_stats: ErrorStats,
    pub horizon_mape: BTreeMap<u8, f64>,
    pub pinball: Option<PinballSummary>,
    pub histogram: Vec<HistogramBin>,
}

/// Width of the error histogram bins, in percentage points.
pub const HISTOGRAM_BIN_WIDTH: f64 = 1.0;

fn month_key(t: DateTime<Utc>) -> String {
    format!("{:04}-{:02}", t.year(), t.month())
}

/// Scores `records` whose target lies in `period` against the series'
/// actual loads.
pub fn evaluate(
    country: &CountryCode,
    records: &[ForecastRecord],
    series: &LoadSeries,
    period: Period,
    horizon: Option<u8>,
) -> Result<EvaluationResult> {
    let mut actuals: BTreeMap<DateTime<Utc>, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for obs in &series.observations {
        actuals.insert(obs.interval_start.with_timezone(&Utc), (obs.actual_load, obs.day_ahead_forecast));
    }
    let selected: Vec<&ForecastRecord> = records
        .iter()
        .filter(|r| &r.country == country)
        .filter(|r| r.target_time >= period.start && r.target_time < period.end)
        .filter(|r| horizon.is_none_or(|h| r.horizon == h))
        .collect();

    let mut all = Vec::new();
    let mut monthly: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut by_horizon: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    let mut pinball = PinballAccumulator::default();
    for r in &selected {
        let Some(&(Some(actual), _)) = actuals.get(&r.target_time) else { continue };
        let Some(&ape) = absolute_percentage_errors([(r.point, Some(actual))]).first() else { continue };
        all.push(ape);
        monthly.entry(month_key(r.target_time)).or_default().push(ape);
        by_horizon.entry(r.horizon).or_default().push(ape);
        if let Some(d) = &r.deciles {
            let q: BTreeMap<u8, f64> = DECILES.iter().copied().zip(d.iter().copied()).collect();
            pinball.add(&q, actual)?;
        }
    }
    if all.is_empty() {
        return Err(Error::InsufficientData {
            message: format!("no forecast for {country} in the period has a usable actual load"),
            candidates: selected.len(),
            usable: 0,
        });
    }

    let mut bench_all = Vec::new();
    let mut bench_monthly: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (t, (actual, forecast)) in &actuals {
        if *t < period.start || *t >= period.end {
            continue;
        }
        if let (Some(f), Some(_)) = (forecast, actual) {
            if let Some(&ape) = absolute_percentage_errors([(*f, *actual)]).first() {
                bench_all.push(ape);
                bench_monthly.entry(month_key(*t)).or_default().push(ape);
            }
        }
    }

    let avg = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(EvaluationResult {
        country: country.clone(),
        period,
        horizon,
        forecasts: all.len(),
        mape: avg(&all),
        monthly_mape: monthly.iter().map(|(k, v)| (k.clone(), avg(v))).collect(),
        benchmark_mape: (!bench_all.is_empty()).then(|| avg(&bench_all)),
        benchmark_monthly_mape: bench_monthly.iter().map(|(k, v)| (k.clone(), avg(v))).collect(),
        error_stats: error_stats(&all)?,
        horizon_mape: by_horizon.iter().map(|(k, v)| (*k, avg(v))).collect(),
        pinball: pinball.summary(),
        histogram: histogram(&all, HISTOGRAM_BIN_WIDTH)?,
    })
}

/// Plain-text rendering of an evaluation.
pub fn render_evaluation(result: &EvaluationResult) -> String {
    let mut out = String::new();
    let horizon = result.horizon.map_or("all".to_string(), |h| h.to_string());
    out.push_str(&format!(
        "{} ({}), horizon {horizon}, {} forecasts\n",
        result.country.name(),
        result.country,
        result.forecasts
    ));
    out.push_str(&format!("MAPE {:.3}%", result.mape));
    if let Some(b) = result.benchmark_mape {
        out.push_str(&format!(", benchmark {b:.3}%"));
    }
    out.push_str("\n\n");

    let months: Vec<&String> = result.monthly_mape.keys().chain(result.benchmark_monthly_mape.keys()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    out.push_str(&format!("{:<8}  {:>8}  {:>9}\n", "Month", "Model", "Benchmark"));
    for m in months {
        let cell = |v: Option<&f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        out.push_str(&format!(
            "{:<8}  {:>8}  {:>9}\n",
            m,
            cell(result.monthly_mape.get(m)),
            cell(result.benchmark_monthly_mape.get(m))
        ));
    }
    let s = &result.error_stats;
    out.push_str(&format!(
        "\n{:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n{:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}\n",
        "mean", "std", "min", "25%", "50%", "75%", "max", s.mean, s.std, s.min, s.p25, s.p50, s.p75, s.max
    ));
    if result.horizon_mape.len() > 1 {
        out.push_str(&format!("\n{:>7}  {:>6}\n", "Horizon", "MAPE"));
        for (h, v) in &result.horizon_mape {
            out.push_str(&format!("{h:>7}  {v:>6.2}\n"));
        }
    }
    if let Some(p) = &result.pinball {
        out.push_str(&format!("\nAverage pinball loss {:.3} MW over {} observations\n", p.average, p.observations));
        for (a, v) in &p.per_quantile {
            out.push_str(&format!("  q{a:<2} {v:.3}\n"));
        }
    }
    out
}
