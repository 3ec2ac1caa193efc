use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::absolute_percentage_errors;
use crate::engine::ForecastRecord;
use crate::error::{Error, Result};
use crate::ingestion::CountryCode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub cells: Vec<Option<f64>>,
}

/// MAPE values laid out as rows (countries) by columns (months). A missing
/// cell means no value could be computed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonthlyTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl MonthlyTable {
    /// Reads `label,<col>,<col>,...` CSV; an empty cell is a missing value.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?
            .clone();
        let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { row: i + 1, message: e.to_string() })?;
            let label = rec.get(0).unwrap_or_default().to_string();
            let cells = rec
                .iter()
                .skip(1)
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                            row: i + 1,
                            message: format!("not a number: {c:?}"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(TableRow { label, cells });
        }
        Ok(MonthlyTable { columns, rows })
    }

    pub fn get(&self, label: &str, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.iter().find(|r| r.label == label)?.cells.get(c).copied().flatten()
    }

    pub fn render(&self, decimals: usize) -> String {
        let label_width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(7);
        let mut out = format!("{:<label_width$}", "");
        for c in &self.columns {
            out.push_str(&format!("  {c:>8}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<label_width$}", r.label));
            for cell in &r.cells {
                let text = cell.map_or(String::new(), |v| format!("{v:.decimals$}"));
                out.push_str(&format!("  {text:>8}"));
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// The model's error is lower.
    Model,
    /// The benchmark's error is lower.
    Benchmark,
    Tie,
    /// One of the two values is missing.
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub column: String,
    pub model: Option<f64>,
    pub benchmark: Option<f64>,
    /// model minus benchmark, in percentage points.
    pub delta: Option<f64>,
    pub status: CellStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Pairs every model cell with the benchmark cell of the same row label and
/// column.
pub fn benchmark_compare(model: &MonthlyTable, benchmark: &MonthlyTable) -> Comparison {
    let mut rows = Vec::new();
    for r in &model.rows {
        for (i, column) in model.columns.iter().enumerate() {
            let m = r.cells.get(i).copied().flatten();
            let b = benchmark.get(&r.label, column);
            let (delta, status) = match (m, b) {
                (Some(m), Some(b)) => {
                    let d = m - b;
                    let status = if d < 0.0 {
                        CellStatus::Model
                    } else if d > 0.0 {
                        CellStatus::Benchmark
                    } else {
                        CellStatus::Tie
                    };
                    (Some(d), status)
                }
                _ => (None, CellStatus::Unavailable),
            };
            rows.push(ComparisonRow {
                label: r.label.clone(),
                column: column.clone(),
                model: m,
                benchmark: b,
                delta,
                status,
            });
        }
    }
    Comparison { rows }
}

impl Comparison {
    pub fn get(&self, label: &str, column: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label && r.column == column)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<8}  {:<6}  {:>8}  {:>9}  {:>8}  {}\n",
            "Country", "Month", "Model", "Benchmark", "Delta", "Result"
        );
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        for r in &self.rows {
            let status = match r.status {
                CellStatus::Model => "model",
                CellStatus::Benchmark => "benchmark",
                CellStatus::Tie => "tie",
                CellStatus::Unavailable => "unavailable",
            };
            out.push_str(&format!(
                "{:<8}  {:<6}  {:>8}  {:>9}  {:>8}  {}\n",
                r.label,
                r.column,
                cell(r.model),
                cell(r.benchmark),
                cell(r.delta),
                status
            ));
        }
        out
    }
}

/// MAPE by horizon (rows) and country (columns).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HorizonTable {
    pub countries: Vec<CountryCode>,
    pub rows: BTreeMap<u8, Vec<Option<f64>>>,
}

/// Groups forecast errors by (horizon, country). `actuals` maps (country,
/// target hour) to the observed load.
pub fn horizon_table(records: &[ForecastRecord], actuals: &HashMap<(CountryCode, DateTime<Utc>), f64>) -> HorizonTable {
    let mut groups: BTreeMap<(u8, CountryCode), Vec<f64>> = BTreeMap::new();
    let mut countries = BTreeSet::new();
    let mut horizons = BTreeSet::new();
    for r in records {
        countries.insert(r.country.clone());
        horizons.insert(r.horizon);
        let actual = actuals.get(&(r.country.clone(), r.target_time)).copied();
        if let Some(&e) = absolute_percentage_errors([(r.point, actual)]).first() {
            groups.entry((r.horizon, r.country.clone())).or_default().push(e);
        }
    }
    let countries: Vec<CountryCode> = countries.into_iter().collect();
    let rows = horizons
        .into_iter()
        .map(|h| {
            let cells = countries
                .iter()
                .map(|c| {
                    groups
                        .get(&(h, c.clone()))
                        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect();
            (h, cells)
        })
        .collect();
    HorizonTable { countries, rows }
}

impl HorizonTable {
    pub fn get(&self, horizon: u8, country: &CountryCode) -> Option<f64> {
        let c = self.countries.iter().position(|x| x == country)?;
        self.rows.get(&horizon)?.get(c).copied().flatten()
    }

    pub fn render(&self) -> String {
        let width = self.countries.iter().map(|c| c.as_str().len()).max().unwrap_or(0).max(6);
        let mut out = format!("{:>7}", "Horizon");
        for c in &self.countries {
            out.push_str(&format!("  {:>width$}", c.as_str()));
        }
        out.push('\n');
        for (h, cells) in &self.rows {
            out.push_str(&format!("{h:>7}"));
            for cell in cells {
                let text = cell.map_or("-".to_string(), |v| format!("{v:.2}"));
                out.push_str(&format!("  {text:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ModelKind;
    use chrono::{Duration, TimeZone};

    #[test]
    fn compare_identical_tables() {
        let t = MonthlyTable::parse_csv("country,Mar,Apr\nCZ,3.409,2.958\nIT,4.279,\n").unwrap();
        let c = benchmark_compare(&t, &t);
        assert_eq!(c.rows.len(), 4);
        assert_eq!(c.get("CZ", "Mar").unwrap().delta, Some(0.0));
        assert_eq!(c.get("IT", "Apr").unwrap().status, CellStatus::Unavailable);
    }

    #[test]
    fn monthly_render_blank_cells() {
        let t = MonthlyTable::parse_csv("country,Mar,Apr\nIT,4.279,\n").unwrap();
        assert_eq!(t.render(3), "              Mar       Apr\nIT          4.279\n");
        assert!(MonthlyTable::parse_csv("country,Mar\nCZ,abc\n").is_err());
    }

    #[test]
    fn horizon_rows() {
        let c = CountryCode::new("HU").unwrap();
        let t0 = Utc.with_ymd_and_hms(2015, 3, 2, 0, 0, 0).unwrap();
        let rec = |h: u8, point: f64| ForecastRecord {
            country: c.clone(),
            issued_at: t0 - Duration::hours(i64::from(h)),
            target_time: t0,
            horizon: h,
            kind: ModelKind::Advanced,
            point,
            deciles: None,
            model_trained_at: t0,
        };
        let actuals: HashMap<_, _> = [((c.clone(), t0), 100.0)].into();
        let perfect = horizon_table(&[rec(1, 100.0), rec(24, 100.0)], &actuals);
        assert_eq!(perfect.rows.len(), 2);
        assert_eq!(perfect.get(24, &c), Some(0.0));
        let off = horizon_table(&[rec(1, 90.0)], &actuals);
        assert_eq!(off.render(), "Horizon      HU\n      1   10.00\n");
    }
}
