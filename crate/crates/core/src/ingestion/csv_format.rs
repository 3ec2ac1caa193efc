use std::collections::HashMap;

use chrono::{DateTime, FixedOffset, Utc};

use super::{CountryCode, Frequency, LoadObservation, LoadSeries, SourceKind};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["interval_start", "interval_end", "day_ahead_forecast", "actual_load"];

/// Parses a load export. Rows are numbered from 1 (the header is row 0) in
/// every error.
pub fn parse_load_csv(bytes: &[u8], country: &CountryCode) -> Result<LoadSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(0, e.to_string()))?,
        None => return Err(parse_err(0, "empty input")),
    };
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_err(
            0,
            format!("expected header `{}`", CSV_HEADER.join(",")),
        ));
    }

    let mut rows: Vec<(usize, LoadObservation)> = Vec::new();
    let mut length: Option<(usize, i64)> = None;
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| parse_err(row, e.to_string()))?;
        if rec.len() != 4 {
            return Err(parse_err(row, format!("expected 4 fields, found {}", rec.len())));
        }
        let interval_start = parse_timestamp(&rec[0]).map_err(|m| parse_err(row, m))?;
        let interval_end = parse_timestamp(&rec[1]).map_err(|m| parse_err(row, m))?;
        if interval_end <= interval_start {
            return Err(parse_err(row, "interval end is not after its start"));
        }
        let span = interval_end - interval_start;
        let minutes = span.num_minutes();
        if span.num_seconds() % 60 != 0 || ![15, 30, 60].contains(&minutes) {
            return Err(parse_err(row, format!("unsupported interval length of {span}")));
        }
        match length {
            None => length = Some((row, minutes)),
            Some((first, m)) if m != minutes => {
                return Err(parse_err(
                    row,
                    format!("mixed interval lengths: {minutes} minutes here, {m} minutes at row {first}"),
                ))
            }
            Some(_) => {}
        }
        let day_ahead_forecast = parse_value(&rec[2]).map_err(|m| parse_err(row, m))?;
        let actual_load = parse_value(&rec[3]).map_err(|m| parse_err(row, m))?;
        rows.push((
            row,
            LoadObservation {
                interval_start,
                interval_end,
                day_ahead_forecast,
                actual_load,
            },
        ));
    }

    let Some((_, minutes)) = length else {
        return Err(parse_err(1, "no data rows"));
    };

    let mut seen: HashMap<DateTime<Utc>, usize> = HashMap::with_capacity(rows.len());
    for (row, obs) in &rows {
        if let Some(first) = seen.insert(obs.interval_start.with_timezone(&Utc), *row) {
            return Err(parse_err(*row, format!("duplicate interval, first seen at row {first}")));
        }
    }
    rows.sort_by_key(|(_, o)| o.interval_start);
    for pair in rows.windows(2) {
        if pair[1].1.interval_start < pair[0].1.interval_end {
            return Err(parse_err(
                pair[1].0,
                format!("interval overlaps the one at row {}", pair[0].0),
            ));
        }
    }

    LoadSeries::new(
        country.clone(),
        Frequency::from_minutes(minutes)?,
        SourceKind::TotalLoad,
        rows.into_iter().map(|(_, o)| o).collect(),
    )
}

/// Writes the series back in the import format.
pub fn to_csv(series: &LoadSeries) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for obs in &series.observations {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_timestamp(&obs.interval_start),
            format_timestamp(&obs.interval_end),
            format_value(obs.day_ahead_forecast),
            format_value(obs.actual_load),
        ));
    }
    out
}

fn parse_err(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

fn parse_timestamp(raw: &str) -> std::result::Result<DateTime<FixedOffset>, String> {
    let s = raw.trim();
    let normalized;
    let s = match s.strip_suffix('Z') {
        Some(head) => {
            normalized = format!("{head}+00:00");
            normalized.as_str()
        }
        None => s,
    };
    ["%Y-%m-%dT%H:%M%:z", "%Y-%m-%dT%H:%M:%S%:z", "%Y-%m-%dT%H:%M:%S%.f%:z"]
        .iter()
        .find_map(|fmt| DateTime::parse_from_str(s, fmt).ok())
        .ok_or_else(|| format!("malformed timestamp {raw:?}"))
}

fn format_timestamp(ts: &DateTime<FixedOffset>) -> String {
    if ts.timestamp_subsec_nanos() == 0 && ts.timestamp() % 60 == 0 {
        ts.format("%Y-%m-%dT%H:%M%:z").to_string()
    } else {
        ts.to_rfc3339()
    }
}

fn parse_value(raw: &str) -> std::result::Result<Option<f64>, String> {
    let s = raw.trim();
    if s.is_empty() || s == "N/A" {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("malformed value {raw:?}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value {raw:?}"));
    }
    if v < 0.0 {
        return Err(format!("negative value {raw:?}"));
    }
    Ok(Some(v))
}

fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "N/A".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hu() -> CountryCode {
        CountryCode::new("10YHU-MAVIR----U").unwrap()
    }

    fn csv(rows: &[&str]) -> Vec<u8> {
        let mut s = CSV_HEADER.join(",");
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s.into_bytes()
    }

    #[test]
    fn parses_one_hourly_row() {
        let series = parse_load_csv(&csv(&["2015-03-01T00:00+01:00,2015-03-01T01:00+01:00,6100,6000"]), &hu()).unwrap();
        assert_eq!(series.frequency, Frequency::Hourly);
        assert_eq!(series.len(), 1);
        let o = &series.observations[0];
        assert_eq!(o.day_ahead_forecast, Some(6100.0));
        assert_eq!(o.actual_load, Some(6000.0));
        assert_eq!(o.interval_start.offset().local_minus_utc(), 3600);
    }

    #[test]
    fn na_empty_and_zero_cells() {
        let series = parse_load_csv(
            &csv(&[
                "2015-03-01T00:00+01:00,2015-03-01T01:00+01:00,N/A,0",
                "2015-03-01T01:00+01:00,2015-03-01T02:00+01:00,,5",
            ]),
            &hu(),
        )
        .unwrap();
        assert_eq!(series.observations[0].day_ahead_forecast, None);
        assert_eq!(series.observations[0].actual_load, Some(0.0));
        assert_eq!(series.observations[1].day_ahead_forecast, None);
    }

    #[test]
    fn rows_are_sorted() {
        let series = parse_load_csv(
            &csv(&[
                "2015-03-01T00:15+01:00,2015-03-01T00:30+01:00,1,1",
                "2015-03-01T00:00+01:00,2015-03-01T00:15+01:00,2,2",
            ]),
            &hu(),
        )
        .unwrap();
        assert_eq!(series.frequency, Frequency::QuarterHourly);
        assert_eq!(series.observations[0].actual_load, Some(2.0));
    }

    fn row_of(err: Error) -> usize {
        match err {
            Error::Parse { row, .. } => row,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_row() {
        let ok = "2015-03-01T00:00+01:00,2015-03-01T01:00+01:00,1,1";
        let cases: Vec<(Vec<&str>, usize)> = vec![
            (vec![ok, "2015-03-01T01:00+01:00,2015-03-01T02:00+01:00,1,-4"], 2),
            (vec![ok, "yesterday,2015-03-01T02:00+01:00,1,1"], 2),
            (vec![ok, "2015-03-01T01:00+01:00,2015-03-01T01:15+01:00,1,1"], 2),
            (vec![ok, ok], 2),
            (vec![ok, "2015-03-01T01:00+01:00,2015-03-01T02:00+01:00,abc,1"], 2),
            (vec!["2015-03-01T01:00+01:00,2015-03-01T00:00+01:00,1,1"], 1),
            (vec![ok, "2015-03-01T01:00+01:00,2015-03-01T02:00+01:00,1"], 2),
            (vec!["2015-03-01T00:00+01:00,2015-03-01T00:45+01:00,1,1"], 1),
        ];
        for (rows, expected) in cases {
            let err = parse_load_csv(&csv(&rows), &hu()).unwrap_err();
            assert_eq!(row_of(err), expected, "{rows:?}");
        }
    }

    #[test]
    fn header_must_match_exactly() {
        let body = b"start,end,forecast,actual\n2015-03-01T00:00+01:00,2015-03-01T01:00+01:00,1,1";
        assert_eq!(row_of(parse_load_csv(body, &hu()).unwrap_err()), 0);
        assert!(parse_load_csv(b"", &hu()).is_err());
        assert!(parse_load_csv(CSV_HEADER.join(",").as_bytes(), &hu()).is_err());
    }

    #[test]
    fn utc_and_seconds_forms_accepted() {
        let series = parse_load_csv(&csv(&["2015-03-01T00:00:00Z,2015-03-01T01:00:00+00:00,1.5,2.25"]), &hu()).unwrap();
        assert_eq!(series.observations[0].actual_load, Some(2.25));
    }

    #[test]
    fn serialized_form_reparses_identically() {
        let input = csv(&[
            "2015-10-25T01:00+02:00,2015-10-25T02:00+02:00,5000.5,N/A",
            "2015-10-25T02:00+02:00,2015-10-25T02:00+01:00,0,4800",
            "2015-10-25T02:00+01:00,2015-10-25T03:00+01:00,,4700.125",
        ]);
        let first = parse_load_csv(&input, &hu()).unwrap();
        let text = to_csv(&first);
        let second = parse_load_csv(text.as_bytes(), &hu()).unwrap();
        assert_eq!(first, second);
        assert_eq!(to_csv(&second), text);
    }
}
