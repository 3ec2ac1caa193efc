use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::countries::{default_zone, iso_code};
use crate::error::{Error, Result};
use crate::ingestion::CountryCode;

/// A country's time zone and public holidays.
#[derive(Clone, Debug, PartialEq)]
pub struct Calendar {
    pub country: CountryCode,
    pub zone: Tz,
    pub holidays: BTreeSet<NaiveDate>,
}

impl Calendar {
    pub fn new(country: CountryCode, zone: &str, holidays: BTreeSet<NaiveDate>) -> Result<Self> {
        let zone = zone
            .parse::<Tz>()
            .map_err(|_| Error::Configuration(format!("unknown time zone {zone:?} for {country}")))?;
        Ok(Calendar { country, zone, holidays })
    }

    /// Calendar in the country's usual zone with no holidays.
    pub fn for_country(country: &CountryCode) -> Result<Self> {
        let zone = default_zone(country.as_str())
            .ok_or_else(|| Error::Configuration(format!("no time zone known for {country}")))?;
        Calendar::new(country.clone(), zone, BTreeSet::new())
    }

    /// Reads `<dir>/<country>.txt`, or the file named by the two-letter code
    /// when that is missing. No file means no holidays.
    pub fn load(country: &CountryCode, zone: Option<&str>, dir: Option<&Path>) -> Result<Self> {
        let zone = match zone {
            Some(z) => z,
            None => default_zone(country.as_str())
                .ok_or_else(|| Error::Configuration(format!("no time zone known for {country}")))?,
        };
        let mut holidays = BTreeSet::new();
        if let Some(dir) = dir {
            let own = dir.join(format!("{country}.txt"));
            let path = match iso_code(country.as_str()) {
                Some(iso) if !own.exists() => dir.join(format!("{iso}.txt")),
                _ => own,
            };
            if path.exists() {
                let text = std::fs::read_to_string(&path)?;
                holidays = parse_holidays(&text).map_err(|e| match e {
                    Error::Parse { row, message } => {
                        Error::Configuration(format!("{}: line {row}: {message}", path.display()))
                    }
                    other => other,
                })?;
            }
        }
        Calendar::new(country.clone(), zone, holidays)
    }

    pub fn is_holiday(&self, date: NaiveDate) -> bool {
        self.holidays.contains(&date)
    }
}

/// One ISO date per line; blank lines and `#` comments are ignored.
pub fn parse_holidays(text: &str) -> Result<BTreeSet<NaiveDate>> {
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(line, "%Y-%m-%d").map_err(|_| Error::Parse {
            row: i + 1,
            message: format!("not an ISO date: {line:?}"),
        })?;
        out.insert(date);
    }
    Ok(out)
}

/// Local calendar fields of the target hour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarPart {
    pub hour_of_day: u8,
    /// Monday is 0.
    pub day_of_week: u8,
    pub day_of_month: u8,
    pub month: u8,
    pub is_holiday: bool,
}

impl CalendarPart {
    pub fn values(&self) -> [f64; 5] {
        [
            f64::from(self.hour_of_day),
            f64::from(self.day_of_week),
            f64::from(self.day_of_month),
            f64::from(self.month),
            if self.is_holiday { 1.0 } else { 0.0 },
        ]
    }
}

pub fn calendar_features<Z: chrono::TimeZone>(time: DateTime<Z>, calendar: &Calendar) -> CalendarPart {
    let local = time.with_timezone(&Utc).with_timezone(&calendar.zone);
    CalendarPart {
        hour_of_day: local.hour() as u8,
        day_of_week: local.weekday().num_days_from_monday() as u8,
        day_of_month: local.day() as u8,
        month: local.month() as u8,
        is_holiday: calendar.is_holiday(local.date_naive()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(c: &str) -> CountryCode {
        CountryCode::new(c).unwrap()
    }

    #[test]
    fn sunday_afternoon() {
        let cal = Calendar::new(code("HU"), "Europe/Budapest", BTreeSet::new()).unwrap();
        let t = DateTime::parse_from_rfc3339("2015-03-15T14:00:00+01:00").unwrap();
        let part = calendar_features(t, &cal);
        assert_eq!((part.hour_of_day, part.day_of_week, part.month, part.day_of_month), (14, 6, 3, 15));
        assert!(!part.is_holiday);
    }

    #[test]
    fn holiday_flag() {
        let holidays = parse_holidays("# new year\n2015-01-01\n\n2015-12-25  # xmas\n").unwrap();
        assert_eq!(holidays.len(), 2);
        let cal = Calendar::new(code("HU"), "Europe/Budapest", holidays).unwrap();
        let t = DateTime::parse_from_rfc3339("2015-01-01T10:00:00+01:00").unwrap();
        assert!(calendar_features(t, &cal).is_holiday);
    }

    #[test]
    fn zones_shift_hour() {
        let t = DateTime::parse_from_rfc3339("2015-06-01T12:00:00Z").unwrap();
        let london = Calendar::new(code("GB"), "Europe/London", BTreeSet::new()).unwrap();
        let budapest = Calendar::new(code("HU"), "Europe/Budapest", BTreeSet::new()).unwrap();
        let a = calendar_features(t, &london).hour_of_day;
        let b = calendar_features(t, &budapest).hour_of_day;
        assert_eq!(b, a + 1);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            Calendar::new(code("HU"), "Mars/Olympus", BTreeSet::new()),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(parse_holidays("2015-01-01\n15/03/2015"), Err(Error::Parse { row: 2, .. })));
        assert!(Calendar::for_country(&code("ZZ")).is_err());
        assert_eq!(Calendar::for_country(&code("10YCZ-CEPS-----N")).unwrap().zone, chrono_tz::Europe::Prague);
    }
}
