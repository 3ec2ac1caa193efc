//! Seeded synthetic hourly load series.
//!
//! Load is `base * level_t * daily(hour) * weekly(weekday)` times optional
//! multiplicative noise, plus optional additive Gaussian noise. The level is
//! a mean-reverting AR(1) process around 1, which gives the lagged features
//! something to learn that the calendar alone cannot explain.

use chrono::{DateTime, Datelike, Duration, Timelike, Utc};
use loadcast_core::ingestion::{CountryCode, Frequency, LoadObservation, LoadSeries, SourceKind};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Debug)]
pub struct SeriesSpec {
    pub start: DateTime<Utc>,
    pub hours: usize,
    /// Mean load in MW.
    pub base: f64,
    /// Relative amplitude of the daily cycle.
    pub daily_amplitude: f64,
    /// Relative drop on Saturdays (half of it) and Sundays (all of it).
    pub weekend_drop: f64,
    /// AR(1) coefficient of the level; 0 disables it.
    pub level_phi: f64,
    /// Per-hour innovation of the level.
    pub level_sigma: f64,
    /// Standard deviation of the multiplicative noise factor.
    pub multiplicative_noise: f64,
    /// Standard deviation of additive noise, MW.
    pub additive_noise: f64,
    /// Relative noise of the day-ahead forecast column.
    pub benchmark_noise: f64,
    pub seed: u64,
}

impl SeriesSpec {
    /// Ten weeks from Monday 2015-01-05, 3% multiplicative noise, and a
    /// slowly wandering level.
    pub fn ten_weeks(seed: u64) -> Self {
        SeriesSpec {
            start: DateTime::parse_from_rfc3339("2015-01-05T00:00:00Z").unwrap().with_timezone(&Utc),
            hours: 10 * 168,
            base: 6000.0,
            daily_amplitude: 0.18,
            weekend_drop: 0.12,
            level_phi: 0.995,
            level_sigma: 0.006,
            multiplicative_noise: 0.03,
            additive_noise: 0.0,
            benchmark_noise: 0.02,
            seed,
        }
    }

    /// Seasonal pattern plus additive Gaussian noise only.
    pub fn seasonal_with_gaussian_noise(seed: u64, sigma: f64) -> Self {
        SeriesSpec {
            level_phi: 0.0,
            level_sigma: 0.0,
            multiplicative_noise: 0.0,
            additive_noise: sigma,
            ..SeriesSpec::ten_weeks(seed)
        }
    }

    /// Noise-free load at `t` with the level at 1.
    pub fn seasonal(&self, t: DateTime<Utc>) -> f64 {
        let h = f64::from(t.hour()) / 24.0 * std::f64::consts::TAU;
        let daily = 1.0 + self.daily_amplitude * (-(h).cos() * 0.7 - (2.0 * h).cos() * 0.3);
        let weekly = match t.weekday().num_days_from_monday() {
            5 => 1.0 - self.weekend_drop / 2.0,
            6 => 1.0 - self.weekend_drop,
            _ => 1.0,
        };
        self.base * daily * weekly
    }

    pub fn generate(&self, country: &CountryCode) -> LoadSeries {
        let mut rng = StdRng::seed_from_u64(self.seed);
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        let mut level = 1.0;
        let offset = self.start.fixed_offset();
        let observations = (0..self.hours)
            .map(|i| {
                let t = self.start + Duration::hours(i as i64);
                if self.level_phi > 0.0 {
                    level = 1.0 + self.level_phi * (level - 1.0) + self.level_sigma * std_normal.sample(&mut rng);
                }
                let mean = self.seasonal(t) * level;
                let actual = mean * (1.0 + self.multiplicative_noise * std_normal.sample(&mut rng))
                    + self.additive_noise * std_normal.sample(&mut rng);
                let forecast = mean * (1.0 + self.benchmark_noise * std_normal.sample(&mut rng));
                let start = offset + Duration::hours(i as i64);
                LoadObservation {
                    interval_start: start,
                    interval_end: start + Duration::hours(1),
                    day_ahead_forecast: Some(forecast.max(0.0)),
                    actual_load: Some(actual.max(0.0)),
                }
            })
            .collect();
        LoadSeries::new(country.clone(), Frequency::Hourly, SourceKind::TotalLoad, observations)
            .expect("generated series is valid")
    }
}
