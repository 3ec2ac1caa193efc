use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ModelKind, MAX_HORIZON};
use crate::gbrt::{BoostedModel, Loss, MODEL_FORMAT_VERSION};
use crate::ingestion::CountryCode;

/// Deciles produced by the probabilistic models.
pub const DECILES: [u8; 9] = [10, 20, 30, 40, 50, 60, 70, 80, 90];

/// What a stored model predicts: the expected load or one decile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LossTag {
    Point,
    Decile { percent: u8 },
}

impl LossTag {
    pub fn loss(self) -> Loss {
        match self {
            LossTag::Point => Loss::Squared,
            LossTag::Decile { percent } => Loss::Quantile { percent },
        }
    }

    /// File stem under a horizon directory for models of `kind`.
    pub fn file_stem(self, kind: ModelKind) -> String {
        match self {
            LossTag::Point => kind.as_str().to_string(),
            LossTag::Decile { percent } => format!("{}-q{percent}", kind.as_str()),
        }
    }
}

/// A trained model with the metadata needed to select and apply it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub format_version: u32,
    pub country: CountryCode,
    pub horizon: u8,
    pub kind: ModelKind,
    pub loss: LossTag,
    pub trained_at: DateTime<Utc>,
    pub feature_names: Vec<String>,
    pub model: BoostedModel,
}

impl ModelRecord {
    pub fn new(
        country: CountryCode,
        horizon: u8,
        kind: ModelKind,
        loss: LossTag,
        trained_at: DateTime<Utc>,
        model: BoostedModel,
    ) -> Result<Self> {
        let record = ModelRecord {
            format_version: MODEL_FORMAT_VERSION,
            country,
            horizon,
            kind,
            loss,
            trained_at,
            feature_names: kind.feature_names().iter().map(|s| s.to_string()).collect(),
            model,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported record format version {}",
                self.format_version
            )));
        }
        if !(1..=MAX_HORIZON).contains(&self.horizon) {
            return Err(Error::invalid(format!("horizon {} out of range", self.horizon)));
        }
        if self.feature_names != self.kind.feature_names() {
            return Err(Error::invalid(format!(
                "feature schema {:?} does not match a {} model",
                self.feature_names,
                self.kind.as_str()
            )));
        }
        if self.feature_names.len() != self.model.n_features {
            return Err(Error::invalid("feature schema arity differs from the model"));
        }
        if self.loss.loss() != self.model.config.loss {
            return Err(Error::invalid("loss tag differs from the model's loss"));
        }
        self.model.validate()
    }

    pub fn key(&self) -> ModelKey {
        ModelKey {
            horizon: self.horizon,
            kind: self.kind,
            loss: self.loss,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelKey {
    pub horizon: u8,
    pub kind: ModelKind,
    pub loss: LossTag,
}

/// One forecast value for one target hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub country: CountryCode,
    pub issued_at: DateTime<Utc>,
    pub target_time: DateTime<Utc>,
    pub horizon: u8,
    pub kind: ModelKind,
    pub point: f64,
    /// q10 to q90, non-decreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deciles: Option<Vec<f64>>,
    pub model_trained_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonError {
    pub horizon: u8,
    pub message: String,
}

/// The output of one forecasting run for a country.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastBatch {
    pub country: CountryCode,
    pub issued_at: DateTime<Utc>,
    pub records: Vec<ForecastRecord>,
    #[serde(default)]
    pub errors: Vec<HorizonError>,
}
