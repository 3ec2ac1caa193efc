use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Training objective of a boosted model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Loss {
    Squared,
    /// Pinball loss for the `percent`-th percentile, `percent` in 1..=99.
    Quantile { percent: u8 },
}

impl Loss {
    pub fn quantile(percent: u8) -> Self {
        Loss::Quantile { percent }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Loss::Squared => Ok(()),
            Loss::Quantile { percent } if (1..=99).contains(&percent) => Ok(()),
            Loss::Quantile { percent } => Err(Error::invalid(format!(
                "quantile percent must be in 1..=99, got {percent}"
            ))),
        }
    }

    /// Loss of a single prediction.
    pub fn point_loss(&self, target: f64, prediction: f64) -> f64 {
        match *self {
            Loss::Squared => (target - prediction) * (target - prediction),
            Loss::Quantile { percent } => {
                let tau = f64::from(percent) / 100.0;
                if target < prediction {
                    (1.0 - tau) * (prediction - target)
                } else {
                    tau * (target - prediction)
                }
            }
        }
    }

    /// Sum of [`Loss::point_loss`] over paired slices.
    pub fn total_loss(&self, targets: &[f64], predictions: &[f64]) -> f64 {
        targets
            .iter()
            .zip(predictions)
            .map(|(&y, &f)| self.point_loss(y, f))
            .sum()
    }
}

/// Constant the ensemble starts from: the mean for squared loss, the
/// interpolated percentile for quantile loss.
pub fn initial_prediction(targets: &[f64], loss: Loss) -> Result<f64> {
    loss.validate()?;
    if targets.is_empty() {
        return Err(Error::invalid("initial prediction of an empty target vector"));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("targets must be finite"));
    }
    let value = match loss {
        Loss::Squared => stats::mean(targets),
        Loss::Quantile { percent } => stats::percentile(targets, f64::from(percent) / 100.0),
    };
    Ok(value.expect("non-empty"))
}

/// Pseudo-residuals the next tree is fitted to.
pub fn negative_gradient(loss: Loss, targets: &[f64], predictions: &[f64]) -> Result<Vec<f64>> {
    if targets.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} targets vs {} predictions",
            targets.len(),
            predictions.len()
        )));
    }
    let grad = match loss {
        Loss::Squared => targets.iter().zip(predictions).map(|(y, f)| y - f).collect(),
        Loss::Quantile { percent } => {
            let tau = f64::from(percent) / 100.0;
            targets
                .iter()
                .zip(predictions)
                .map(|(y, f)| {
                    if y > f {
                        tau
                    } else if y < f {
                        tau - 1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    Ok(grad)
}

/// Terminal value of a leaf. Squared loss averages the pseudo-residuals;
/// quantile loss takes the interpolated percentile of `target - prediction`.
///
/// The interpolated percentile is not always a minimiser of the leaf's
/// pinball loss, so it is clamped into the smallest interval containing both
/// zero and the minimising set. Any step from zero towards the clamped value
/// then never increases that leaf's loss, whatever the learning rate.
///
/// All three slices describe the same samples and must be non-empty.
pub fn leaf_value(loss: Loss, residuals: &[f64], targets: &[f64], predictions: &[f64]) -> f64 {
    match loss {
        Loss::Squared => stats::mean(residuals).expect("empty leaf"),
        Loss::Quantile { percent } => {
            let mut raw: Vec<f64> = targets.iter().zip(predictions).map(|(y, f)| y - f).collect();
            raw.sort_by(f64::total_cmp);
            let value = stats::percentile_sorted(&raw, f64::from(percent) / 100.0);
            let (lo, hi) = pinball_minimizers(&raw, percent);
            value.clamp(lo.min(0.0), hi.max(0.0))
        }
    }
}

/// Interval of constants minimising the summed pinball loss of an ascending
/// sample: `[x(ceil(n*tau)), x(floor(n*tau) + 1)]` in 1-based order statistics.
fn pinball_minimizers(sorted: &[f64], percent: u8) -> (f64, f64) {
    let scaled = sorted.len() * usize::from(percent);
    let lo = scaled.div_ceil(100).max(1) - 1;
    let hi = (scaled / 100).min(sorted.len() - 1);
    (sorted[lo], sorted[hi])
}
