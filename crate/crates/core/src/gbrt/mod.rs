//! Gradient-boosted regression trees.
//!
//! The ensemble starts from a constant `f0` and adds `learning_rate * h_i(x)`
//! for each tree `h_i`, where every tree is grown on the negative gradient of
//! the loss at the current ensemble prediction. Squared-error and quantile
//! (pinball) losses are supported.
//!
//! Everything here is deterministic: there is no row or column subsampling,
//! split candidates are the midpoints between consecutive distinct feature
//! values, and ties go to the lowest feature index, then the smallest
//! threshold.

mod loss;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use loss::{initial_prediction, leaf_value, negative_gradient, Loss};
pub use tree::{fit_tree, TreeNode};

/// Version tag written into every serialized model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Row-major feature matrix paired with one target per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    feature_names: Vec<String>,
    n_features: usize,
    data: Vec<f64>,
    targets: Vec<f64>,
}

impl SampleSet {
    /// Columns are named `x0`, `x1`, ... .
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let names = (0..n_features).map(|i| format!("x{i}")).collect();
        Self::with_names(names, rows, targets)
    }

    pub fn with_names(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let n_features = feature_names.len();
        let mut data = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::invalid(format!(
                    "row {i} has {} features, expected {n_features}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} contains a non-finite feature")));
            }
            data.extend(row);
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("target {i} is not finite")));
        }
        Ok(SampleSet {
            feature_names,
            n_features,
            data,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    #[inline]
    pub(crate) fn value(&self, row: usize, feature: usize) -> f64 {
        self.data[row * self.n_features + feature]
    }

    /// Same features, different targets.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.len() {
            return Err(Error::invalid("replacement targets have the wrong length"));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("targets must be finite"));
        }
        Ok(SampleSet {
            targets,
            ..self.clone()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub loss: Loss,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_trees: 50,
            learning_rate: 0.1,
            max_depth: 5,
            min_samples_leaf: 1,
            loss: Loss::Squared,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        self.loss.validate()
    }

    pub fn with_loss(self, loss: Loss) -> Self {
        BoostConfig { loss, ..self }
    }
}

/// A fitted ensemble. Immutable once built; safe to share across threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub format_version: u32,
    pub f0: f64,
    pub n_features: usize,
    pub config: BoostConfig,
    pub trees: Vec<TreeNode>,
}

/// Fits a boosted ensemble.
pub fn fit(samples: &SampleSet, config: &BoostConfig) -> Result<BoostedModel> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("cannot fit on an empty sample set"));
    }
    let targets = samples.targets();
    let f0 = initial_prediction(targets, config.loss)?;
    let mut current = vec![f0; samples.len()];
    let mut trees = Vec::with_capacity(config.n_trees);

    for _ in 0..config.n_trees {
        let residuals = negative_gradient(config.loss, targets, &current)?;
        let tree = {
            let current = &current;
            let residuals_ref = &residuals;
            let leaf = move |members: &[usize]| {
                let r: Vec<f64> = members.iter().map(|&i| residuals_ref[i]).collect();
                let y: Vec<f64> = members.iter().map(|&i| targets[i]).collect();
                let f: Vec<f64> = members.iter().map(|&i| current[i]).collect();
                leaf_value(config.loss, &r, &y, &f)
            };
            tree::grow_tree(
                samples,
                &residuals,
                config.max_depth,
                config.min_samples_leaf,
                &leaf,
            )
        };
        for (i, f) in current.iter_mut().enumerate() {
            *f += config.learning_rate * tree.predict(samples.row(i));
        }
        trees.push(tree);
    }

    Ok(BoostedModel {
        format_version: MODEL_FORMAT_VERSION,
        f0,
        n_features: samples.n_features(),
        config: *config,
        trees,
    })
}

impl BoostedModel {
    /// A model with no trees that predicts `f0` everywhere.
    pub fn constant(f0: f64, n_features: usize, config: BoostConfig) -> Self {
        BoostedModel {
            format_version: MODEL_FORMAT_VERSION,
            f0,
            n_features,
            config: BoostConfig { n_trees: 0, ..config },
            trees: Vec::new(),
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.predict_prefix(row, self.trees.len()))
    }

    /// Prediction using only the first `n_trees` trees.
    pub fn predict_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        let sum: f64 = self.trees.iter().take(n_trees).map(|t| t.predict(row)).sum();
        self.f0 + self.config.learning_rate * sum
    }

    /// Raw leaf value reached in each tree, in ensemble order.
    pub fn leaf_trace(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.trees.iter().map(|t| t.predict(row)).collect())
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.n_features,
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature row contains a non-finite value"));
        }
        Ok(())
    }

    /// Structural checks applied after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        self.config.validate()?;
        if self.trees.len() != self.config.n_trees {
            return Err(Error::invalid(format!(
                "model declares {} trees but holds {}",
                self.config.n_trees,
                self.trees.len()
            )));
        }
        if !self.f0.is_finite() || !self.trees.iter().all(TreeNode::all_finite) {
            return Err(Error::invalid("model contains non-finite values"));
        }
        if let Some(f) = self.trees.iter().filter_map(TreeNode::max_feature).max() {
            if f >= self.n_features {
                return Err(Error::invalid(format!("tree splits on unknown feature {f}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: BoostedModel = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed model document: {e}")))?;
        model.validate()?;
        Ok(model)
    }
}
