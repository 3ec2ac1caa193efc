use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::stats;

/// Gains closer than this fraction of the node's sum of squares are treated
/// as ties, so that the lowest (feature, threshold) wins deterministically.
pub(crate) const GAIN_REL_TOL: f64 = 1e-10;

/// A binary regression tree. Rows go left iff `row[feature] <= threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Longest root-to-leaf path, counted in splits.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        match self {
            TreeNode::Leaf { value } => value.is_finite(),
            TreeNode::Split {
                threshold,
                left,
                right,
                ..
            } => threshold.is_finite() && left.all_finite() && right.all_finite(),
        }
    }
}

/// Fits a least-squares regression tree to the sample targets (the
/// pseudo-residuals during boosting). Leaves carry the mean target.
pub fn fit_tree(samples: &SampleSet, max_depth: usize, min_samples_leaf: usize) -> TreeNode {
    let residuals = samples.targets();
    grow_tree(samples, residuals, max_depth, min_samples_leaf, &|members| {
        let values: Vec<f64> = members.iter().map(|&i| residuals[i]).collect();
        stats::mean(&values).expect("empty leaf")
    })
}

/// Greedy top-down growth on `residuals`; `leaf` maps the (ascending) sample
/// indices of a terminal node to its value.
pub(crate) fn grow_tree(
    samples: &SampleSet,
    residuals: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
    leaf: &dyn Fn(&[usize]) -> f64,
) -> TreeNode {
    assert!(!samples.is_empty(), "cannot grow a tree without samples");
    let n = samples.len();
    let sorted: Vec<Vec<usize>> = (0..samples.n_features())
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                samples
                    .value(a, f)
                    .total_cmp(&samples.value(b, f))
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();
    let grower = Grower {
        samples,
        residuals,
        max_depth,
        min_leaf: min_samples_leaf.max(1),
        leaf,
    };
    let members: Vec<usize> = (0..n).collect();
    let mut side = vec![false; n];
    grower.grow(members, sorted, 0, &mut side)
}

struct Grower<'a> {
    samples: &'a SampleSet,
    residuals: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    leaf: &'a dyn Fn(&[usize]) -> f64,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn grow(
        &self,
        members: Vec<usize>,
        sorted: Vec<Vec<usize>>,
        depth: usize,
        side: &mut [bool],
    ) -> TreeNode {
        let split = if depth < self.max_depth && members.len() >= 2 * self.min_leaf {
            self.best_split(&members, &sorted)
        } else {
            None
        };
        let Some(split) = split else {
            return TreeNode::Leaf {
                value: (self.leaf)(&members),
            };
        };

        for &i in &members {
            side[i] = self.samples.value(i, split.feature) <= split.threshold;
        }
        let (left_members, right_members): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| side[i]);
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&i| side[i]);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let left = self.grow(left_members, left_sorted, depth + 1, side);
        let right = self.grow(right_members, right_sorted, depth + 1, side);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Exhaustive search over midpoints between consecutive distinct values.
    /// Gain is the reduction in the sum of squared deviations.
    fn best_split(&self, members: &[usize], sorted: &[Vec<usize>]) -> Option<Candidate> {
        let values: Vec<f64> = members.iter().map(|&i| self.residuals[i]).collect();
        let center = stats::mean(&values)?;
        let sse: f64 = values.iter().map(|v| (v - center) * (v - center)).sum();
        if sse <= 0.0 {
            return None;
        }
        let tol = GAIN_REL_TOL * sse;
        let total: f64 = values.iter().map(|v| v - center).sum();
        let n = members.len();

        let mut best: Option<Candidate> = None;
        for (feature, order) in sorted.iter().enumerate() {
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                let i = order[k];
                left_sum += self.residuals[i] - center;
                let n_left = k + 1;
                let n_right = n - n_left;
                if n_left < self.min_leaf {
                    continue;
                }
                if n_right < self.min_leaf {
                    break;
                }
                let here = self.samples.value(i, feature);
                let next = self.samples.value(order[k + 1], feature);
                if next <= here {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64;
                let better = match best {
                    None => true,
                    Some(b) => gain > b.gain + tol,
                };
                if better {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(here, next),
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > tol)
    }
}

/// Midpoint of two ascending values that still separates them.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}
