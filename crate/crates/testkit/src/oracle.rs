//! Brute-force gradient boosting reference.
//!
//! Written without reference to the production learner: every split is found
//! by materialising both children for every (feature, threshold) candidate and
//! recomputing their sums of squares from scratch. Rows are plain `Vec<f64>`.

/// Loss selector for the oracle: `None` is squared error, `Some(a)` is the
/// pinball loss for the a-th percentile.
pub type OracleLoss = Option<u8>;

#[derive(Clone, Debug)]
pub enum OracleTree {
    Leaf(f64),
    Node {
        feature: usize,
        threshold: f64,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

impl OracleTree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            OracleTree::Leaf(v) => *v,
            OracleTree::Node {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleModel {
    pub f0: f64,
    pub rate: f64,
    pub trees: Vec<OracleTree>,
}

impl OracleModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in &self.trees {
            total += t.eval(x);
        }
        self.f0 + self.rate * total
    }
}

/// Type-7 percentile: sort, index (n-1)q, interpolate.
pub fn oracle_percentile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() as f64 - 1.0) * q;
    let i = h.floor() as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    let w = h - i as f64;
    if w == 0.0 {
        v[i]
    } else {
        v[i] + w * (v[i + 1] - v[i])
    }
}

fn oracle_mean(xs: &[f64]) -> f64 {
    // Shifted by the first element so constant inputs come back exactly.
    let base = xs[0];
    base + xs.iter().map(|x| x - base).sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = oracle_mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

struct Ctx<'a> {
    x: &'a [Vec<f64>],
    grad: &'a [f64],
    y: &'a [f64],
    f: &'a [f64],
    loss: OracleLoss,
    max_depth: usize,
    min_leaf: usize,
}

fn leaf_for(ctx: &Ctx, idx: &[usize]) -> f64 {
    match ctx.loss {
        None => oracle_mean(&idx.iter().map(|&i| ctx.grad[i]).collect::<Vec<_>>()),
        Some(a) => {
            let r: Vec<f64> = idx.iter().map(|&i| ctx.y[i] - ctx.f[i]).collect();
            let q = oracle_percentile(&r, a as f64 / 100.0);
            let (lo, hi) = pinball_argmin(&r, a);
            let lower = if lo < 0.0 { lo } else { 0.0 };
            let upper = if hi > 0.0 { hi } else { 0.0 };
            q.max(lower).min(upper)
        }
    }
}

/// Smallest and largest sample value satisfying the subgradient optimality
/// condition of the summed pinball loss, checked with integer counts:
/// (100-a)*#{r<c} <= a*#{r>=c} and a*#{r>c} <= (100-a)*#{r<=c}.
pub fn pinball_argmin(r: &[f64], a: u8) -> (f64, f64) {
    let a = a as usize;
    let optimal: Vec<f64> = r
        .iter()
        .copied()
        .filter(|&c| {
            let below = r.iter().filter(|&&v| v < c).count();
            let above = r.iter().filter(|&&v| v > c).count();
            let at_or_above = r.len() - below;
            let at_or_below = r.len() - above;
            (100 - a) * below <= a * at_or_above && a * above <= (100 - a) * at_or_below
        })
        .collect();
    let lo = optimal.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = optimal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn build(ctx: &Ctx, idx: Vec<usize>, depth: usize) -> OracleTree {
    if depth >= ctx.max_depth || idx.len() < 2 * ctx.min_leaf {
        return OracleTree::Leaf(leaf_for(ctx, &idx));
    }
    let here: Vec<f64> = idx.iter().map(|&i| ctx.grad[i]).collect();
    let parent = sum_sq_dev(&here);
    let tol = 1e-10 * parent;
    let n_feat = ctx.x[0].len();

    let mut best: Option<(usize, f64, f64)> = None;
    for feat in 0..n_feat {
        let mut vals: Vec<f64> = idx.iter().map(|&i| ctx.x[i][feat]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let mut thr = (w[0] + w[1]) / 2.0;
            if thr >= w[1] || thr < w[0] {
                thr = w[0];
            }
            let left: Vec<f64> = idx
                .iter()
                .filter(|&&i| ctx.x[i][feat] <= thr)
                .map(|&i| ctx.grad[i])
                .collect();
            let right: Vec<f64> = idx
                .iter()
                .filter(|&&i| ctx.x[i][feat] > thr)
                .map(|&i| ctx.grad[i])
                .collect();
            if left.len() < ctx.min_leaf || right.len() < ctx.min_leaf {
                continue;
            }
            let gain = parent - sum_sq_dev(&left) - sum_sq_dev(&right);
            let take = match best {
                None => true,
                Some((_, _, g)) => gain > g + tol,
            };
            if take {
                best = Some((feat, thr, gain));
            }
        }
    }

    match best {
        Some((feature, threshold, gain)) if parent > 0.0 && gain > tol => {
            let l: Vec<usize> = idx.iter().copied().filter(|&i| ctx.x[i][feature] <= threshold).collect();
            let r: Vec<usize> = idx.iter().copied().filter(|&i| ctx.x[i][feature] > threshold).collect();
            OracleTree::Node {
                feature,
                threshold,
                left: Box::new(build(ctx, l, depth + 1)),
                right: Box::new(build(ctx, r, depth + 1)),
            }
        }
        _ => OracleTree::Leaf(leaf_for(ctx, &idx)),
    }
}

/// Boosting written out stage by stage: F_0, then F_i = F_{i-1} + rate * h_i.
pub fn oracle_boost(
    x: &[Vec<f64>],
    y: &[f64],
    loss: OracleLoss,
    n_trees: usize,
    rate: f64,
    max_depth: usize,
    min_leaf: usize,
) -> OracleModel {
    let f0 = match loss {
        None => oracle_mean(y),
        Some(a) => oracle_percentile(y, a as f64 / 100.0),
    };
    let mut f = vec![f0; y.len()];
    let mut trees = Vec::new();
    for _ in 0..n_trees {
        let grad: Vec<f64> = y
            .iter()
            .zip(&f)
            .map(|(&yi, &fi)| match loss {
                None => yi - fi,
                Some(a) => {
                    let t = a as f64 / 100.0;
                    if yi > fi {
                        t
                    } else if yi < fi {
                        t - 1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect();
        let tree = {
            let ctx = Ctx {
                x,
                grad: &grad,
                y,
                f: &f,
                loss,
                max_depth,
                min_leaf,
            };
            build(&ctx, (0..y.len()).collect(), 0)
        };
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += rate * tree.eval(&x[i]);
        }
        trees.push(tree);
    }
    OracleModel { f0, rate, trees }
}
