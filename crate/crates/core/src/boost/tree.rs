//! Weighted least-squares regression trees.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes to `left`, otherwise `right`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Nodes are stored in preorder; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    n_features: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// Position in the sorted order where the right child starts.
    cut: usize,
    sse: f64,
}

/// Fit a tree by greedy top-down splitting.
///
/// Each split minimizes the summed weighted squared deviation of the two
/// children; candidate thresholds are midpoints between consecutive distinct
/// values of a feature. Growth stops at `max_depth`, when no split leaves at
/// least `min_leaf` samples (and positive weight) on both sides, or when the
/// node's impurity is zero. Ties go to the lowest feature index, then the
/// lowest threshold. Leaves predict the weighted mean of their targets.
pub fn tree_fit(
    x: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    max_depth: usize,
    min_leaf: usize,
) -> Result<RegressionTree> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != y.len() || w.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: x.len().min(w.len()) });
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument("sample weights must be non-negative with positive sum".into()));
    }
    let n_features = x[0].len();
    if x.iter().any(|r| r.len() != n_features) {
        return Err(Error::InvalidArgument("ragged feature matrix".into()));
    }

    // Per-feature sample orders, sorted by (value, index); split recursion
    // partitions them stably so no node re-sorts.
    let orders: Vec<Vec<usize>> = (0..n_features)
        .map(|f| {
            let mut idx: Vec<usize> = (0..y.len()).collect();
            idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let all: Vec<usize> = (0..y.len()).collect();

    let mut b = Builder { x, y, w, n_features, max_depth, min_leaf: min_leaf.max(1), nodes: Vec::new() };
    b.grow(&all, orders, 0);
    Ok(RegressionTree { nodes: b.nodes, max_depth, min_leaf: min_leaf.max(1) })
}

impl Builder<'_> {
    fn weighted_mean(&self, idx: &[usize]) -> f64 {
        let (sw, swy) = idx.iter().fold((0.0, 0.0), |(sw, swy), &i| (sw + self.w[i], swy + self.w[i] * self.y[i]));
        if sw > 0.0 {
            swy / sw
        } else {
            idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
        }
    }

    fn impurity(&self, idx: &[usize], mean: f64) -> f64 {
        idx.iter().map(|&i| self.w[i] * (self.y[i] - mean).powi(2)).sum()
    }

    fn grow(&mut self, idx: &[usize], orders: Vec<Vec<usize>>, depth: usize) -> usize {
        let at = self.nodes.len();
        // Rounding in the weighted mean would give a constant node a value
        // a few ulps off and a tiny positive impurity, so test it directly.
        let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        let mean = if pure { self.y[idx[0]] } else { self.weighted_mean(idx) };
        self.nodes.push(Node::Leaf { value: mean });

        let impurity = self.impurity(idx, mean);
        if depth >= self.max_depth || pure || impurity <= 0.0 || idx.len() < 2 * self.min_leaf {
            return at;
        }
        let Some(best) = self.best_split(&orders, impurity) else {
            return at;
        };

        let sorted = &orders[best.feature];
        let mut goes_left = vec![false; self.y.len()];
        for &i in &sorted[..best.cut] {
            goes_left[i] = true;
        }
        let left_idx: Vec<usize> = idx.iter().copied().filter(|&i| goes_left[i]).collect();
        let right_idx: Vec<usize> = idx.iter().copied().filter(|&i| !goes_left[i]).collect();
        let (left_orders, right_orders): (Vec<_>, Vec<_>) = orders
            .into_iter()
            .map(|o| o.into_iter().partition::<Vec<usize>, _>(|&i| goes_left[i]))
            .unzip();

        let left = self.grow(&left_idx, left_orders, depth + 1);
        let right = self.grow(&right_idx, right_orders, depth + 1);
        self.nodes[at] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        at
    }

    fn best_split(&self, orders: &[Vec<usize>], parent_sse: f64) -> Option<Candidate> {
        let n = orders[0].len();
        let margin = 1e-12 * parent_sse;
        let mut best: Option<Candidate> = None;
        for (feature, order) in orders.iter().enumerate().take(self.n_features) {
            let (tw, twy, twyy) = order.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &i| {
                let (w, y) = (self.w[i], self.y[i]);
                (a + w, b + w * y, c + w * y * y)
            });
            let (mut lw, mut lwy, mut lwyy) = (0.0, 0.0, 0.0);
            for cut in 1..n {
                let i = order[cut - 1];
                let (w, y) = (self.w[i], self.y[i]);
                lw += w;
                lwy += w * y;
                lwyy += w * y * y;
                if cut < self.min_leaf || n - cut < self.min_leaf {
                    continue;
                }
                let a = self.x[i][feature];
                let b = self.x[order[cut]][feature];
                if a == b {
                    continue;
                }
                let (rw, rwy, rwyy) = (tw - lw, twy - lwy, twyy - lwyy);
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let sse = (lwyy - lwy * lwy / lw).max(0.0) + (rwyy - rwy * rwy / rw).max(0.0);
                if best.as_ref().is_none_or(|c| sse < c.sse - margin) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate { feature, threshold, cut, sse });
                }
            }
        }
        best
    }
}
