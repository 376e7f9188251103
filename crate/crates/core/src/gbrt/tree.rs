use serde::{Deserialize, Serialize};

use crate::Scalar;

use super::columns::Columns;
use super::{FeatureRow, GbrtParams};

/// Relative tolerance under which two gains count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
        /// Squared-error reduction of this split.
        gain: T,
        n_samples: usize,
    },
    Leaf { value: T, n_samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RegressionTree<T> {
    /// Node 0 is the root.
    pub nodes: Vec<Node<T>>,
    /// Internal nodes in the order they were split.
    pub split_order: Vec<usize>,
}

impl<T: Scalar> RegressionTree<T> {
    pub fn leaf(value: T, n_samples: usize) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value, n_samples }],
            split_order: Vec::new(),
        }
    }

    pub fn leaf_index<R: FeatureRow<T> + ?Sized>(&self, x: &R) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x.value(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict<R: FeatureRow<T> + ?Sized>(&self, x: &R) -> T {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Root-only tree whose constant shift reduces squared error by no more
    /// than the split gain floor.
    pub(crate) fn is_stump_without_effect(&self, resid: &[T]) -> bool {
        let [Node::Leaf { value, n_samples }] = self.nodes.as_slice() else {
            return false;
        };
        let sq = resid.iter().fold(T::zero(), |a, &r| a + r * r);
        T::from_usize_lossy(*n_samples) * *value * *value <= T::from_f64_lossy(TIE_TOL) * sq
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// Fits one tree to `residuals` over all `rows`.
pub fn fit_tree<T: Scalar, R: FeatureRow<T>>(rows: &[R], residuals: &[T], params: &GbrtParams) -> RegressionTree<T> {
    assert_eq!(rows.len(), residuals.len(), "one residual per row");
    assert!(!rows.is_empty(), "empty update set");
    let all: Vec<usize> = (0..rows.len()).collect();
    let columns = Columns::build(rows, &all);
    grow(&columns, residuals, params)
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    gain: T,
    col: usize,
    lower: u32,
    upper: u32,
    n_left: usize,
}

struct Open<T> {
    node: usize,
    lo: usize,
    hi: usize,
    depth: usize,
    best: Option<Candidate<T>>,
}

fn better<T: Scalar>(gain: T, incumbent: T) -> bool {
    gain - incumbent > T::from_f64_lossy(TIE_TOL) * incumbent.abs()
}

struct Grower<'a, T> {
    cols: &'a Columns<T>,
    resid: &'a [T],
    min_leaf: usize,
    order: Vec<u32>,
    /// Sample indices per node, ascending within each node segment.
    members: Vec<u32>,
    go_left: Vec<bool>,
    scratch: Vec<u32>,
}

impl<T: Scalar> Grower<'_, T> {
    fn node_stats(&self, lo: usize, hi: usize) -> (T, T) {
        let mut sum = T::zero();
        let mut sq = T::zero();
        for &i in &self.members[lo..hi] {
            let r = self.resid[i as usize];
            sum = sum + r;
            sq = sq + r * r;
        }
        (sum, sq)
    }

    fn best_split(&self, lo: usize, hi: usize) -> Option<Candidate<T>> {
        let n_node = hi - lo;
        if n_node < 2 * self.min_leaf {
            return None;
        }
        let (total, sq) = self.node_stats(lo, hi);
        let min_gain = T::from_f64_lossy(TIE_TOL) * sq;
        let n_t = T::from_usize_lossy(n_node);
        let n = self.cols.n;
        let mut best: Option<Candidate<T>> = None;
        for c in 0..self.cols.n_columns() {
            let seg = &self.order[c * n + lo..c * n + hi];
            let mut sum_left = T::zero();
            for pos in 0..n_node - 1 {
                let i = seg[pos];
                sum_left = sum_left + self.resid[i as usize];
                let n_left = pos + 1;
                if n_left < self.min_leaf {
                    continue;
                }
                if n_node - n_left < self.min_leaf {
                    break;
                }
                let (r_cur, r_next) = (self.cols.rank(c, i), self.cols.rank(c, seg[pos + 1]));
                if r_cur == r_next {
                    continue;
                }
                let nl = T::from_usize_lossy(n_left);
                let nr = n_t - nl;
                let diff = sum_left / nl - (total - sum_left) / nr;
                let gain = nl * nr / n_t * diff * diff;
                if !(gain > min_gain) {
                    continue;
                }
                if best.is_none_or(|b| better(gain, b.gain)) {
                    best = Some(Candidate {
                        gain,
                        col: c,
                        lower: r_cur,
                        upper: r_next,
                        n_left,
                    });
                }
            }
        }
        best
    }

    /// Stable partition of every column segment and the member list.
    fn partition(&mut self, lo: usize, hi: usize, cand: &Candidate<T>) {
        let n = self.cols.n;
        for &i in &self.members[lo..hi] {
            self.go_left[i as usize] = self.cols.rank(cand.col, i) <= cand.lower;
        }
        let go_left = &self.go_left;
        let scratch = &mut self.scratch;
        let mut part = |seg: &mut [u32]| {
            scratch.clear();
            let mut w = 0;
            for k in 0..seg.len() {
                let i = seg[k];
                if go_left[i as usize] {
                    seg[w] = i;
                    w += 1;
                } else {
                    scratch.push(i);
                }
            }
            seg[w..].copy_from_slice(scratch);
        };
        part(&mut self.members[lo..hi]);
        for c in 0..self.cols.n_columns() {
            part(&mut self.order[c * n + lo..c * n + hi]);
        }
    }

    fn leaf_value(&self, lo: usize, hi: usize) -> T {
        let (sum, _) = self.node_stats(lo, hi);
        sum / T::from_usize_lossy(hi - lo)
    }
}

/// Greedy leaf-wise growth on preprocessed columns. `resid[i]` belongs to
/// sample `i` of the column set.
pub(crate) fn grow<T: Scalar>(cols: &Columns<T>, resid: &[T], params: &GbrtParams) -> RegressionTree<T> {
    let n = cols.n;
    let mut g = Grower {
        cols,
        resid,
        min_leaf: params.min_samples_leaf.max(1),
        order: cols.order.clone(),
        members: (0..n as u32).collect(),
        go_left: vec![false; n],
        scratch: Vec::with_capacity(n),
    };
    let mut nodes = vec![Node::Leaf {
        value: g.leaf_value(0, n),
        n_samples: n,
    }];
    let mut split_order = Vec::new();
    let mut open = vec![Open {
        node: 0,
        lo: 0,
        hi: n,
        depth: 0,
        best: if params.max_depth > 0 { g.best_split(0, n) } else { None },
    }];
    let mut n_leaves = 1;

    while n_leaves < params.num_leaves {
        // Leaf with the largest gain; ties go to the earliest-created node.
        let mut pick: Option<usize> = None;
        for (k, o) in open.iter().enumerate() {
            let Some(c) = o.best else { continue };
            let replace = match pick {
                None => true,
                Some(p) => {
                    let incumbent = open[p].best.unwrap();
                    better(c.gain, incumbent.gain)
                        || (!better(incumbent.gain, c.gain) && o.node < open[p].node)
                }
            };
            if replace {
                pick = Some(k);
            }
        }
        let Some(k) = pick else { break };
        let leaf = open.swap_remove(k);
        let cand = leaf.best.unwrap();
        g.partition(leaf.lo, leaf.hi, &cand);
        let mid = leaf.lo + cand.n_left;

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf {
            value: g.leaf_value(leaf.lo, mid),
            n_samples: mid - leaf.lo,
        });
        nodes.push(Node::Leaf {
            value: g.leaf_value(mid, leaf.hi),
            n_samples: leaf.hi - mid,
        });
        nodes[leaf.node] = Node::Split {
            feature: cols.feature[cand.col],
            threshold: cols.threshold(cand.col, cand.lower, cand.upper),
            left,
            right,
            gain: cand.gain,
            n_samples: leaf.hi - leaf.lo,
        };
        split_order.push(leaf.node);
        n_leaves += 1;

        let depth = leaf.depth + 1;
        let can_split = depth < params.max_depth;
        for (node, lo, hi) in [(left, leaf.lo, mid), (right, mid, leaf.hi)] {
            open.push(Open {
                node,
                lo,
                hi,
                depth,
                best: if can_split { g.best_split(lo, hi) } else { None },
            });
        }
    }
    RegressionTree { nodes, split_order }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(num_leaves: usize, min_leaf: usize) -> GbrtParams {
        GbrtParams {
            num_leaves,
            min_samples_leaf: min_leaf,
            ..Default::default()
        }
    }

    #[test]
    fn equal_residuals_give_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let tree = fit_tree(&rows, &[2.5; 12], &params(10, 1));
        assert_eq!(tree.nodes, vec![Node::Leaf { value: 2.5, n_samples: 12 }]);
    }

    #[test]
    fn step_data_splits_at_midpoint() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let tree = fit_tree(&rows, &[0.0, 0.0, 6.0, 6.0], &params(2, 1));
        match &tree.nodes[0] {
            Node::Split { feature, threshold, gain, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
                // SSE 36 before, 0 after.
                assert!((gain - 36.0).abs() < 1e-12);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(tree.predict(&vec![0.7]), 0.0);
        assert_eq!(tree.predict(&vec![2.2]), 6.0);
        assert_eq!(tree.n_leaves(), 2);
    }

    #[test]
    fn depth_cap_binds_before_leaf_cap() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let resid: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let p = GbrtParams {
            num_leaves: 100,
            max_depth: 3,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let tree = fit_tree(&rows, &resid, &p);
        assert!(tree.depth() <= 3);
        assert!(tree.n_leaves() <= 8);
    }

    #[test]
    fn leaf_cap_binds_before_depth_cap() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let resid: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let tree = fit_tree(&rows, &resid, &params(5, 1));
        assert_eq!(tree.n_leaves(), 5);
        assert_eq!(tree.split_order.len(), 4);
        assert!(tree.depth() <= 8);
    }

    #[test]
    fn min_samples_leaf_respected() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let mut resid = vec![0.0; 30];
        resid[0] = 100.0;
        let tree = fit_tree(&rows, &resid, &params(10, 5));
        for node in &tree.nodes {
            if let Node::Leaf { n_samples, .. } = node {
                assert!(*n_samples >= 5);
            }
        }
    }

    #[test]
    fn every_row_routes_to_one_leaf() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 5) as f64, (i / 3) as f64]).collect();
        let resid: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let tree = fit_tree(&rows, &resid, &params(6, 2));
        let mut counts = vec![0usize; tree.nodes.len()];
        for r in &rows {
            counts[tree.leaf_index(r)] += 1;
        }
        for (i, node) in tree.nodes.iter().enumerate() {
            match node {
                Node::Leaf { n_samples, .. } => assert_eq!(counts[i], *n_samples),
                Node::Split { .. } => assert_eq!(counts[i], 0),
            }
        }
    }
}
