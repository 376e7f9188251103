//! Independent reference implementations used by the integration tests.
//! Deliberately naive: exhaustive split enumeration over row subsets, no
//! presorting, no column dedup.

#![allow(dead_code, clippy::needless_range_loop)]

use linkpred::gbrt::{split_indices, GbrtParams, Node, RegressionTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ONode {
    Leaf { value: f64, n: usize },
    Split { feature: usize, threshold: f64, gain: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct OSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

fn mean(resid: &[f64], members: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in members {
        s += resid[i];
    }
    s / members.len() as f64
}

/// Every (feature, threshold) with both sides at least `min_leaf`, scored by
/// SSE reduction. The winner is the largest gain; candidates within `TOL`
/// of it go to the lowest feature, then the lowest threshold.
pub fn best_split(rows: &[Vec<f64>], resid: &[f64], members: &[usize], min_leaf: usize) -> Option<OSplit> {
    let n = members.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let sq: f64 = members.iter().map(|&i| resid[i] * resid[i]).sum();
    let mut cands: Vec<OSplit> = Vec::new();
    for f in 0..rows[0].len() {
        let mut vals: Vec<f64> = members.iter().map(|&i| rows[i][f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut thr = (a + b) / 2.0;
            if thr >= b {
                thr = a;
            }
            let left: Vec<usize> = members.iter().copied().filter(|&i| rows[i][f] <= thr).collect();
            let right: Vec<usize> = members.iter().copied().filter(|&i| rows[i][f] > thr).collect();
            if left.len() < min_leaf.max(1) || right.len() < min_leaf.max(1) {
                continue;
            }
            // SSE(parent) - SSE(left) - SSE(right), in closed form.
            let (nl, nr) = (left.len() as f64, right.len() as f64);
            let d = mean(resid, &left) - mean(resid, &right);
            let gain = nl * nr / n as f64 * d * d;
            if gain > TOL * sq {
                cands.push(OSplit { feature: f, threshold: thr, gain, left, right });
            }
        }
    }
    let top = cands.iter().map(|c| c.gain).fold(f64::NEG_INFINITY, f64::max);
    cands
        .into_iter()
        .filter(|c| top - c.gain <= TOL * top.abs())
        .min_by(|a, b| (a.feature, a.threshold).partial_cmp(&(b.feature, b.threshold)).unwrap())
}

/// Leaf-wise growth: always expand the open leaf whose best split has the
/// largest gain (ties within `TOL` to the lowest node id).
pub fn grow(rows: &[Vec<f64>], resid: &[f64], params: &GbrtParams) -> Vec<ONode> {
    let all: Vec<usize> = (0..rows.len()).collect();
    let mut nodes = vec![ONode::Leaf { value: mean(resid, &all), n: all.len() }];
    let split_of = |m: &[usize], depth: usize| {
        if depth < params.max_depth {
            best_split(rows, resid, m, params.min_samples_leaf)
        } else {
            None
        }
    };
    // (node id, members, depth, best split)
    let mut open = vec![(0usize, all.clone(), 0usize, split_of(&all, 0))];
    let mut leaves = 1;
    while leaves < params.num_leaves {
        let top = open
            .iter()
            .filter_map(|o| o.3.as_ref().map(|s| s.gain))
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            break;
        }
        let k = open
            .iter()
            .enumerate()
            .filter(|(_, o)| o.3.as_ref().is_some_and(|s| top - s.gain <= TOL * top.abs()))
            .min_by_key(|(_, o)| o.0)
            .map(|(k, _)| k)
            .unwrap();
        let (id, _, depth, split) = open.remove(k);
        let s = split.unwrap();
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(ONode::Leaf { value: mean(resid, &s.left), n: s.left.len() });
        nodes.push(ONode::Leaf { value: mean(resid, &s.right), n: s.right.len() });
        nodes[id] = ONode::Split { feature: s.feature, threshold: s.threshold, gain: s.gain, left: l, right: r };
        leaves += 1;
        open.push((l, s.left.clone(), depth + 1, split_of(&s.left, depth + 1)));
        open.push((r, s.right.clone(), depth + 1, split_of(&s.right, depth + 1)));
    }
    nodes
}

pub fn eval(nodes: &[ONode], x: &[f64]) -> f64 {
    let mut i = 0;
    loop {
        match &nodes[i] {
            ONode::Leaf { value, .. } => return *value,
            ONode::Split { feature, threshold, left, right, .. } => {
                i = if x[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}

/// Walks a library tree without using its own traversal.
pub fn traverse(tree: &RegressionTree<f64>, x: &[f64]) -> f64 {
    let mut i = 0;
    loop {
        match &tree.nodes[i] {
            Node::Leaf { value, .. } => return *value,
            Node::Split { feature, threshold, left, right, .. } => {
                i = if x[*feature] > *threshold { *right } else { *left };
            }
        }
    }
}

pub struct OModel {
    pub base: f64,
    pub lr: f64,
    pub trees: Vec<Vec<ONode>>,
    pub best_round: usize,
    pub update_rmse: Vec<f64>,
    pub validation_rmse: Vec<f64>,
}

impl OModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for t in &self.trees[..self.best_round] {
            s += eval(t, x);
        }
        self.base + self.lr * s
    }
}

fn rmse(y: &[f64], pred: &[f64]) -> f64 {
    let se: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    (se / y.len() as f64).sqrt()
}

/// Boosting with the library's update/validation split (the split is a
/// seeded shuffle, not part of what is being checked).
pub fn train(rows: &[Vec<f64>], labels: &[f64], params: &GbrtParams) -> OModel {
    let (upd, val) = split_indices(rows.len(), params.split_fraction, params.rng_seed).unwrap();
    let xu: Vec<Vec<f64>> = upd.iter().map(|&i| rows[i].clone()).collect();
    let yu: Vec<f64> = upd.iter().map(|&i| labels[i]).collect();
    let xv: Vec<Vec<f64>> = val.iter().map(|&i| rows[i].clone()).collect();
    let yv: Vec<f64> = val.iter().map(|&i| labels[i]).collect();
    let base = yu.iter().sum::<f64>() / yu.len() as f64;
    let lr = params.learning_rate;
    let mut su = vec![0.0; yu.len()];
    let mut sv = vec![0.0; yv.len()];
    let mut m = OModel { base, lr, trees: Vec::new(), best_round: 0, update_rmse: Vec::new(), validation_rmse: Vec::new() };
    let mut best = f64::INFINITY;
    for round in 1..=params.num_rounds {
        let resid: Vec<f64> = yu.iter().zip(&su).map(|(y, s)| y - (base + lr * s)).collect();
        let tree = grow(&xu, &resid, params);
        if let [ONode::Leaf { value, n }] = tree.as_slice() {
            let sq: f64 = resid.iter().map(|r| r * r).sum();
            if round > 1 && *n as f64 * value * value <= TOL * sq {
                break;
            }
        }
        for (k, x) in xu.iter().enumerate() {
            su[k] += eval(&tree, x);
        }
        for (k, x) in xv.iter().enumerate() {
            sv[k] += eval(&tree, x);
        }
        m.trees.push(tree);
        let pu: Vec<f64> = su.iter().map(|s| base + lr * s).collect();
        let pv: Vec<f64> = sv.iter().map(|s| base + lr * s).collect();
        m.update_rmse.push(rmse(&yu, &pu));
        let v = rmse(&yv, &pv);
        m.validation_rmse.push(v);
        if v < best {
            best = v;
            m.best_round = round;
        }
        if round - m.best_round >= params.early_stop_rounds {
            break;
        }
    }
    m
}

/// Small random regression problem mixing continuous, discrete, duplicate
/// and constant columns so ties and dedup paths are exercised.
pub fn random_dataset(seed: u64, max_n: usize, max_d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=max_n);
    let d = rng.random_range(1..=max_d);
    let kinds: Vec<u8> = (0..d).map(|_| rng.random_range(0..4)).collect();
    let mut rows = vec![vec![0.0; d]; n];
    for j in 0..d {
        for i in 0..n {
            rows[i][j] = match kinds[j] {
                0 => rng.random_range(-3.0..3.0),
                1 => rng.random_range(0..4) as f64,
                2 if j > 0 => rows[i][j - 1] * 2.0 + 1.0,
                2 => rng.random_range(0..2) as f64,
                _ => 7.0,
            };
        }
    }
    let labels = rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().enumerate().map(|(j, v)| v * ((j % 3) as f64 - 1.0)).sum();
            s.sin() * 3.0 + if r[0] > 0.5 { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5)
        })
        .collect();
    (rows, labels)
}

pub fn nodes_match(lib: &RegressionTree<f64>, oracle: &[ONode]) -> Result<(), String> {
    if lib.nodes.len() != oracle.len() {
        return Err(format!("{} nodes vs oracle {}", lib.nodes.len(), oracle.len()));
    }
    for (k, (a, b)) in lib.nodes.iter().zip(oracle).enumerate() {
        let ok = match (a, b) {
            (Node::Leaf { value, n_samples }, ONode::Leaf { value: v, n }) => {
                n_samples == n && (value - v).abs() <= TOL * (1.0 + v.abs())
            }
            (
                Node::Split { feature, threshold, left, right, gain, .. },
                ONode::Split { feature: f, threshold: t, left: l, right: r, gain: g },
            ) => feature == f && threshold == t && left == l && right == r && (gain - g).abs() <= 1e-9 * g.abs().max(1e-12),
            _ => false,
        };
        if !ok {
            return Err(format!("node {k}: {a:?} vs oracle {b:?}"));
        }
    }
    Ok(())
}
