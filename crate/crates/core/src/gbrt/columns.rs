//! Column-major view of the update set used for exact split finding.
//!
//! Constant columns can never split and are dropped. Columns that induce the
//! same sample ordering as an earlier column produce the same partitions and
//! gains, so only the lowest-indexed one is kept; this is what the
//! lowest-feature-index tie rule would select anyway.

use std::collections::HashMap;

use crate::Scalar;

use super::FeatureRow;

const BLOCK: usize = 256;

fn mix(h: u64, v: u64) -> u64 {
    (h.rotate_left(5) ^ v).wrapping_mul(0x517c_c1b7_2722_0a95)
}

pub(crate) struct Columns<T> {
    /// Number of samples.
    pub n: usize,
    /// Original feature index of each kept column.
    pub feature: Vec<usize>,
    /// Rank of each sample's value among the column's distinct values;
    /// column-major, `n` entries per column.
    pub ranks: Vec<u32>,
    /// Sorted distinct values per column.
    pub values: Vec<Vec<T>>,
    /// Sample indices sorted by rank (stable); column-major.
    pub order: Vec<u32>,
}

impl<T: Scalar> Columns<T> {
    pub fn build<R: FeatureRow<T>>(rows: &[R], subset: &[usize]) -> Self {
        let n = subset.len();
        let dim = subset.first().map_or(0, |&i| rows[i].dim());

        // Pass 1: drop constant columns and exact duplicates by value.
        let mut raw: Vec<Vec<T>> = Vec::new();
        let mut raw_feature = Vec::new();
        let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut buf = vec![T::zero(); BLOCK * n];
        let mut tmp = [T::zero(); BLOCK];
        for j0 in (0..dim).step_by(BLOCK) {
            let b = BLOCK.min(dim - j0);
            for (i, &s) in subset.iter().enumerate() {
                rows[s].copy_range(j0, &mut tmp[..b]);
                for (k, &v) in tmp[..b].iter().enumerate() {
                    buf[k * n + i] = v;
                }
            }
            for k in 0..b {
                let col = &buf[k * n..(k + 1) * n];
                if col.iter().all(|&v| v == col[0]) {
                    continue;
                }
                let h = col.iter().fold(0u64, |h, v| mix(h, v.to_f64_lossy().to_bits()));
                let slot = by_hash.entry(h).or_default();
                if slot.iter().any(|&r| raw[r] == col) {
                    continue;
                }
                slot.push(raw.len());
                raw.push(col.to_vec());
                raw_feature.push(j0 + k);
            }
        }

        // Pass 2: rank-encode and drop columns with an identical ordering.
        let mut out = Columns {
            n,
            feature: Vec::new(),
            ranks: Vec::new(),
            values: Vec::new(),
            order: Vec::new(),
        };
        let mut by_pattern: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let mut ranks = vec![0u32; n];
        for (col, feature) in raw.iter().zip(raw_feature) {
            idx.sort_by(|&a, &b| col[a as usize].partial_cmp(&col[b as usize]).unwrap_or(std::cmp::Ordering::Equal));
            let mut distinct = Vec::new();
            for &i in &idx {
                let v = col[i as usize];
                if distinct.last() != Some(&v) {
                    distinct.push(v);
                }
                ranks[i as usize] = (distinct.len() - 1) as u32;
            }
            let h = ranks.iter().fold(distinct.len() as u64, |h, &r| mix(h, r as u64));
            let slot = by_pattern.entry(h).or_default();
            if slot.iter().any(|&c| out.ranks[c * n..(c + 1) * n] == ranks[..]) {
                continue;
            }
            slot.push(out.feature.len());
            out.feature.push(feature);
            out.ranks.extend_from_slice(&ranks);
            out.values.push(distinct);
        }

        // Stable counting sort of sample indices by rank, per column.
        out.order = vec![0u32; out.ranks.len()];
        for c in 0..out.feature.len() {
            let ranks = &out.ranks[c * n..(c + 1) * n];
            let mut start = vec![0u32; out.values[c].len() + 1];
            for &r in ranks {
                start[r as usize + 1] += 1;
            }
            for r in 1..start.len() {
                start[r] += start[r - 1];
            }
            let order = &mut out.order[c * n..(c + 1) * n];
            for (i, &r) in ranks.iter().enumerate() {
                order[start[r as usize] as usize] = i as u32;
                start[r as usize] += 1;
            }
        }
        out
    }

    pub fn n_columns(&self) -> usize {
        self.feature.len()
    }

    #[inline]
    pub fn rank(&self, col: usize, sample: u32) -> u32 {
        self.ranks[col * self.n + sample as usize]
    }

    /// Split threshold between two ranks present in a node: the midpoint of
    /// their values, or the lower value when the midpoint rounds up onto the
    /// upper one.
    pub fn threshold(&self, col: usize, lower: u32, upper: u32) -> T {
        let a = self.values[col][lower as usize];
        let b = self.values[col][upper as usize];
        let two = T::one() + T::one();
        let mut mid = (a + b) / two;
        if !mid.is_finite() {
            mid = a + (b - a) / two;
        }
        if mid < b && mid >= a {
            mid
        } else {
            a
        }
    }
}
