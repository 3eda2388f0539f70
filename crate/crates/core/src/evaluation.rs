//! Neighborhood overlap scores (NOS) and their area relative to the id-line.
//!
//! For a neighborhood size `k`, the id-line value `k / (n - 1)` is the
//! expected overlap fraction of a uniformly random `k`-subset of the other
//! `n - 1` samples. Curves cover every `k` in `1..n`; neighbor lists are
//! extended one rank at a time, so the full curve costs one sort per row.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{DistanceMatrix, LabelVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NosCurve {
    pub n: usize,
    pub ks: Vec<usize>,
    pub scores: Vec<f64>,
    pub area: f64,
}

impl NosCurve {
    fn from_scores(n: usize, scores: Vec<f64>) -> Self {
        let ks = (1..n).collect();
        let mut curve = Self {
            n,
            ks,
            scores,
            area: 0.0,
        };
        curve.area = area_between(&curve);
        curve
    }
}

/// Row neighbors of `i` by ascending distance, ties by ascending index.
pub fn neighbor_order(d: &DistanceMatrix, i: usize) -> Vec<usize> {
    let row = d.row(i);
    let mut order: Vec<usize> = (0..d.n()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| match row[a].total_cmp(&row[b]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    order
}

/// The `k` nearest neighbors of every sample.
pub fn knn_sets(d: &DistanceMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = d.n();
    if k == 0 || k >= n {
        return Err(Error::OutOfRange {
            name: "k",
            value: k as f64,
            expected: "1 <= k <= n - 1",
        });
    }
    Ok((0..n)
        .map(|i| {
            let mut set = neighbor_order(d, i);
            set.truncate(k);
            set
        })
        .collect())
}

fn check_n(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// `NOS(D, D', k) = 1/(n k) * sum_i |kNN_D(i) ∩ kNN_D'(i)|` for all `k`.
pub fn nos_distance(d: &DistanceMatrix, d_other: &DistanceMatrix) -> Result<NosCurve> {
    let n = d.n();
    check_n(n, d_other.n())?;
    // overlap counts are integers, so the sum over rows is exact
    let mut overlap = vec![0u64; n - 1];
    let mut in_a = vec![false; n];
    let mut in_b = vec![false; n];
    for i in 0..n {
        let a = neighbor_order(d, i);
        let b = neighbor_order(d_other, i);
        in_a.iter_mut().for_each(|v| *v = false);
        in_b.iter_mut().for_each(|v| *v = false);
        let mut shared = 0u64;
        for (k, (&x, &y)) in a.iter().zip(&b).enumerate() {
            in_a[x] = true;
            shared += u64::from(in_b[x]);
            in_b[y] = true;
            shared += u64::from(in_a[y]);
            overlap[k] += shared;
        }
    }
    let scores = overlap
        .iter()
        .enumerate()
        .map(|(k, &s)| s as f64 / (n as f64 * (k + 1) as f64))
        .collect();
    Ok(NosCurve::from_scores(n, scores))
}

/// Label overlap: the mean over samples of the fraction of same-label
/// samples found among the `k` nearest neighbors.
///
/// Samples that are alone in their class have no same-label neighbors and
/// are left out of the mean.
pub fn nos_label(d: &DistanceMatrix, labels: &LabelVector) -> Result<NosCurve> {
    let n = d.n();
    check_n(n, labels.len())?;
    let l = labels.as_slice();
    let mut sums = vec![0.0; n - 1];
    let mut rows = 0usize;
    for i in 0..n {
        let class_size = l.iter().filter(|&&c| c == l[i]).count() - 1;
        if class_size == 0 {
            continue;
        }
        rows += 1;
        let inv = 1.0 / class_size as f64;
        let mut hits = 0usize;
        for (k, j) in neighbor_order(d, i).into_iter().enumerate() {
            hits += usize::from(l[j] == l[i]);
            sums[k] += hits as f64 * inv;
        }
    }
    let scores = if rows == 0 {
        vec![0.0; n - 1]
    } else {
        sums.iter().map(|s| s / rows as f64).collect()
    };
    Ok(NosCurve::from_scores(n, scores))
}

/// `1/(n-1) * sum_k (score(k) - k/(n-1))`; positive above the id-line.
pub fn area_between(curve: &NosCurve) -> f64 {
    let m = (curve.n - 1) as f64;
    let total: f64 = curve
        .ks
        .iter()
        .zip(&curve.scores)
        .map(|(&k, &s)| s - k as f64 / m)
        .sum();
    total / m
}
