//! Seeded synthetic datasets with two independent planted cluster structures.
//!
//! Values are generated sample by sample, dimension by dimension, from one
//! ChaCha stream, so a seed always yields the same dataset on every platform.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_range, Result};
use crate::matrix::{DataMatrix, LabelVector};

pub const MAIN_DEFAULT_N: usize = 2000;
pub const TUNING_DEFAULT_N: usize = 1000;

/// Selection probability and noise standard deviation of clusters 1..4.
pub const MAIN_CLUSTER_PROBS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
pub const MAIN_CLUSTER_STDDEVS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
/// Cluster centers are drawn with variance 2.
pub const MAIN_CENTER_VARIANCE: f64 = 2.0;
/// Noise variance around the tuning-set centers.
pub const TUNING_NOISE_VARIANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub data: DataMatrix,
    /// Cluster id in the block that serves as prior.
    pub labels_a: LabelVector,
    /// Cluster id in the hidden block.
    pub labels_b: LabelVector,
    pub prior_dims: Range<usize>,
    pub hidden_dims: Range<usize>,
}

impl SynthDataset {
    pub fn prior_block(&self) -> Result<DataMatrix> {
        self.data
            .select_columns(&self.prior_dims.clone().collect::<Vec<_>>())
    }

    pub fn hidden_block(&self) -> Result<DataMatrix> {
        self.data
            .select_columns(&self.hidden_dims.clone().collect::<Vec<_>>())
    }
}

fn pick(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (idx, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    probs.len() - 1
}

fn normal(stddev: f64) -> Normal<f64> {
    Normal::new(0.0, stddev).expect("finite positive stddev")
}

/// 14 dimensions: four clusters of unequal size and spread over dims 1-8,
/// four more over dims 9-12, and two pure noise dims.
pub fn gen_main(n: usize, seed: u64) -> Result<SynthDataset> {
    check_range("n", n as f64, n >= 8, ">= 8")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = normal(MAIN_CENTER_VARIANCE.sqrt());
    let centers_a: Vec<[f64; 8]> = (0..4)
        .map(|_| std::array::from_fn(|_| center.sample(&mut rng)))
        .collect();
    let centers_b: Vec<[f64; 4]> = (0..4)
        .map(|_| std::array::from_fn(|_| center.sample(&mut rng)))
        .collect();
    let unit = normal(1.0);

    let mut values = Vec::with_capacity(n * 14);
    let mut labels_a = Vec::with_capacity(n);
    let mut labels_b = Vec::with_capacity(n);
    for _ in 0..n {
        let a = pick(&mut rng, &MAIN_CLUSTER_PROBS);
        let noise = normal(MAIN_CLUSTER_STDDEVS[a]);
        values.extend(centers_a[a].iter().map(|c| c + noise.sample(&mut rng)));
        let b = pick(&mut rng, &MAIN_CLUSTER_PROBS);
        let noise = normal(MAIN_CLUSTER_STDDEVS[b]);
        values.extend(centers_b[b].iter().map(|c| c + noise.sample(&mut rng)));
        values.push(unit.sample(&mut rng));
        values.push(unit.sample(&mut rng));
        labels_a.push(a as i64);
        labels_b.push(b as i64);
    }
    Ok(SynthDataset {
        data: DataMatrix::new(n, 14, values)?,
        labels_a: LabelVector::new(labels_a)?,
        labels_b: LabelVector::new(labels_b)?,
        prior_dims: 0..8,
        hidden_dims: 8..12,
    })
}

/// 10 dimensions: four clusters at the unit vectors of dims 1-4, two at
/// `(1/3, 0)` and `(0, 1/3)` in dims 5-6, and four noise dims.
pub fn gen_tuning(n: usize, seed: u64) -> Result<SynthDataset> {
    check_range("n", n as f64, n >= 2, ">= 2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = normal(TUNING_NOISE_VARIANCE.sqrt());
    let unit = normal(1.0);
    let third = 1.0 / 3.0;

    let mut values = Vec::with_capacity(n * 10);
    let mut labels_a = Vec::with_capacity(n);
    let mut labels_b = Vec::with_capacity(n);
    for _ in 0..n {
        let a = rng.random_range(0..4usize);
        let b = rng.random_range(0..2usize);
        for dim in 0..4 {
            let c = if dim == a { 1.0 } else { 0.0 };
            values.push(c + noise.sample(&mut rng));
        }
        let cb = if b == 0 { [third, 0.0] } else { [0.0, third] };
        for c in cb {
            values.push(c + noise.sample(&mut rng));
        }
        for _ in 0..4 {
            values.push(unit.sample(&mut rng));
        }
        labels_a.push(a as i64);
        labels_b.push(b as i64);
    }
    Ok(SynthDataset {
        data: DataMatrix::new(n, 10, values)?,
        labels_a: LabelVector::new(labels_a)?,
        labels_b: LabelVector::new(labels_b)?,
        prior_dims: 0..4,
        hidden_dims: 4..6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(labels: &LabelVector, k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &l in labels.as_slice() {
            c[l as usize] += 1;
        }
        c
    }

    fn column_stats(data: &DataMatrix, col: usize) -> (f64, f64) {
        let n = data.n() as f64;
        let vals: Vec<f64> = (0..data.n()).map(|i| data.row(i)[col]).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn main_proportions_match() {
        let ds = gen_main(2000, 11).unwrap();
        assert_eq!(ds.data.dims(), 14);
        for labels in [&ds.labels_a, &ds.labels_b] {
            let c = counts(labels, 4);
            for (k, &p) in MAIN_CLUSTER_PROBS.iter().enumerate() {
                let se = (p * (1.0 - p) / 2000.0).sqrt();
                let emp = c[k] as f64 / 2000.0;
                assert!((emp - p).abs() <= 3.0 * se, "cluster {k}: {emp}");
            }
        }
    }

    #[test]
    fn main_noise_dims_are_standard_normal() {
        let ds = gen_main(2000, 12).unwrap();
        for col in [12, 13] {
            let (mean, sd) = column_stats(&ds.data, col);
            assert!(mean.abs() < 0.07, "{mean}");
            assert!((sd - 1.0).abs() < 0.05, "{sd}");
        }
    }

    #[test]
    fn main_cluster_spread_follows_size() {
        let ds = gen_main(2000, 13).unwrap();
        for (a, &expect) in MAIN_CLUSTER_STDDEVS.iter().enumerate() {
            let members: Vec<usize> = (0..2000)
                .filter(|&i| ds.labels_a.as_slice()[i] == a as i64)
                .collect();
            let m = members.len() as f64;
            let mut sq = 0.0;
            for col in 0..8 {
                let mean = members.iter().map(|&i| ds.data.row(i)[col]).sum::<f64>() / m;
                sq += members
                    .iter()
                    .map(|&i| (ds.data.row(i)[col] - mean).powi(2))
                    .sum::<f64>()
                    / (m - 1.0);
            }
            let sd = (sq / 8.0).sqrt();
            assert!((sd - expect).abs() < 0.1 * expect, "{a}: {sd}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(gen_main(100, 5).unwrap(), gen_main(100, 5).unwrap());
        assert_ne!(
            gen_main(100, 5).unwrap().data,
            gen_main(100, 6).unwrap().data
        );
        assert_eq!(gen_tuning(100, 5).unwrap(), gen_tuning(100, 5).unwrap());
        assert!(gen_main(7, 0).is_err());
        assert!(gen_tuning(1, 0).is_err());
    }

    #[test]
    fn tuning_centers_recovered() {
        let ds = gen_tuning(1000, 14).unwrap();
        assert_eq!(ds.data.dims(), 10);
        for a in 0..4 {
            let members: Vec<usize> = (0..1000)
                .filter(|&i| ds.labels_a.as_slice()[i] == a as i64)
                .collect();
            for col in 0..4 {
                let mean = members.iter().map(|&i| ds.data.row(i)[col]).sum::<f64>()
                    / members.len() as f64;
                let target = if col == a { 1.0 } else { 0.0 };
                assert!((mean - target).abs() < 0.02, "a={a} col={col}: {mean}");
            }
        }
        let mean_b = |b: i64| -> [f64; 2] {
            let m: Vec<usize> = (0..1000)
                .filter(|&i| ds.labels_b.as_slice()[i] == b)
                .collect();
            let f = |c: usize| m.iter().map(|&i| ds.data.row(i)[c]).sum::<f64>() / m.len() as f64;
            [f(4), f(5)]
        };
        let (b0, b1) = (mean_b(0), mean_b(1));
        let dist = ((b0[0] - b1[0]).powi(2) + (b0[1] - b1[1]).powi(2)).sqrt();
        assert!((dist - (2.0f64).sqrt() / 3.0).abs() < 0.02, "{dist}");
    }

    #[test]
    fn cluster_assignments_are_independent() {
        let ds = gen_main(2000, 15).unwrap();
        let (a, b) = (ds.labels_a.as_slice(), ds.labels_b.as_slice());
        let mut joint = [[0.0f64; 4]; 4];
        for i in 0..2000 {
            joint[a[i] as usize][b[i] as usize] += 1.0 / 2000.0;
        }
        let pa: Vec<f64> = (0..4).map(|x| joint[x].iter().sum()).collect();
        let pb: Vec<f64> = (0..4).map(|y| (0..4).map(|x| joint[x][y]).sum()).collect();
        let mut mi = 0.0;
        for x in 0..4 {
            for y in 0..4 {
                if joint[x][y] > 0.0 {
                    mi += joint[x][y] * (joint[x][y] / (pa[x] * pb[y])).log2();
                }
            }
        }
        assert!(mi < 0.01, "{mi}");
        assert!(ds.data.as_slice().iter().all(|v| v.is_finite()));
    }
}
