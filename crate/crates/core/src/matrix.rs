//! Dense sample matrices, pairwise distance matrices and class labels.
//!
//! Everything here is stored row-major in a flat `Vec<f64>`. The methods built
//! on top are quadratic in the sample count anyway, so there is no sparse path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// `n` samples with `d` features each.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(Error::Shape(format!(
                "data matrix needs n >= 2 and d >= 1, got {n}x{d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bad.len(),
            });
        }
        Self::new(n, d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Keeps only the given feature columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.d) {
            return Err(Error::Shape(format!(
                "column {bad} out of range for {} dims",
                self.d
            )));
        }
        let values = (0..self.n)
            .flat_map(|i| cols.iter().map(move |&c| (i, c)))
            .map(|(i, c)| self.values[i * self.d + c])
            .collect();
        Self::new(self.n, cols.len(), values)
    }
}

/// Symmetric, zero-diagonal, non-negative, finite `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates every invariant; the first offending entry is reported.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Shape(format!(
                "distance matrix needs n >= 2, got {n}"
            )));
        }
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                let reason = if !v.is_finite() {
                    Some("non-finite")
                } else if i == j && v != 0.0 {
                    Some("non-zero diagonal")
                } else if v < 0.0 {
                    Some("negative")
                } else if v != values[j * n + i] {
                    Some("asymmetric")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(Error::NotADistance {
                        row: i,
                        col: j,
                        reason,
                    });
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        Self::new(n, rows.concat())
    }

    /// Builds a matrix from the upper triangle `f(i, j)`, `i < j`, mirrored.
    pub fn from_upper<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64,
    {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values)
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_raw(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Largest entry (the diagonal is zero, so this is the largest off-diagonal).
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// Integer class id per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<i64>);

impl LabelVector {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Shape("label vector is empty".into()));
        }
        Ok(Self(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn distinct(&self) -> usize {
        let mut v = self.0.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

/// Euclidean distances between all rows of `data`.
pub fn pairwise_euclidean(data: &DataMatrix) -> Result<DistanceMatrix> {
    let n = data.n();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let a = data.row(i);
        for (j, slot) in out.iter_mut().enumerate() {
            if j != i {
                let b = data.row(j);
                *slot = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
            }
        }
    });
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / n,
            col: pos % n,
        });
    }
    Ok(DistanceMatrix::from_raw(n, values))
}

/// Scales `d` so that its largest entry is exactly 1.
pub fn normalize_max(d: &DistanceMatrix) -> Result<DistanceMatrix> {
    let max = d.max();
    if max <= 0.0 {
        return Err(Error::Degenerate(
            "all-zero distance matrix has no scale".into(),
        ));
    }
    let values = d.as_slice().iter().map(|v| v / max).collect();
    Ok(DistanceMatrix::from_raw(d.n(), values))
}

/// 0 between samples sharing a label, 1 otherwise.
pub fn labels_to_distance(labels: &LabelVector) -> DistanceMatrix {
    let l = labels.as_slice();
    let n = l.len();
    let values = (0..n * n)
        .map(|idx| if l[idx / n] == l[idx % n] { 0.0 } else { 1.0 })
        .collect();
    DistanceMatrix::from_raw(n, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum MetricViolation {
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
    },
    NonZeroDiagonal {
        i: usize,
        value: f64,
    },
    /// Distinct samples at distance zero.
    Indiscernible {
        i: usize,
        j: usize,
    },
    /// `d(i, j) > d(i, via) + d(via, j)`.
    Triangle {
        i: usize,
        via: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub non_negativity: usize,
    pub symmetry: usize,
    pub identity: usize,
    pub triangle: usize,
    pub triples_checked: usize,
    pub exhaustive: bool,
    /// The first violations found, capped at [`ValidationReport::MAX_LISTED`].
    pub violations: Vec<MetricViolation>,
}

impl ValidationReport {
    pub const MAX_LISTED: usize = 64;

    pub fn total(&self) -> usize {
        self.non_negativity + self.symmetry + self.identity + self.triangle
    }

    pub fn is_metric(&self) -> bool {
        self.total() == 0
    }

    fn push(&mut self, v: MetricViolation) {
        match v {
            MetricViolation::Negative { .. } => self.non_negativity += 1,
            MetricViolation::Asymmetric { .. } => self.symmetry += 1,
            MetricViolation::NonZeroDiagonal { .. } | MetricViolation::Indiscernible { .. } => {
                self.identity += 1
            }
            MetricViolation::Triangle { .. } => self.triangle += 1,
        }
        if self.violations.len() < Self::MAX_LISTED {
            self.violations.push(v);
        }
    }
}

/// Below this size every triple is checked.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 50;

/// Checks the metric axioms on a distance matrix.
pub fn validate_metric(d: &DistanceMatrix, sample_triples: usize, seed: u64) -> ValidationReport {
    validate_entries(d.n(), d.as_slice(), sample_triples, seed)
}

/// Same as [`validate_metric`] for an arbitrary square array that need not
/// satisfy the [`DistanceMatrix`] invariants.
pub fn validate_entries(
    n: usize,
    values: &[f64],
    sample_triples: usize,
    seed: u64,
) -> ValidationReport {
    assert_eq!(values.len(), n * n, "values must be n x n");
    let at = |i: usize, j: usize| values[i * n + j];
    let mut report = ValidationReport::default();

    for i in 0..n {
        let dii = at(i, i);
        if dii != 0.0 {
            report.push(MetricViolation::NonZeroDiagonal { i, value: dii });
        }
        for j in 0..n {
            let v = at(i, j);
            if v < 0.0 {
                report.push(MetricViolation::Negative { i, j, value: v });
            }
            if j > i {
                if v != at(j, i) {
                    report.push(MetricViolation::Asymmetric { i, j });
                }
                if v == 0.0 {
                    report.push(MetricViolation::Indiscernible { i, j });
                }
            }
        }
    }

    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0);
    let mut check = |i: usize, via: usize, j: usize| {
        if at(i, j) > at(i, via) + at(via, j) + tol {
            report.push(MetricViolation::Triangle { i, via, j });
        }
    };

    let mut checked = 0;
    let exhaustive = n <= EXHAUSTIVE_TRIANGLE_LIMIT;
    if exhaustive {
        for i in 0..n {
            for j in 0..n {
                for via in 0..n {
                    check(i, via, j);
                    checked += 1;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..sample_triples {
            let i = rng.random_range(0..n);
            let via = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            check(i, via, j);
            checked += 1;
        }
    }
    report.triples_checked = checked;
    report.exhaustive = exhaustive;
    report
}
