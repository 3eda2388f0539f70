//! Neighbor probabilities: Gaussian conditionals calibrated to a perplexity,
//! their symmetrized joint form, and Student-t joint probabilities of an
//! embedding.

use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::matrix::DistanceMatrix;
use crate::optimizer::Embedding;

/// Floor applied to every off-diagonal probability after normalization.
pub const PROB_FLOOR: f64 = 1e-12;

/// Relative tolerance on the achieved perplexity.
pub const PERPLEXITY_TOL: f64 = 1e-5;
/// Iteration budget for bracketing plus bisection, per row.
pub const MAX_SEARCH_ITERS: usize = 200;
pub const SIGMA_MIN: f64 = 1e-20;
pub const SIGMA_MAX: f64 = 1e20;

/// Row-stochastic matrix of `p_{j|i}` with the bandwidth used for each row.
#[derive(Debug, Clone)]
pub struct ConditionalAffinity {
    n: usize,
    rows: Vec<f64>,
    sigmas: Vec<f64>,
    /// Rows whose target perplexity was not reached within the search budget.
    unconverged: Vec<usize>,
}

impl ConditionalAffinity {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn unconverged(&self) -> &[usize] {
        &self.unconverged
    }

    /// Builds from explicit rows; each row must sum to 1 and have a zero diagonal.
    pub fn from_rows(n: usize, rows: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        if rows.len() != n * n || sigmas.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: rows.len(),
            });
        }
        for i in 0..n {
            let r = &rows[i * n..(i + 1) * n];
            let sum: f64 = r.iter().sum();
            check_range("row sum", sum, (sum - 1.0).abs() <= 1e-8, "1 within 1e-8")?;
            check_range("p_{i|i}", r[i], r[i] == 0.0, "0")?;
            check_range("sigma", sigmas[i], sigmas[i] > 0.0, "> 0")?;
        }
        Ok(Self {
            n,
            rows,
            sigmas,
            unconverged: Vec::new(),
        })
    }
}

/// Perplexity `2^H` (H in bits) of the Gaussian kernel row centered at
/// `self_index` with bandwidth `sigma`, written into `probs`.
pub fn conditional_row(dists: &[f64], self_index: usize, sigma: f64, probs: &mut [f64]) -> f64 {
    let min_sq = dists
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != self_index)
        .map(|(_, &d)| d * d)
        .fold(f64::INFINITY, f64::min);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, p)) in dists.iter().zip(probs.iter_mut()).enumerate() {
        if j == self_index {
            *p = 0.0;
            continue;
        }
        // shifted by the nearest neighbor so the largest weight is exactly 1
        let a = (d * d - min_sq) * inv;
        let w = (-a).exp();
        *p = w;
        sum += w;
        weighted += w * a;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    let entropy_nats = sum.ln() + weighted / sum;
    let entropy_bits = entropy_nats / std::f64::consts::LN_2;
    entropy_bits.exp2()
}

struct RowFit {
    sigma: f64,
    converged: bool,
}

fn fit_row(dists: &[f64], i: usize, target: f64, probs: &mut [f64]) -> RowFit {
    let close = |perp: f64| ((perp - target) / target).abs() <= PERPLEXITY_TOL;
    let mut iters = 0;
    let mut sigma = 1.0;
    let mut perp = conditional_row(dists, i, sigma, probs);
    iters += 1;
    if close(perp) {
        return RowFit {
            sigma,
            converged: true,
        };
    }

    // perplexity grows with sigma
    let (mut lo, mut hi);
    if perp < target {
        lo = sigma;
        loop {
            sigma *= 2.0;
            if sigma > SIGMA_MAX || iters >= MAX_SEARCH_ITERS {
                let sigma = sigma.min(SIGMA_MAX);
                conditional_row(dists, i, sigma, probs);
                return RowFit {
                    sigma,
                    converged: false,
                };
            }
            perp = conditional_row(dists, i, sigma, probs);
            iters += 1;
            if close(perp) {
                return RowFit {
                    sigma,
                    converged: true,
                };
            }
            if perp > target {
                hi = sigma;
                break;
            }
            lo = sigma;
        }
    } else {
        hi = sigma;
        loop {
            sigma *= 0.5;
            if sigma < SIGMA_MIN || iters >= MAX_SEARCH_ITERS {
                let sigma = sigma.max(SIGMA_MIN);
                conditional_row(dists, i, sigma, probs);
                return RowFit {
                    sigma,
                    converged: false,
                };
            }
            perp = conditional_row(dists, i, sigma, probs);
            iters += 1;
            if close(perp) {
                return RowFit {
                    sigma,
                    converged: true,
                };
            }
            if perp < target {
                lo = sigma;
                break;
            }
            hi = sigma;
        }
    }

    while iters < MAX_SEARCH_ITERS {
        sigma = 0.5 * (lo + hi);
        perp = conditional_row(dists, i, sigma, probs);
        iters += 1;
        if close(perp) {
            return RowFit {
                sigma,
                converged: true,
            };
        }
        if perp < target {
            lo = sigma;
        } else {
            hi = sigma;
        }
    }
    RowFit {
        sigma,
        converged: false,
    }
}

/// Calibrates one Gaussian bandwidth per row so that each conditional row
/// reaches the requested perplexity.
///
/// Rows where the target cannot be reached (for example a row whose
/// distances are all equal, which is pinned at perplexity `n - 1`) keep the
/// last bandwidth tried and are listed in
/// [`ConditionalAffinity::unconverged`].
pub fn calibrate_conditional(d: &DistanceMatrix, perplexity: f64) -> Result<ConditionalAffinity> {
    let n = d.n();
    check_range(
        "perplexity",
        perplexity,
        perplexity > 1.0 && perplexity < n as f64,
        "1 < perplexity < n",
    )?;
    for i in 0..n {
        if d.row(i).iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroRow(i));
        }
    }

    let mut rows = vec![0.0; n * n];
    let fits: Vec<RowFit> = rows
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, probs)| fit_row(d.row(i), i, perplexity, probs))
        .collect();

    let sigmas = fits.iter().map(|f| f.sigma).collect();
    let unconverged = fits
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.converged)
        .map(|(i, _)| i)
        .collect();
    Ok(ConditionalAffinity {
        n,
        rows,
        sigmas,
        unconverged,
    })
}

/// Symmetric joint probabilities over ordered pairs, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAffinity {
    n: usize,
    values: Vec<f64>,
}

impl JointAffinity {
    /// Normalizes symmetric non-negative weights over the off-diagonal and
    /// applies the probability floor.
    pub fn from_weights(n: usize, weights: &[f64]) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: weights.len(),
            });
        }
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if i != j {
                    check_range("weight", w, w.is_finite() && w >= 0.0, "finite, >= 0")?;
                    check_range("weight symmetry", w, w == weights[j * n + i], "symmetric")?;
                    total += w;
                }
            }
        }
        if total <= 0.0 {
            return Err(Error::Degenerate("weights sum to zero".into()));
        }
        let values = (0..n * n)
            .map(|idx| {
                if idx / n == idx % n {
                    0.0
                } else {
                    (weights[idx] / total).max(PROB_FLOOR)
                }
            })
            .collect();
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `p_ij = (p_{j|i} + p_{i|j}) / 2n`, floored.
pub fn symmetrize(c: &ConditionalAffinity) -> JointAffinity {
    let n = c.n();
    let scale = 1.0 / (2.0 * n as f64);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let p = (c.get(i, j) + c.get(j, i)) * scale;
                values[i * n + j] = p.max(PROB_FLOOR);
            }
        }
    }
    JointAffinity { n, values }
}

/// Convenience: calibrate and symmetrize in one go.
pub fn joint_affinity(
    d: &DistanceMatrix,
    perplexity: f64,
) -> Result<(JointAffinity, ConditionalAffinity)> {
    let c = calibrate_conditional(d, perplexity)?;
    Ok((symmetrize(&c), c))
}

/// Student-t joint probabilities of an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct LowDimAffinity {
    n: usize,
    values: Vec<f64>,
    normalizer: f64,
}

impl LowDimAffinity {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `Z`, the sum of the unnormalized kernel over all ordered pairs.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }
}

#[inline]
pub(crate) fn student_t_kernel(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    1.0 / (1.0 + dx * dx + dy * dy)
}

/// `q_ij = (1 + |y_i - y_j|^2)^-1 / Z`, floored after normalization.
pub fn lowdim_affinity(y: &Embedding) -> LowDimAffinity {
    let pts = y.points();
    let n = pts.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = student_t_kernel(&pts[i], &pts[j]);
            }
        }
    }
    let normalizer: f64 = values.iter().sum();
    for (idx, v) in values.iter_mut().enumerate() {
        if idx / n != idx % n {
            *v = (*v / normalizer).max(PROB_FLOOR);
        }
    }
    LowDimAffinity {
        n,
        values,
        normalizer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{pairwise_euclidean, DataMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(
            n,
            d,
            (0..n * d).map(|_| rng.random::<f64>() * 10.0).collect(),
        )
        .unwrap()
    }

    fn entropy_bits(row: &[f64]) -> f64 {
        -row.iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }

    #[test]
    fn achieves_target_perplexity() {
        let d = pairwise_euclidean(&random_points(100, 5, 1)).unwrap();
        for target in [5.0, 30.0, 80.0] {
            let c = calibrate_conditional(&d, target).unwrap();
            assert!(c.unconverged().is_empty());
            for i in 0..100 {
                let row = c.row(i);
                assert_eq!(row[i], 0.0);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
                // oracle: recompute entropy directly from the returned row
                let perp = entropy_bits(row).exp2();
                assert!(
                    ((perp - target) / target).abs() <= PERPLEXITY_TOL,
                    "{perp} vs {target}"
                );
                assert!(c.sigmas()[i] > 0.0);
            }
        }
    }

    #[test]
    fn equal_distances_give_uniform_row() {
        let n = 6;
        let d = DistanceMatrix::from_upper(n, |_, _| 2.0).unwrap();
        let c = calibrate_conditional(&d, 3.0).unwrap();
        assert_eq!(c.unconverged().len(), n);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 0.0 } else { 1.0 / 5.0 };
                assert!((c.get(i, j) - expect).abs() < 1e-15);
            }
            let mut probs = vec![0.0; n];
            for sigma in [1e-3, 1.0, 1e3] {
                let perp = conditional_row(d.row(i), i, sigma, &mut probs);
                assert!((perp - 5.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_row_is_an_error() {
        let d = DistanceMatrix::new(3, vec![0.0; 9]).unwrap();
        assert!(matches!(
            calibrate_conditional(&d, 1.5),
            Err(Error::ZeroRow(0))
        ));
    }

    #[test]
    fn perplexity_out_of_range() {
        let d = pairwise_euclidean(&random_points(5, 2, 0)).unwrap();
        assert!(calibrate_conditional(&d, 1.0).is_err());
        assert!(calibrate_conditional(&d, 5.0).is_err());
    }

    #[test]
    fn label_ties_are_tolerated() {
        // 0/1 distances with clusters larger than the target perplexity
        let labels: Vec<i64> = (0..40).map(|i| i % 2).collect();
        let d =
            crate::matrix::labels_to_distance(&crate::matrix::LabelVector::new(labels).unwrap());
        let c = calibrate_conditional(&d, 4.0).unwrap();
        for i in 0..40 {
            let s: f64 = c.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-8);
            assert!(c.row(i).iter().all(|p| p.is_finite()));
        }
        assert_eq!(c.unconverged().len(), 40);
    }

    #[test]
    fn far_clusters_keep_mass_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rows = Vec::new();
        for c in 0..2 {
            for _ in 0..20 {
                rows.push(vec![
                    c as f64 * 100.0 + rng.random::<f64>(),
                    rng.random::<f64>(),
                ]);
            }
        }
        let d = pairwise_euclidean(&DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let c = calibrate_conditional(&d, 5.0).unwrap();
        for i in 0..40 {
            let mass: f64 = (0..40)
                .filter(|&j| j / 20 == i / 20)
                .map(|j| c.get(i, j))
                .sum();
            assert!(mass >= 0.99);
        }
    }

    #[test]
    fn perplexity_is_monotone_in_sigma() {
        let d = pairwise_euclidean(&random_points(60, 4, 5)).unwrap();
        let mut probs = vec![0.0; 60];
        for i in (0..60).step_by(7) {
            let mut last = 0.0;
            for e in -40..40 {
                let sigma = 2f64.powf(e as f64 * 0.25);
                let perp = conditional_row(d.row(i), i, sigma, &mut probs);
                assert!(perp >= last - 1e-9, "row {i}: {perp} < {last}");
                last = perp;
            }
        }
    }

    #[test]
    fn symmetrize_hand_case() {
        let rows = vec![
            0.0, 0.7, 0.3, //
            0.3, 0.0, 0.7, //
            0.5, 0.5, 0.0,
        ];
        let c = ConditionalAffinity::from_rows(3, rows, vec![1.0; 3]).unwrap();
        let p = symmetrize(&c);
        assert!((p.get(0, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.get(0, 1), p.get(1, 0));
        assert!((p.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_conditionals_divide_by_n() {
        let d = DistanceMatrix::from_upper(4, |_, _| 1.0).unwrap();
        let c = calibrate_conditional(&d, 2.0).unwrap();
        let p = symmetrize(&c);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((p.get(i, j) - c.get(i, j) / 4.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn joint_sums_to_one_and_is_symmetric() {
        for seed in 0..5 {
            let d = pairwise_euclidean(&random_points(30, 3, seed)).unwrap();
            let (p, _) = joint_affinity(&d, 8.0).unwrap();
            assert!((p.total() - 1.0).abs() < 1e-8);
            for i in 0..30 {
                assert_eq!(p.get(i, i), 0.0);
                for j in 0..30 {
                    assert_eq!(p.get(i, j), p.get(j, i));
                }
            }
        }
    }

    #[test]
    fn two_points_share_all_mass() {
        let y = Embedding::new(vec![[0.0, 0.0], [123.0, -4.0]]).unwrap();
        let q = lowdim_affinity(&y);
        assert_eq!(q.get(0, 1), 0.5);
        assert_eq!(q.get(1, 0), 0.5);
    }

    #[test]
    fn equilateral_triangle_is_uniform() {
        let h = 3f64.sqrt() / 2.0;
        let y = Embedding::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let q = lowdim_affinity(&y);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((q.get(i, j) - 1.0 / 6.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lowdim_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|_| [rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0])
            .collect();
        let q = lowdim_affinity(&Embedding::new(pts.clone()).unwrap());
        let mut z = 0.0;
        for k in 0..50 {
            for l in 0..50 {
                if k != l {
                    let d2 = (pts[k][0] - pts[l][0]).powi(2) + (pts[k][1] - pts[l][1]).powi(2);
                    z += 1.0 / (1.0 + d2);
                }
            }
        }
        assert!(((q.normalizer() - z) / z).abs() < 1e-12);
        for i in 0..50 {
            for j in 0..50 {
                if i != j {
                    let d2 = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
                    let expect = (1.0 / (1.0 + d2)) / z;
                    assert!(((q.get(i, j) - expect) / expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lowdim_is_rigid_motion_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let moved: Vec<[f64; 2]> = pts
            .iter()
            .map(|p| [c * p[0] - s * p[1] + 5.0, s * p[0] + c * p[1] - 3.0])
            .collect();
        let a = lowdim_affinity(&Embedding::new(pts).unwrap());
        let b = lowdim_affinity(&Embedding::new(moved).unwrap());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
