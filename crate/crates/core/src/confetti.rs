//! Prior removal at the distance level.
//!
//! [`confetti_apply`] max-normalizes both matrices and returns
//! `D^X_ij - lambda/2 * D^Z_ij + lambda` off the diagonal. For metric inputs
//! and `lambda > 0` the result is again a metric, because the additive prior
//! term lies in `[lambda/2, lambda]` and therefore satisfies the triangle
//! inequality on its own. Any embedder that accepts a precomputed distance
//! matrix can consume the output.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::matrix::{normalize_max, DistanceMatrix, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfettiParams {
    pub lambda: f64,
}

impl Default for ConfettiParams {
    fn default() -> Self {
        Self { lambda: 2.0 }
    }
}

impl ConfettiParams {
    pub fn validate(&self) -> Result<()> {
        check_range(
            "lambda",
            self.lambda,
            self.lambda.is_finite() && self.lambda >= 0.0,
            "finite, >= 0",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlleParams {
    pub alpha: f64,
    /// Neighborhood size for a downstream LLE solver. Not used here.
    pub k_neighbors: usize,
}

impl SlleParams {
    pub fn defaults_for(n: usize) -> Self {
        Self {
            alpha: 0.5,
            k_neighbors: n / 2,
        }
    }
}

fn same_n(a: &DistanceMatrix, b_n: usize) -> Result<()> {
    if a.n() == b_n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a.n(),
            actual: b_n,
        })
    }
}

/// The additive prior term `lambda - lambda/2 * d_z` for a normalized prior distance.
#[inline]
pub fn prior_removal_term(d_z: f64, lambda: f64) -> f64 {
    -0.5 * lambda * d_z + lambda
}

/// `(D^X minus_lambda D^Z)` on max-normalized inputs.
pub fn confetti_apply(
    d_x: &DistanceMatrix,
    d_z: &DistanceMatrix,
    params: &ConfettiParams,
) -> Result<DistanceMatrix> {
    params.validate()?;
    same_n(d_x, d_z.n())?;
    let x = normalize_max(d_x)?;
    let z = normalize_max(d_z)?;
    let n = x.n();
    let lambda = params.lambda;
    let values = x
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .enumerate()
        .map(|(idx, (&dx, &dz))| {
            if idx / n == idx % n {
                0.0
            } else {
                dx + prior_removal_term(dz, lambda)
            }
        })
        .collect();
    Ok(DistanceMatrix::from_raw(n, values))
}

/// Pushes same-class pairs apart by `alpha * max(D^X)`; other pairs are unchanged.
pub fn slle_inverse_adjust(
    d_x: &DistanceMatrix,
    labels: &LabelVector,
    params: &SlleParams,
) -> Result<DistanceMatrix> {
    check_range(
        "alpha",
        params.alpha,
        (0.0..=1.0).contains(&params.alpha),
        "0 <= alpha <= 1",
    )?;
    same_n(d_x, labels.len())?;
    let n = d_x.n();
    let shift = params.alpha * d_x.max();
    let l = labels.as_slice();
    let values = d_x
        .as_slice()
        .iter()
        .enumerate()
        .map(|(idx, &d)| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                0.0
            } else if l[i] == l[j] {
                d + shift
            } else {
                d
            }
        })
        .collect();
    Ok(DistanceMatrix::from_raw(n, values))
}

/// Below this many trials the Monte-Carlo mean is not expected to reproduce
/// the orderings of the data.
pub const MIN_RELIABLE_TRIALS: usize = 100;

/// Family-wise rate of mismatches caused by Monte-Carlo noise alone.
pub const FALSE_MISMATCH_RATE: f64 = 0.01;

/// Outcome of [`confetti_uninformative_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UninformativeReport {
    pub trials: usize,
    pub lambda: f64,
    /// Neighbor pairs adjacent in some row's ordering under the normalized data.
    pub pairs_total: usize,
    /// Pairs with exactly equal data distances.
    pub exact_ties: usize,
    /// Standard errors a data gap must exceed to be compared.
    pub resolution_sigmas: f64,
    /// Pairs whose data gap is within `resolution_sigmas` standard errors.
    pub unresolved: usize,
    pub pairs_compared: usize,
    /// Compared pairs whose order is reversed in the averaged adjusted matrix.
    pub mismatches: usize,
    pub mismatched_rows: usize,
    pub low_trial_regime: bool,
}

/// Symmetric uniform `[0, 1]` matrix with zero diagonal.
pub fn random_uniform_prior<R: Rng>(n: usize, rng: &mut R) -> DistanceMatrix {
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.random();
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    DistanceMatrix::from_raw(n, values)
}

/// Monte-Carlo check that independent random priors leave the expected
/// per-row neighbor orderings of `d_x` intact.
///
/// Each row's ordering is compared through its consecutive pairs: two
/// orderings agree exactly when every consecutive pair keeps its order.
/// A pair only counts once the averaged operator output can resolve its gap,
/// i.e. the data gap exceeds `t` standard errors of the averaged difference.
/// `t = sqrt(2 ln(m / FALSE_MISMATCH_RATE))` for `m` pairs bounds the chance
/// of any pair flipping by noise alone.
pub fn confetti_uninformative_check(
    d_x: &DistanceMatrix,
    lambda: f64,
    trials: usize,
    seed: u64,
) -> Result<UninformativeReport> {
    check_range("trials", trials as f64, trials >= 1, ">= 1")?;
    let params = ConfettiParams { lambda };
    params.validate()?;
    let x = normalize_max(d_x)?;
    let n = x.n();

    // (row, nearer, farther)
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(2));
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| x.get(i, a).total_cmp(&x.get(i, b)).then(a.cmp(&b)));
        pairs.extend(order.windows(2).map(|w| (i, w[0], w[1])));
    }

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut sum_diff = vec![0.0; pairs.len()];
    let mut sum_sq = vec![0.0; pairs.len()];
    for _ in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let prior = random_uniform_prior(n, &mut rng);
        let f = confetti_apply(d_x, &prior, &params)?;
        for (k, &(i, a, b)) in pairs.iter().enumerate() {
            let diff = f.get(i, b) - f.get(i, a);
            sum_diff[k] += diff;
            sum_sq[k] += diff * diff;
        }
    }

    let t = trials as f64;
    let mut report = UninformativeReport {
        trials,
        lambda,
        pairs_total: pairs.len(),
        exact_ties: 0,
        resolution_sigmas: (2.0 * (pairs.len().max(1) as f64 / FALSE_MISMATCH_RATE).ln()).sqrt(),
        unresolved: 0,
        pairs_compared: 0,
        mismatches: 0,
        mismatched_rows: 0,
        low_trial_regime: trials < MIN_RELIABLE_TRIALS,
    };
    let mut bad_row = vec![false; n];
    for (k, &(i, a, b)) in pairs.iter().enumerate() {
        let gap = x.get(i, b) - x.get(i, a);
        if gap == 0.0 {
            report.exact_ties += 1;
            continue;
        }
        let mean = sum_diff[k] / t;
        let se = if trials > 1 {
            let var = ((sum_sq[k] - t * mean * mean) / (t - 1.0)).max(0.0);
            (var / t).sqrt()
        } else {
            0.0
        };
        if gap <= report.resolution_sigmas * se {
            report.unresolved += 1;
            continue;
        }
        report.pairs_compared += 1;
        if mean <= 0.0 {
            report.mismatches += 1;
            bad_row[i] = true;
        }
    }
    report.mismatched_rows = bad_row.iter().filter(|&&b| b).count();
    Ok(report)
}
