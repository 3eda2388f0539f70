//! Objectives and their analytic gradients.
//!
//! The embedding objective is `C(Y) = KL(P || Q) - JS(P' || Q)` where the
//! second term is the parameterized Jensen-Shannon divergence
//!
//! ```text
//! JS(P' || Q) = a KL(P' || b Q + (1-b) P') + (1-a) KL(Q || b P' + (1-b) Q)
//! ```
//!
//! with symmetry level `a` in `[0, 1]` and skewness `b` in `(0, 1)`. It is
//! bounded by `-ln(1 - b)`. All logarithms are natural.
//!
//! The gradient of any functional `F(Q)` with respect to `y_i` has the form
//! `4 sum_j (y_i - y_j) w_ij q_ij (gbar - g_ij)` where `w_ij` is the
//! Student-t kernel, `g_ij = dF/dq_ij` and `gbar = sum_kl q_kl g_kl`. For
//! the JS term the `gbar` part splits into two pair-independent sums that are
//! evaluated once per call.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::{student_t_kernel, JointAffinity, LowDimAffinity, PROB_FLOOR};
use crate::error::{check_range, Error, Result};
use crate::optimizer::Embedding;

/// Hyperparameters of the prior-aware objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JediParams {
    /// Symmetry level, `0 <= alpha <= 1`.
    pub alpha: f64,
    /// Skewness level, `0 < beta < 1`.
    pub beta: f64,
    pub perplexity: f64,
    pub prior_perplexity: f64,
}

impl JediParams {
    /// `alpha = 0`, `beta = 0.99`, perplexity `n / 5`, prior perplexity `n / 10`.
    pub fn defaults_for(n: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.99,
            perplexity: n as f64 / 5.0,
            prior_perplexity: n as f64 / 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_beta(self.alpha, self.beta)?;
        check_range("perplexity", self.perplexity, self.perplexity > 1.0, "> 1")?;
        check_range(
            "prior_perplexity",
            self.prior_perplexity,
            self.prior_perplexity > 1.0,
            "> 1",
        )
    }
}

fn check_alpha_beta(alpha: f64, beta: f64) -> Result<()> {
    check_range(
        "alpha",
        alpha,
        (0.0..=1.0).contains(&alpha),
        "0 <= alpha <= 1",
    )?;
    check_range("beta", beta, beta > 0.0 && beta < 1.0, "0 < beta < 1")
}

/// Per-point gradient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField(pub Vec<[f64; 2]>);

impl GradientField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![[0.0; 2]; n])
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1])
            .sum::<f64>()
            .sqrt()
    }

    pub fn sum(&self) -> [f64; 2] {
        self.0
            .iter()
            .fold([0.0; 2], |acc, g| [acc[0] + g[0], acc[1] + g[1]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g[0].is_finite() && g[1].is_finite())
    }

    fn sub(mut self, other: &GradientField) -> Self {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a[0] -= b[0];
            a[1] -= b[1];
        }
        self
    }
}

fn same_n(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// `sum p ln(p / q)` over entries with `p > 0`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q).ln())
        .sum()
}

/// Parameterized JS divergence between two discrete distributions given as
/// aligned slices. Entries where both are zero (e.g. a diagonal) are skipped.
pub fn pjsd_values(p_prior: &[f64], q: &[f64], alpha: f64, beta: f64) -> Result<f64> {
    check_alpha_beta(alpha, beta)?;
    same_n(p_prior.len(), q.len())?;
    let mut forward = 0.0;
    let mut reverse = 0.0;
    for (&p, &q) in p_prior.iter().zip(q) {
        if p > 0.0 {
            forward += p * (p / (beta * q + (1.0 - beta) * p)).ln();
        }
        if q > 0.0 {
            reverse += q * (q / (beta * p + (1.0 - beta) * q)).ln();
        }
    }
    Ok(alpha * forward + (1.0 - alpha) * reverse)
}

/// `-ln(1 - beta)`, the upper bound of the parameterized JS divergence.
pub fn pjsd_bound(beta: f64) -> Result<f64> {
    check_range("beta", beta, beta > 0.0 && beta < 1.0, "0 < beta < 1")?;
    Ok(-(-beta).ln_1p())
}

pub fn kl_divergence(p: &JointAffinity, q: &LowDimAffinity) -> Result<f64> {
    same_n(p.n(), q.n())?;
    Ok(kl(p.as_slice(), q.as_slice()))
}

pub fn pjsd(p_prior: &JointAffinity, q: &LowDimAffinity, alpha: f64, beta: f64) -> Result<f64> {
    same_n(p_prior.n(), q.n())?;
    pjsd_values(p_prior.as_slice(), q.as_slice(), alpha, beta)
}

fn check_embedding(n: usize, y: &Embedding) -> Result<()> {
    same_n(n, y.len())
}

/// Gradient of `KL(P || Q)` with respect to every `y_i`.
pub fn tsne_gradient(
    p: &JointAffinity,
    q: &LowDimAffinity,
    y: &Embedding,
) -> Result<GradientField> {
    same_n(p.n(), q.n())?;
    check_embedding(p.n(), y)?;
    let pts = y.points();
    let n = pts.len();
    let mut grad = GradientField::zeros(n);
    for (i, g) in grad.0.iter_mut().enumerate() {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = student_t_kernel(&pts[i], &pts[j]);
            let c = 4.0 * (p.get(i, j) - q.get(i, j)) * w;
            g[0] += c * (pts[i][0] - pts[j][0]);
            g[1] += c * (pts[i][1] - pts[j][1]);
        }
    }
    Ok(grad)
}

/// The two pair-independent sums of the JS gradient.
fn pjsd_global_sums(
    p_prior: &JointAffinity,
    q: &LowDimAffinity,
    alpha: f64,
    beta: f64,
) -> (f64, f64) {
    let n = p_prior.n();
    let mut forward_sum = 0.0;
    let mut reverse_sum = 0.0;
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let pp = p_prior.get(k, l);
            let qq = q.get(k, l);
            let m_fwd = beta * qq + (1.0 - beta) * pp;
            let m_rev = beta * pp + (1.0 - beta) * qq;
            forward_sum += alpha * beta * pp * qq / m_fwd;
            reverse_sum += qq * (1.0 + qq.ln() - (1.0 - beta) * qq / m_rev - m_rev.ln());
        }
    }
    (forward_sum, reverse_sum)
}

/// Gradient of `JS(P' || Q)` with respect to every `y_i`.
pub fn pjsd_gradient(
    p_prior: &JointAffinity,
    q: &LowDimAffinity,
    y: &Embedding,
    alpha: f64,
    beta: f64,
) -> Result<GradientField> {
    check_alpha_beta(alpha, beta)?;
    same_n(p_prior.n(), q.n())?;
    check_embedding(q.n(), y)?;
    let (forward_sum, reverse_sum) = pjsd_global_sums(p_prior, q, alpha, beta);
    let pts = y.points();
    let n = pts.len();
    let mut grad = GradientField::zeros(n);
    for (i, g) in grad.0.iter_mut().enumerate() {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pp = p_prior.get(i, j);
            let qq = q.get(i, j);
            let m_fwd = beta * qq + (1.0 - beta) * pp;
            let m_rev = beta * pp + (1.0 - beta) * qq;
            let bracket = alpha * beta * pp / m_fwd - forward_sum
                + (1.0 - alpha) * (-(1.0 + qq.ln()) + (1.0 - beta) * qq / m_rev + m_rev.ln())
                + (1.0 - alpha) * reverse_sum;
            let w = student_t_kernel(&pts[i], &pts[j]);
            let c = 4.0 * w * qq * bracket;
            g[0] += c * (pts[i][0] - pts[j][0]);
            g[1] += c * (pts[i][1] - pts[j][1]);
        }
    }
    Ok(grad)
}

/// `C(Y) = KL(P || Q) - JS(P' || Q)` and its gradient.
pub fn jedi_objective_and_gradient(
    p: &JointAffinity,
    p_prior: &JointAffinity,
    q: &LowDimAffinity,
    y: &Embedding,
    params: &JediParams,
) -> Result<(f64, GradientField)> {
    check_alpha_beta(params.alpha, params.beta)?;
    same_n(p.n(), p_prior.n())?;
    same_n(p.n(), q.n())?;
    check_embedding(p.n(), y)?;
    let mut eval = Evaluator::new(
        p.clone(),
        Some((p_prior.clone(), params.alpha, params.beta)),
    )?;
    let out = eval.evaluate(y, 1.0);
    Ok((out.objective, out.gradient))
}

/// Reference composition of the two separately computed gradients.
pub fn jedi_gradient_reference(
    p: &JointAffinity,
    p_prior: &JointAffinity,
    q: &LowDimAffinity,
    y: &Embedding,
    params: &JediParams,
) -> Result<(f64, GradientField)> {
    let value = kl_divergence(p, q)? - pjsd(p_prior, q, params.alpha, params.beta)?;
    let g = tsne_gradient(p, q, y)?.sub(&pjsd_gradient(p_prior, q, y, params.alpha, params.beta)?);
    Ok((value, g))
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// True objective (never exaggerated).
    pub objective: f64,
    pub kl: f64,
    pub pjsd: f64,
    pub gradient: GradientField,
}

#[derive(Debug, Clone)]
struct Prior {
    p: JointAffinity,
    alpha: f64,
    beta: f64,
}

/// Fused objective and gradient evaluation with reusable pair buffers.
///
/// Pair terms are computed once per unordered pair, then mirrored, so every
/// row reduction runs over a contiguous slice in index order. Results are
/// identical for any rayon thread count.
#[derive(Debug, Clone)]
pub struct Evaluator {
    n: usize,
    p: JointAffinity,
    prior: Option<Prior>,
    kernel: Vec<f64>,
    coef: Vec<f64>,
}

#[derive(Default, Clone, Copy)]
struct RowSums {
    kl: f64,
    pjsd: f64,
    forward: f64,
    reverse: f64,
}

impl Evaluator {
    pub fn new(p: JointAffinity, prior: Option<(JointAffinity, f64, f64)>) -> Result<Self> {
        let n = p.n();
        let prior = match prior {
            Some((pp, alpha, beta)) => {
                check_alpha_beta(alpha, beta)?;
                same_n(n, pp.n())?;
                Some(Prior { p: pp, alpha, beta })
            }
            None => None,
        };
        Ok(Self {
            n,
            p,
            prior,
            kernel: vec![0.0; n * n],
            coef: vec![0.0; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Objective at `y` and its gradient, with `P` scaled by `exaggeration`
    /// in the gradient only.
    pub fn evaluate(&mut self, y: &Embedding, exaggeration: f64) -> Evaluation {
        let n = self.n;
        let pts = y.points();
        assert_eq!(pts.len(), n, "embedding size does not match affinities");

        let row_z: Vec<f64> = self
            .kernel
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, row)| {
                let mut s = 0.0;
                for j in i + 1..n {
                    let w = student_t_kernel(&pts[i], &pts[j]);
                    row[j] = w;
                    s += w;
                }
                s
            })
            .collect();
        let z = 2.0 * row_z.iter().sum::<f64>();
        if !(z > 0.0 && z.is_finite()) {
            // every pair underflowed; the floor below would mask the NaNs
            return Evaluation {
                objective: f64::NAN,
                kl: f64::NAN,
                pjsd: f64::NAN,
                gradient: GradientField::zeros(n),
            };
        }
        let inv_z = 1.0 / z;

        let p = &self.p;
        let prior = self.prior.as_ref();
        let kernel = &self.kernel;
        // upper triangle of `coef` first holds the local JS bracket term
        let sums: Vec<RowSums> = self
            .coef
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, local)| {
                let mut acc = RowSums::default();
                let krow = &kernel[i * n..(i + 1) * n];
                for j in i + 1..n {
                    let q = (krow[j] * inv_z).max(PROB_FLOOR);
                    let pij = p.get(i, j);
                    acc.kl += pij * (pij / q).ln();
                    if let Some(pr) = prior {
                        let (a, b) = (pr.alpha, pr.beta);
                        let pp = pr.p.get(i, j);
                        let ln_q = q.ln();
                        let m_rev = b * pp + (1.0 - b) * q;
                        let ln_m_rev = m_rev.ln();
                        let rev_ratio = (1.0 - b) * q / m_rev;
                        acc.reverse += q * (1.0 + ln_q - rev_ratio - ln_m_rev);
                        let mut l = (1.0 - a) * (-(1.0 + ln_q) + rev_ratio + ln_m_rev);
                        let mut js = (1.0 - a) * q * (ln_q - ln_m_rev);
                        if a > 0.0 {
                            let m_fwd = b * q + (1.0 - b) * pp;
                            acc.forward += a * b * pp * q / m_fwd;
                            l += a * b * pp / m_fwd;
                            js += a * pp * (pp / m_fwd).ln();
                        }
                        acc.pjsd += js;
                        local[j] = l;
                    }
                }
                acc
            })
            .collect();

        let mut total = RowSums::default();
        for s in &sums {
            total.kl += s.kl;
            total.pjsd += s.pjsd;
            total.forward += s.forward;
            total.reverse += s.reverse;
        }
        let kl = 2.0 * total.kl;
        let pjsd = 2.0 * total.pjsd;
        let global = match prior {
            Some(pr) => -2.0 * total.forward + (1.0 - pr.alpha) * 2.0 * total.reverse,
            None => 0.0,
        };

        self.coef
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                let krow = &kernel[i * n..(i + 1) * n];
                for j in i + 1..n {
                    let w = krow[j];
                    let q = (w * inv_z).max(PROB_FLOOR);
                    let mut c = exaggeration * p.get(i, j) - q;
                    if prior.is_some() {
                        c -= q * (row[j] + global);
                    }
                    row[j] = 4.0 * w * c;
                }
            });
        mirror_upper(&mut self.coef, n);

        let coef = &self.coef;
        let rows: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let crow = &coef[i * n..(i + 1) * n];
                let mut g = [0.0; 2];
                for (j, (&c, pj)) in crow.iter().zip(pts).enumerate() {
                    if j != i {
                        g[0] += c * (pts[i][0] - pj[0]);
                        g[1] += c * (pts[i][1] - pj[1]);
                    }
                }
                g
            })
            .collect();

        Evaluation {
            objective: kl - pjsd,
            kl,
            pjsd,
            gradient: GradientField(rows),
        }
    }
}

/// Copies the strict upper triangle onto the lower one.
fn mirror_upper(m: &mut [f64], n: usize) {
    const BLOCK: usize = 64;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                for j in bj.max(i + 1)..(bj + BLOCK).min(n) {
                    m[j * n + i] = m[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::{joint_affinity, lowdim_affinity};
    use crate::matrix::{pairwise_euclidean, DataMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_joint(n: usize, seed: u64, perplexity: f64) -> JointAffinity {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = DataMatrix::new(
            n,
            4,
            (0..n * 4).map(|_| rng.random::<f64>() * 3.0).collect(),
        )
        .unwrap();
        joint_affinity(&pairwise_euclidean(&data).unwrap(), perplexity)
            .unwrap()
            .0
    }

    fn random_embedding(n: usize, seed: u64) -> Embedding {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        Embedding::new(
            (0..n)
                .map(|_| {
                    [
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    fn rel_err(a: &GradientField, b: &GradientField) -> f64 {
        let diff: f64 =
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))
                .sum::<f64>()
                .sqrt();
        diff / a.norm().max(b.norm()).max(1e-300)
    }

    fn finite_difference(y: &Embedding, h: f64, f: impl Fn(&Embedding) -> f64) -> GradientField {
        let mut g = GradientField::zeros(y.len());
        let mut pts = y.points().to_vec();
        for i in 0..pts.len() {
            for c in 0..2 {
                let orig = pts[i][c];
                pts[i][c] = orig + h;
                let up = f(&Embedding::new(pts.clone()).unwrap());
                pts[i][c] = orig - h;
                let down = f(&Embedding::new(pts.clone()).unwrap());
                pts[i][c] = orig;
                g.0[i][c] = (up - down) / (2.0 * h);
            }
        }
        g
    }

    #[test]
    fn kl_identity_and_hand_case() {
        let p = random_joint(8, 1, 3.0);
        assert_eq!(kl(p.as_slice(), p.as_slice()), 0.0);
        let v = kl(&[0.75, 0.25], &[0.25, 0.75]);
        assert!((v - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((v - 0.549306).abs() < 1e-6);
    }

    #[test]
    fn pjsd_identity_and_reductions() {
        let p = random_joint(8, 2, 3.0);
        for alpha in [0.0, 0.3, 1.0] {
            for beta in [0.1, 0.5, 0.99] {
                assert!(
                    pjsd_values(p.as_slice(), p.as_slice(), alpha, beta)
                        .unwrap()
                        .abs()
                        < 1e-15
                );
            }
        }
        let y = random_embedding(8, 3);
        let q = lowdim_affinity(&y);
        let beta = 0.7;
        let forward: Vec<f64> = p
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(&pp, &qq)| beta * qq + (1.0 - beta) * pp)
            .collect();
        let expect = kl(p.as_slice(), &forward);
        assert_eq!(pjsd(&p, &q, 1.0, beta).unwrap(), expect);

        let reverse: Vec<f64> = p
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(&pp, &qq)| beta * pp + (1.0 - beta) * qq)
            .collect();
        let expect = kl(q.as_slice(), &reverse);
        assert!((pjsd(&p, &q, 0.0, beta).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn bound_is_attained_for_disjoint_supports() {
        let e = 1e-12;
        let v = pjsd_values(&[1.0 - e, e], &[e, 1.0 - e], 0.5, 0.99).unwrap();
        assert!((v - 4.60517).abs() < 1e-4, "{v}");
        assert!(v <= pjsd_bound(0.99).unwrap() + 1e-9);
    }

    #[test]
    fn bound_values() {
        assert!((pjsd_bound(0.99).unwrap() - 4.605170).abs() < 1e-6);
        assert!((pjsd_bound(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(pjsd_bound(0.0).is_err());
        assert!(pjsd_bound(1.0).is_err());
        assert!(pjsd_values(&[1.0], &[1.0], 0.5, 1.0).is_err());
        assert!(pjsd_values(&[1.0], &[1.0], 1.5, 0.5).is_err());
    }

    #[test]
    fn tsne_gradient_vanishes_when_p_equals_q() {
        let y = random_embedding(7, 4);
        let q = lowdim_affinity(&y);
        let p = JointAffinity::from_weights(7, q.as_slice()).unwrap();
        let g = tsne_gradient(&p, &q, &y).unwrap();
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn two_point_gradient_is_antisymmetric() {
        let y = Embedding::new(vec![[0.1, 0.2], [0.9, -0.4]]).unwrap();
        let q = lowdim_affinity(&y);
        let p = JointAffinity::from_weights(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let g = tsne_gradient(&p, &q, &y).unwrap();
        assert_eq!(g.0[0][0], -g.0[1][0]);
        assert_eq!(g.0[0][1], -g.0[1][1]);
    }

    #[test]
    fn pjsd_gradient_vanishes_at_symmetric_stationary_point() {
        let h = 3f64.sqrt() / 2.0;
        let y = Embedding::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let q = lowdim_affinity(&y);
        let p = JointAffinity::from_weights(3, q.as_slice()).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let g = pjsd_gradient(&p, &q, &y, alpha, 0.8).unwrap();
            assert!(g.norm() < 1e-14, "alpha {alpha}: {}", g.norm());
        }
    }

    #[test]
    fn tsne_gradient_matches_finite_differences() {
        let p = random_joint(10, 5, 4.0);
        let y = random_embedding(10, 5);
        let g = tsne_gradient(&p, &lowdim_affinity(&y), &y).unwrap();
        let fd = finite_difference(&y, 1e-4, |y| {
            kl_divergence(&p, &lowdim_affinity(y)).unwrap()
        });
        assert!(rel_err(&g, &fd) <= 1e-5, "{}", rel_err(&g, &fd));
    }

    #[test]
    fn pjsd_gradient_matches_finite_differences() {
        for (alpha, beta) in [(0.0, 0.99), (1.0, 0.5), (0.5, 0.8)] {
            let pp = random_joint(10, 6, 3.0);
            let y = random_embedding(10, 6);
            let g = pjsd_gradient(&pp, &lowdim_affinity(&y), &y, alpha, beta).unwrap();
            let fd = finite_difference(&y, 1e-4, |y| {
                pjsd(&pp, &lowdim_affinity(y), alpha, beta).unwrap()
            });
            assert!(
                rel_err(&g, &fd) <= 1e-4,
                "({alpha},{beta}): {}",
                rel_err(&g, &fd)
            );
        }
    }

    #[test]
    fn fused_matches_reference_and_finite_differences() {
        let n = 10;
        let p = random_joint(n, 7, 3.0);
        let pp = random_joint(n, 8, 3.0);
        let y = random_embedding(n, 9);
        let q = lowdim_affinity(&y);
        let params = JediParams::defaults_for(n);
        let (v, g) = jedi_objective_and_gradient(&p, &pp, &q, &y, &params).unwrap();
        let (v_ref, g_ref) = jedi_gradient_reference(&p, &pp, &q, &y, &params).unwrap();
        assert!((v - v_ref).abs() < 1e-12);
        assert!(rel_err(&g, &g_ref) < 1e-12);
        let fd = finite_difference(&y, 1e-4, |y| {
            let q = lowdim_affinity(y);
            kl_divergence(&p, &q).unwrap() - pjsd(&pp, &q, params.alpha, params.beta).unwrap()
        });
        assert!(rel_err(&g, &fd) <= 1e-4);
        assert!(v >= -pjsd_bound(params.beta).unwrap());
    }

    #[test]
    fn prior_equal_to_q_reduces_to_tsne() {
        let n = 9;
        let p = random_joint(n, 10, 3.0);
        let y = random_embedding(n, 10);
        let q = lowdim_affinity(&y);
        let pp = JointAffinity::from_weights(n, q.as_slice()).unwrap();
        assert!(pjsd(&pp, &q, 0.4, 0.9).unwrap().abs() < 1e-12);
        let params = JediParams {
            alpha: 0.4,
            beta: 0.9,
            ..JediParams::defaults_for(n)
        };
        let (v, g) = jedi_objective_and_gradient(&p, &pp, &q, &y, &params).unwrap();
        assert!((v - kl_divergence(&p, &q).unwrap()).abs() < 1e-12);
        // the JS gradient does not vanish at a generic Y, only its value does
        let g_t = tsne_gradient(&p, &q, &y).unwrap();
        let g_js = pjsd_gradient(&pp, &q, &y, 0.4, 0.9).unwrap();
        assert!(rel_err(&g, &g_t.sub(&g_js)) < 1e-12);
    }

    #[test]
    fn evaluator_without_prior_is_tsne() {
        let n = 12;
        let p = random_joint(n, 11, 4.0);
        let y = random_embedding(n, 11);
        let q = lowdim_affinity(&y);
        let mut ev = Evaluator::new(p.clone(), None).unwrap();
        let out = ev.evaluate(&y, 1.0);
        assert!((out.objective - kl_divergence(&p, &q).unwrap()).abs() < 1e-12);
        assert!(rel_err(&out.gradient, &tsne_gradient(&p, &q, &y).unwrap()) < 1e-12);
        assert_eq!(out.pjsd, 0.0);
    }

    #[test]
    fn exaggeration_scales_attraction_only() {
        let n = 8;
        let p = random_joint(n, 12, 3.0);
        let y = random_embedding(n, 12);
        let mut ev = Evaluator::new(p.clone(), None).unwrap();
        let plain = ev.evaluate(&y, 1.0);
        let ex = ev.evaluate(&y, 4.0);
        assert_eq!(plain.objective, ex.objective);
        let q = lowdim_affinity(&y);
        let mut scaled = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    scaled[i * n + j] = 4.0 * p.get(i, j);
                }
            }
        }
        // 4 P is not a distribution; compare against the raw formula
        let pts = y.points();
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i != j {
                    let w = student_t_kernel(&pts[i], &pts[j]);
                    let c = 4.0 * (scaled[i * n + j] - q.get(i, j)) * w;
                    g[0] += c * (pts[i][0] - pts[j][0]);
                    g[1] += c * (pts[i][1] - pts[j][1]);
                }
            }
            assert!((g[0] - ex.gradient.0[i][0]).abs() < 1e-12);
            assert!((g[1] - ex.gradient.0[i][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let n = 40;
        let p = random_joint(n, 13, 8.0);
        let pp = random_joint(n, 14, 4.0);
        let y = random_embedding(n, 13);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let mut ev = Evaluator::new(p.clone(), Some((pp.clone(), 0.3, 0.9))).unwrap();
                ev.evaluate(&y, 1.0)
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.gradient, b.gradient);
    }

    #[test]
    fn mirror_fills_lower_triangle() {
        let n = 130;
        let mut m: Vec<f64> = (0..n * n)
            .map(|k| if k / n < k % n { k as f64 } else { 0.0 })
            .collect();
        mirror_upper(&mut m, n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m[i * n + j], m[j * n + i]);
            }
        }
    }

    proptest! {
        #[test]
        fn translation_invariance(seed in 0u64..1000, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
            let n = 8;
            let p = random_joint(n, seed, 3.0);
            let pp = random_joint(n, seed + 1, 3.0);
            let y = random_embedding(n, seed);
            let shifted = Embedding::new(y.points().iter().map(|v| [v[0] + dx, v[1] + dy]).collect()).unwrap();
            let (q, qs) = (lowdim_affinity(&y), lowdim_affinity(&shifted));
            prop_assert!((kl_divergence(&p, &q).unwrap() - kl_divergence(&p, &qs).unwrap()).abs() < 1e-10);
            prop_assert!((pjsd(&pp, &q, 0.5, 0.9).unwrap() - pjsd(&pp, &qs, 0.5, 0.9).unwrap()).abs() < 1e-10);
            let g = pjsd_gradient(&pp, &q, &y, 0.5, 0.9).unwrap();
            let gs = pjsd_gradient(&pp, &qs, &shifted, 0.5, 0.9).unwrap();
            for (a, b) in g.0.iter().zip(&gs.0) {
                prop_assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
            }
            let t = tsne_gradient(&p, &q, &y).unwrap();
            let ts = tsne_gradient(&p, &qs, &shifted).unwrap();
            for (a, b) in t.0.iter().zip(&ts.0) {
                prop_assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
            }
            let s = g.sum();
            prop_assert!(s[0].abs() < 1e-6 && s[1].abs() < 1e-6);
            let s = t.sum();
            prop_assert!(s[0].abs() < 1e-6 && s[1].abs() < 1e-6);
        }

        #[test]
        fn kl_is_non_negative(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.random_range(2..20);
            let mut p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let mut q: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 1e-12).collect();
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            p.iter_mut().for_each(|v| *v /= sp);
            q.iter_mut().for_each(|v| *v /= sq);
            prop_assert!(kl(&p, &q) >= -1e-15);
        }
    }
}
