//! Momentum gradient descent for plain t-SNE and the prior-aware objective.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::affinity::joint_affinity;
use crate::divergence::{Evaluator, JediParams};
use crate::error::{check_range, Error, Result};
use crate::matrix::DistanceMatrix;

/// Two-dimensional coordinates, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    points: Vec<[f64; 2]>,
}

impl Embedding {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Shape(format!(
                "embedding needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(pos) = points
            .iter()
            .position(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            let col = usize::from(points[pos][0].is_finite());
            return Err(Error::NonFinite { row: pos, col });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean distances between embedded points.
    pub fn distances(&self) -> DistanceMatrix {
        let n = self.points.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let dx = self.points[i][0] - self.points[j][0];
                let dy = self.points[i][1] - self.points[j][1];
                let d = (dx * dx + dy * dy).sqrt();
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix::from_raw(n, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub momentum_switch_iter: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    pub seed: u64,
    pub init_stddev: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            learning_rate: 200.0,
            momentum_early: 0.5,
            momentum_late: 0.8,
            momentum_switch_iter: 250,
            early_exaggeration_factor: 4.0,
            early_exaggeration_iters: 100,
            seed: 0,
            init_stddev: 1e-2,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        check_range(
            "iterations",
            self.iterations as f64,
            self.iterations >= 1,
            ">= 1",
        )?;
        check_range(
            "learning_rate",
            self.learning_rate,
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "> 0",
        )?;
        for (name, m) in [
            ("momentum_early", self.momentum_early),
            ("momentum_late", self.momentum_late),
        ] {
            check_range(name, m, (0.0..1.0).contains(&m), "0 <= momentum < 1")?;
        }
        check_range(
            "early_exaggeration_factor",
            self.early_exaggeration_factor,
            self.early_exaggeration_factor >= 1.0,
            ">= 1",
        )?;
        check_range(
            "init_stddev",
            self.init_stddev,
            self.init_stddev > 0.0 && self.init_stddev.is_finite(),
            "> 0",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    /// Un-exaggerated objective before each update.
    pub objectives: Vec<f64>,
    #[serde(with = "duration_secs")]
    pub wall_clock: Duration,
    pub final_gradient_norm: f64,
}

mod duration_secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

/// I.i.d. zero-mean Gaussian coordinates from a seeded ChaCha stream.
pub fn init_embedding(n: usize, seed: u64, stddev: f64) -> Result<Embedding> {
    check_range("n", n as f64, n >= 2, ">= 2")?;
    let normal = Normal::new(0.0, stddev).map_err(|_| Error::OutOfRange {
        name: "stddev",
        value: stddev,
        expected: "> 0",
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    Embedding::new(points)
}

/// Runs the descent loop on a prepared evaluator.
pub fn optimize(evaluator: &mut Evaluator, cfg: &OptimizerConfig) -> Result<(Embedding, RunTrace)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = evaluator.n();
    let mut y = init_embedding(n, cfg.seed, cfg.init_stddev)?;
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut objectives = Vec::with_capacity(cfg.iterations);
    let mut grad_norm = 0.0;

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.early_exaggeration_iters {
            cfg.early_exaggeration_factor
        } else {
            1.0
        };
        let momentum = if iter < cfg.momentum_switch_iter {
            cfg.momentum_early
        } else {
            cfg.momentum_late
        };
        let eval = evaluator.evaluate(&y, exaggeration);
        if !eval.objective.is_finite() || !eval.gradient.is_finite() {
            return Err(Error::NumericalAbort(iter));
        }
        objectives.push(eval.objective);
        grad_norm = eval.gradient.norm();

        let mut points = y.points;
        for ((p, v), g) in points
            .iter_mut()
            .zip(&mut velocity)
            .zip(eval.gradient.rows())
        {
            for c in 0..2 {
                v[c] = momentum * v[c] - cfg.learning_rate * g[c];
                p[c] += v[c];
            }
        }
        y = Embedding::new(points).map_err(|_| Error::NumericalAbort(iter))?;
    }

    Ok((
        y,
        RunTrace {
            objectives,
            wall_clock: start.elapsed(),
            final_gradient_norm: grad_norm,
        },
    ))
}

/// Plain t-SNE on a precomputed distance matrix.
pub fn run_tsne(
    d: &DistanceMatrix,
    perplexity: f64,
    cfg: &OptimizerConfig,
) -> Result<(Embedding, RunTrace)> {
    cfg.validate()?;
    let (p, _) = joint_affinity(d, perplexity)?;
    let mut eval = Evaluator::new(p, None)?;
    optimize(&mut eval, cfg)
}

/// Embeds `d_x` while pushing the embedding away from the neighborhoods of
/// the prior `d_z`.
pub fn run_jedi(
    d_x: &DistanceMatrix,
    d_z: &DistanceMatrix,
    params: &JediParams,
    cfg: &OptimizerConfig,
) -> Result<(Embedding, RunTrace)> {
    params.validate()?;
    cfg.validate()?;
    if d_x.n() != d_z.n() {
        return Err(Error::DimensionMismatch {
            expected: d_x.n(),
            actual: d_z.n(),
        });
    }
    let (p, _) = joint_affinity(d_x, params.perplexity)?;
    let (p_prior, _) = joint_affinity(d_z, params.prior_perplexity)?;
    let mut eval = Evaluator::new(p, Some((p_prior, params.alpha, params.beta)))?;
    optimize(&mut eval, cfg)
}
