//! Analytic gradients against central differences on a small instance.

use jedi_confetti::{
    init_embedding, jedi_objective_and_gradient, joint_affinity, kl_divergence, lowdim_affinity,
    pairwise_euclidean, tsne_gradient, DataMatrix, Embedding, GradientField, JediParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn numeric(y: &Embedding, f: impl Fn(&Embedding) -> f64) -> GradientField {
    let h = 1e-6;
    let mut g = GradientField::zeros(y.len());
    for i in 0..y.len() {
        for c in 0..2 {
            let mut plus = y.points().to_vec();
            let mut minus = plus.clone();
            plus[i][c] += h;
            minus[i][c] -= h;
            g.0[i][c] = (f(&Embedding::new(plus).unwrap()) - f(&Embedding::new(minus).unwrap()))
                / (2.0 * h);
        }
    }
    g
}

fn rel_err(a: &GradientField, b: &GradientField) -> f64 {
    let d: f64 = a
        .rows()
        .iter()
        .zip(b.rows())
        .map(|(x, y)| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))
        .sum();
    d.sqrt() / b.norm()
}

fn main() -> jedi_confetti::Result<()> {
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut random = |dims: usize| {
        DataMatrix::new(
            n,
            dims,
            (0..n * dims).map(|_| rng.random::<f64>()).collect(),
        )
    };
    let (p, _) = joint_affinity(&pairwise_euclidean(&random(4)?)?, 4.0)?;
    let (pp, _) = joint_affinity(&pairwise_euclidean(&random(2)?)?, 3.0)?;
    let y = init_embedding(n, 1, 1.0)?;
    let q = lowdim_affinity(&y);

    let fd = numeric(&y, |y| kl_divergence(&p, &lowdim_affinity(y)).unwrap());
    println!(
        "t-SNE                     relative error {:.2e}",
        rel_err(&tsne_gradient(&p, &q, &y)?, &fd)
    );

    for (alpha, beta) in [(0.0, 0.99), (0.5, 0.5), (1.0, 0.8)] {
        let params = JediParams {
            alpha,
            beta,
            ..JediParams::defaults_for(n)
        };
        let fd = numeric(&y, |y| {
            jedi_objective_and_gradient(&p, &pp, &lowdim_affinity(y), y, &params)
                .unwrap()
                .0
        });
        let (_, g) = jedi_objective_and_gradient(&p, &pp, &q, &y, &params)?;
        println!(
            "JEDI alpha {alpha:.1} beta {beta:.2}  relative error {:.2e}",
            rel_err(&g, &fd)
        );
    }
    Ok(())
}
