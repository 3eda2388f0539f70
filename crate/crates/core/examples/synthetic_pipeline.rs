//! End-to-end run on the 14-dimensional synthetic set: plain t-SNE, the
//! prior-aware objective and CONFETTI + t-SNE, with the first 8 dimensions
//! as prior. Each embedding is scored against the prior labels, against all
//! non-prior dimensions and against the hidden cluster dimensions alone.
//!
//! `cargo run --release --example synthetic_pipeline -- [n] [seed] [lambda] [iters]`

use std::time::Instant;

use jedi_confetti::{
    confetti_apply, gen_main, nos_distance, nos_label, pairwise_euclidean, run_jedi, run_tsne,
    ConfettiParams, Embedding, JediParams, OptimizerConfig,
};

fn main() -> jedi_confetti::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |s| s.parse().expect("n"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let lambda: f64 = args.next().map_or(1.0, |s| s.parse().expect("lambda"));
    let iters: usize = args.next().map_or(2000, |s| s.parse().expect("iters"));

    let ds = gen_main(n, seed)?;
    let d_x = pairwise_euclidean(&ds.data)?;
    let d_prior = pairwise_euclidean(&ds.prior_block()?)?;
    let rest: Vec<usize> = (ds.prior_dims.end..ds.data.dims()).collect();
    let d_rest = pairwise_euclidean(&ds.data.select_columns(&rest)?)?;
    let d_hidden = pairwise_euclidean(&ds.hidden_block()?)?;
    let cfg = OptimizerConfig {
        iterations: iters,
        seed,
        ..Default::default()
    };
    let perplexity = 50.0_f64.min((n - 1) as f64 / 3.0);

    println!(
        "{:<10}{:>14}{:>12}{:>14}",
        "", "prior labels", "non-prior", "hidden only"
    );
    let report = |name: &str, y: &Embedding, secs: f64| -> jedi_confetti::Result<()> {
        let d_y = y.distances();
        println!(
            "{name:<10}{:>14.3}{:>12.3}{:>14.3}   {secs:.1}s",
            nos_label(&d_y, &ds.labels_a)?.area,
            nos_distance(&d_y, &d_rest)?.area,
            nos_distance(&d_y, &d_hidden)?.area
        );
        Ok(())
    };

    let t = Instant::now();
    let (y, _) = run_tsne(&d_x, perplexity, &cfg)?;
    report("t-SNE", &y, t.elapsed().as_secs_f64())?;

    let t = Instant::now();
    let (y, _) = run_jedi(&d_x, &d_prior, &JediParams::defaults_for(n), &cfg)?;
    report("JEDI", &y, t.elapsed().as_secs_f64())?;

    let t = Instant::now();
    let adjusted = confetti_apply(&d_x, &d_prior, &ConfettiParams { lambda })?;
    let (y, _) = run_tsne(&adjusted, perplexity, &cfg)?;
    report("CONFETTI", &y, t.elapsed().as_secs_f64())?;
    Ok(())
}
