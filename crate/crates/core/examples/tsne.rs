//! Plain t-SNE on the small tuning set.
//!
//! `cargo run --release --example tsne -- [n] [perplexity] [out.csv]`

use jedi_confetti::io::write_embedding;
use jedi_confetti::{gen_tuning, nos_label, pairwise_euclidean, run_tsne, OptimizerConfig};

fn main() -> jedi_confetti::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(400, |s| s.parse().expect("n"));
    let perplexity: f64 = args.next().map_or(40.0, |s| s.parse().expect("perplexity"));

    let ds = gen_tuning(n, 7)?;
    let d = pairwise_euclidean(&ds.data)?;
    let (y, trace) = run_tsne(&d, perplexity, &OptimizerConfig::default())?;

    let obj = &trace.objectives;
    for it in [0, 99, 249, 999, obj.len() - 1] {
        println!("iteration {:>4}  KL {:.4}", it + 1, obj[it]);
    }
    println!(
        "gradient norm {:.2e}, {:.2}s",
        trace.final_gradient_norm,
        trace.wall_clock.as_secs_f64()
    );

    // both planted structures should show up
    let d_y = y.distances();
    println!(
        "label area, 4 clusters: {:.3}",
        nos_label(&d_y, &ds.labels_a)?.area
    );
    println!(
        "label area, 2 clusters: {:.3}",
        nos_label(&d_y, &ds.labels_b)?.area
    );

    if let Some(out) = args.next() {
        write_embedding(out.as_ref(), &y)?;
    }
    Ok(())
}
