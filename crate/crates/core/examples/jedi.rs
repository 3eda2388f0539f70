//! The prior-aware objective on the tuning set: the 4-cluster block is
//! given as prior, so the embedding should organize by the 2-cluster block.
//!
//! `cargo run --release --example jedi -- [n] [alpha] [beta]`

use jedi_confetti::{
    gen_tuning, nos_label, pairwise_euclidean, run_jedi, run_tsne, JediParams, OptimizerConfig,
};

fn main() -> jedi_confetti::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(400, |s| s.parse().expect("n"));
    let defaults = JediParams::defaults_for(n);
    let params = JediParams {
        alpha: args
            .next()
            .map_or(defaults.alpha, |s| s.parse().expect("alpha")),
        beta: args
            .next()
            .map_or(defaults.beta, |s| s.parse().expect("beta")),
        ..defaults
    };

    let ds = gen_tuning(n, 3)?;
    let d_x = pairwise_euclidean(&ds.data)?;
    let d_z = pairwise_euclidean(&ds.prior_block()?)?;
    let cfg = OptimizerConfig {
        seed: 3,
        ..Default::default()
    };

    let (plain, _) = run_tsne(&d_x, params.perplexity, &cfg)?;
    let (y, trace) = run_jedi(&d_x, &d_z, &params, &cfg)?;
    println!("{params:?}");
    println!(
        "final objective {:.4} after {:.2}s",
        trace.objectives.last().unwrap(),
        trace.wall_clock.as_secs_f64()
    );

    println!("{:<8}{:>14}{:>14}", "", "prior labels", "other labels");
    for (name, emb) in [("t-SNE", &plain), ("JEDI", &y)] {
        let d_y = emb.distances();
        println!(
            "{name:<8}{:>14.3}{:>14.3}",
            nos_label(&d_y, &ds.labels_a)?.area,
            nos_label(&d_y, &ds.labels_b)?.area
        );
    }
    Ok(())
}
