//! Neighborhood overlap curves: identical structures, independent ones, and
//! a label vector, each with its area above the id-line.
//!
//! `cargo run --release --example nos_curves -- [out_dir]` also writes the
//! curves as CSV.

use jedi_confetti::confetti::random_uniform_prior;
use jedi_confetti::io::write_curve;
use jedi_confetti::{gen_main, nos_distance, nos_label, pairwise_euclidean, NosCurve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(name: &str, c: &NosCurve) {
    let at = |frac: f64| c.scores[((c.n - 1) as f64 * frac) as usize - 1];
    println!(
        "{name:<22} area {:>7.3}   k=1% {:.3}  k=10% {:.3}  k=50% {:.3}",
        c.area,
        at(0.01),
        at(0.1),
        at(0.5)
    );
}

fn main() -> jedi_confetti::Result<()> {
    let ds = gen_main(500, 2)?;
    let d_all = pairwise_euclidean(&ds.data)?;
    let d_hidden = pairwise_euclidean(&ds.hidden_block()?)?;
    let d_random = random_uniform_prior(500, &mut ChaCha8Rng::seed_from_u64(2));

    let curves = [
        ("self", nos_distance(&d_all, &d_all)?),
        ("all vs hidden dims", nos_distance(&d_all, &d_hidden)?),
        ("all vs random", nos_distance(&d_all, &d_random)?),
        ("all vs block-A labels", nos_label(&d_all, &ds.labels_a)?),
        ("all vs block-B labels", nos_label(&d_all, &ds.labels_b)?),
    ];
    for (name, c) in &curves {
        show(name, c);
    }

    if let Some(dir) = std::env::args().nth(1) {
        for (name, c) in &curves {
            let file = format!("{}/{}.csv", dir, name.replace(' ', "_"));
            write_curve(file.as_ref(), c)?;
        }
    }
    Ok(())
}
