//! Inverted supervised-LLE adjustment: same-label distances grow by
//! `alpha * max(D)`, so the nearest neighbors of every point move to other
//! classes.

use jedi_confetti::evaluation::knn_sets;
use jedi_confetti::{gen_tuning, pairwise_euclidean, slle_inverse_adjust, SlleParams};

fn main() -> jedi_confetti::Result<()> {
    let ds = gen_tuning(200, 5)?;
    let d = pairwise_euclidean(&ds.prior_block()?)?;
    let labels = &ds.labels_a;
    for alpha in [0.0, 0.1, 0.5, 1.0] {
        let params = SlleParams {
            alpha,
            ..SlleParams::defaults_for(d.n())
        };
        let adjusted = slle_inverse_adjust(&d, labels, &params)?;
        let same: usize = knn_sets(&adjusted, 10)?
            .iter()
            .enumerate()
            .map(|(i, nn)| {
                nn.iter()
                    .filter(|&&j| labels.as_slice()[j] == labels.as_slice()[i])
                    .count()
            })
            .sum();
        println!(
            "alpha {alpha:.1}: {:.1}% of 10-NN share the label",
            100.0 * same as f64 / (10.0 * d.n() as f64)
        );
    }
    Ok(())
}
