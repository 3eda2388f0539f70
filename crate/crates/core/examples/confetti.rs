//! The distance operator by itself: metric checks, the effect of lambda on
//! a small example, and the uninformative-prior Monte-Carlo check.

use jedi_confetti::confetti::random_uniform_prior;
use jedi_confetti::{
    confetti_apply, confetti_uninformative_check, labels_to_distance, pairwise_euclidean,
    validate_metric, ConfettiParams, DataMatrix, LabelVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> jedi_confetti::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 30;
    let data = DataMatrix::new(n, 3, (0..n * 3).map(|_| rng.random::<f64>()).collect())?;
    let d_x = pairwise_euclidean(&data)?;

    // a label prior: pairs in the same class get the largest boost
    let labels = LabelVector::new((0..n as i64).map(|i| i % 3).collect())?;
    let d_z = labels_to_distance(&labels);
    for lambda in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let f = confetti_apply(&d_x, &d_z, &ConfettiParams { lambda })?;
        let report = validate_metric(&f, 0, 0);
        let (mut same, mut other, mut ns, mut no) = (0.0, 0.0, 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                if labels.as_slice()[i] == labels.as_slice()[j] {
                    same += f.get(i, j);
                    ns += 1;
                } else {
                    other += f.get(i, j);
                    no += 1;
                }
            }
        }
        println!(
            "lambda {lambda:>3}: metric {:<5}  mean same-class {:.3}  mean cross-class {:.3}",
            report.is_metric(),
            same / ns as f64,
            other / no as f64
        );
    }

    let prior = random_uniform_prior(n, &mut rng);
    let f = confetti_apply(&d_x, &prior, &ConfettiParams::default())?;
    println!(
        "random prior, one draw: metric {}",
        validate_metric(&f, 0, 0).is_metric()
    );

    for trials in [10, 1000] {
        let r = confetti_uninformative_check(&d_x, 1.0, trials, 2)?;
        println!(
            "{trials:>5} random priors: {} of {} resolved neighbor pairs reordered{}",
            r.mismatches,
            r.pairs_compared,
            if r.low_trial_regime {
                " (too few trials to be reliable)"
            } else {
                ""
            }
        );
    }
    Ok(())
}
