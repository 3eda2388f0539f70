//! Both synthetic sets: cluster sizes and the per-block spread.
//!
//! `cargo run --example datagen -- [out_dir]` also writes data and labels.

use jedi_confetti::io::{write_data_matrix, write_labels};
use jedi_confetti::{gen_main, gen_tuning, LabelVector, SynthDataset};

fn sizes(labels: &LabelVector) -> Vec<usize> {
    let mut c = vec![0; labels.distinct()];
    for &l in labels.as_slice() {
        c[l as usize] += 1;
    }
    c
}

fn describe(name: &str, ds: &SynthDataset) {
    println!(
        "{name}: {} x {}, prior dims {:?}, hidden dims {:?}",
        ds.data.n(),
        ds.data.dims(),
        ds.prior_dims,
        ds.hidden_dims
    );
    println!("  block A sizes {:?}", sizes(&ds.labels_a));
    println!("  block B sizes {:?}", sizes(&ds.labels_b));
}

fn main() -> jedi_confetti::Result<()> {
    let main_set = gen_main(2000, 0)?;
    let tuning = gen_tuning(1000, 0)?;
    describe("main", &main_set);
    describe("tuning", &tuning);

    if let Some(dir) = std::env::args().nth(1) {
        for (name, ds) in [("main", &main_set), ("tuning", &tuning)] {
            write_data_matrix(format!("{dir}/{name}.csv").as_ref(), &ds.data)?;
            write_labels(format!("{dir}/{name}.labels_a.csv").as_ref(), &ds.labels_a)?;
            write_labels(format!("{dir}/{name}.labels_b.csv").as_ref(), &ds.labels_b)?;
        }
    }
    Ok(())
}
