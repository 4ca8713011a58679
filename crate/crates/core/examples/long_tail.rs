//! Repeat factors and class-balanced weights on a Zipfian dataset.

use copypaste::longtail::{
    class_balanced_weights, instance_counts, rfs_epoch, RepeatFactorTable, DEFAULT_CB_BETA,
};
use copypaste::synthetic::{generate, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> copypaste::Result<()> {
    let spec = SyntheticSpec {
        num_images: 40,
        num_categories: 8,
        zipf_exponent: 1.5,
        ..SyntheticSpec::default()
    };
    let (d, _) = generate(&spec)?;

    // A large threshold so that the synthetic frequencies actually get boosted.
    let table = RepeatFactorTable::build(&d, 0.3)?;
    table.write_csv(std::io::stdout()).expect("stdout");

    let epoch = rfs_epoch(&d, 0.3, &mut ChaCha8Rng::seed_from_u64(1))?;
    println!("epoch length {} for {} images\n", epoch.len(), d.images().len());

    let weights = class_balanced_weights(&instance_counts(&d), DEFAULT_CB_BETA)?;
    let names = d.categories().iter().map(|c| (c.id, c.name.clone())).collect();
    weights.write_csv(std::io::stdout(), &names).expect("stdout");
    Ok(())
}
