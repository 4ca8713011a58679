//! End-to-end: write a synthetic dataset, augment it, print run statistics.
//!
//! `cargo run --example augment_dataset -- [out_dir]`

use copypaste::pipeline::DataMixSpec;
use copypaste::synthetic::{write, SyntheticSpec};
use copypaste::{AugConfig, Pipeline};

fn main() -> copypaste::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("copypaste_augment"));
    let input = write(&SyntheticSpec::default(), out.join("input"))?;

    let mut config = AugConfig::new([96, 96], DataMixSpec::supervised_only(&input.annotations, &input.images));
    config.seed = 42;
    config.workers = 4;
    config.num_samples = Some(16);
    println!("{}", config.to_toml_string());

    let stats = Pipeline::from_config(config)?.run_to_dir(out.join("augmented"))?;
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
    println!("output in {}", out.join("augmented").display());
    Ok(())
}
