//! Pasting ground-truth instances into a mix of supervised and pseudo-labeled
//! target images.

use copypaste::pipeline::{DataMixSpec, PasteTargets, Pool};
use copypaste::synthetic::{write, SyntheticSpec};
use copypaste::{AugConfig, JitterMode, Pipeline};

fn main() -> copypaste::Result<()> {
    let dir = std::env::temp_dir().join("copypaste_self_training");
    let sup = write(&SyntheticSpec { seed: 1, ..Default::default() }, dir.join("sup"))?;
    let pseudo = write(
        &SyntheticSpec { seed: 2, num_images: 24, with_scores: true, ..Default::default() },
        dir.join("pseudo"),
    )?;

    let mut mix = DataMixSpec::supervised_only(&sup.annotations, &sup.images);
    mix.pseudo = Some(copypaste::pipeline::DatasetSource {
        annotations: pseudo.annotations.clone(),
        images: pseudo.images.clone(),
    });
    mix.paste_targets = PasteTargets::Both;
    mix.batch_fraction_supervised = 0.5;
    mix.pseudo_score_threshold = 0.5;

    let mut config = AugConfig::new([64, 64], mix);
    config.main_jitter = JitterMode::Ssj;
    config.pasted_jitter = JitterMode::Ssj;
    config.num_samples = Some(200);
    let pipeline = Pipeline::from_config(config)?;

    let from_supervised = pipeline.plan().items().filter(|i| i.target.pool == Pool::Supervised).count();
    println!("targets from supervised data: {from_supervised} / {}", pipeline.len());

    let s = pipeline.sample(0)?;
    println!("sample 0: {:?}", s.provenance);
    Ok(())
}
