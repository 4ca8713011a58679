//! Pastes every instance of one jittered image onto another.

use copypaste::copy_paste::{paste, select_subset};
use copypaste::synthetic::{generate, SyntheticSpec};
use copypaste::transforms::{apply, sample_params, Canvas};
use copypaste::visualize::{render_overlay, side_by_side};
use copypaste::{BlendConfig, JitterMode, PastePolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> copypaste::Result<()> {
    let (d, images) = generate(&SyntheticSpec::default())?;
    let canvas = Canvas::new(64, 80);
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let jitter = |i: usize, rng: &mut ChaCha8Rng| {
        let rec = &d.images()[i];
        let anns: Vec<_> = d.annotations_at(i).cloned().collect();
        let p = sample_params(JitterMode::Ssj, &canvas, (rec.height, rec.width), rng);
        apply(&images[i], &anns, &p, rec.id, 0)
    };
    let target = jitter(0, &mut rng)?;
    let source = jitter(1, &mut rng)?;

    let subset = select_subset(&source, PastePolicy::AllObjects, &mut rng);
    let composed = paste(&target, &source, &subset, &BlendConfig::default(), 0)?;

    println!("target instances before: {}", target.annotations.len());
    println!("pasted: {:?}", composed.provenance.pasted_annotation_ids);
    println!("removed by occlusion: {:?}", composed.provenance.removed_annotation_ids);
    for a in composed.target_annotations() {
        println!("  target {} area {} bbox {:?}", a.id, a.area, a.bbox);
    }

    let out = std::env::temp_dir().join("copypaste_pair.png");
    let panel = side_by_side(&[
        &render_overlay(&target.image, &target.annotations)?,
        &render_overlay(&source.image, &source.annotations)?,
        &render_overlay(&composed.image, &composed.annotations)?,
    ])?;
    copypaste::pipeline::save_png(&panel, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
