//! The mixup baseline: pixel interpolation with weighted labels.

use copypaste::copy_paste::mixup;
use copypaste::synthetic::{generate, SyntheticSpec};
use copypaste::transforms::{apply, TransformParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

fn main() -> copypaste::Result<()> {
    let (d, images) = generate(&SyntheticSpec::default())?;
    let load = |i: usize| {
        let rec = &d.images()[i];
        let anns: Vec<_> = d.annotations_at(i).cloned().collect();
        apply(&images[i], &anns, &TransformParams::identity(rec.height, rec.width), rec.id, 0)
    };
    let (a, b) = (load(0)?, load(1)?);
    let lambda = Beta::new(1.5, 1.5).unwrap().sample(&mut ChaCha8Rng::seed_from_u64(5));
    let mixed = mixup(&a, &b, lambda)?;
    println!("lambda {lambda:.3}");
    for w in &mixed.annotations {
        println!("  image {} ann {} weight {:.3}", w.annotation.image_id, w.annotation.id, w.weight);
    }
    println!("pixel (0,0): {:?} + {:?} -> {:?}", a.image.get_pixel(0, 0), b.image.get_pixel(0, 0), mixed.image.get_pixel(0, 0));
    Ok(())
}
