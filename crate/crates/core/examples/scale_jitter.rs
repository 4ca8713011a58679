//! Standard vs large scale jittering: scale statistics and one warped sample.

use copypaste::synthetic::{generate, SyntheticSpec};
use copypaste::transforms::{apply, sample_params, Canvas};
use copypaste::JitterMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> copypaste::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mode in [JitterMode::Ssj, JitterMode::Lsj] {
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| mode.sample_scale(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let (lo, hi) = draws.iter().fold((f64::MAX, f64::MIN), |(a, b), &s| (a.min(s), b.max(s)));
        println!("{mode:?}: range {:?}, observed [{lo:.4}, {hi:.4}], mean {mean:.4}", mode.range());
    }

    let (d, images) = generate(&SyntheticSpec::default())?;
    let rec = &d.images()[0];
    let anns: Vec<_> = d.annotations_at(0).cloned().collect();
    let canvas = Canvas::new(64, 64);
    for _ in 0..4 {
        let p = sample_params(JitterMode::Lsj, &canvas, (rec.height, rec.width), &mut rng);
        let out = apply(&images[0], &anns, &p, rec.id, 0)?;
        println!(
            "scale {:.3} flip {} scaled {:?} crop {:?}: {} of {} instances kept",
            p.scale,
            p.flip,
            p.scaled,
            p.crop_offset,
            out.annotations.len(),
            anns.len()
        );
    }
    Ok(())
}
