//! Overlay of a synthetic image with tinted masks, boxes and category ids.

use copypaste::synthetic::{generate, SyntheticSpec};
use copypaste::visualize::render_overlay;

fn main() -> copypaste::Result<()> {
    let (d, images) = generate(&SyntheticSpec { height: 120, width: 160, ..Default::default() })?;
    let anns: Vec<_> = d.annotations_at(0).cloned().collect();
    let overlay = render_overlay(&images[0], &anns)?;
    let out = std::env::temp_dir().join("copypaste_overlay.png");
    copypaste::pipeline::save_png(&overlay, &out)?;
    println!("{} instances drawn to {}", anns.len(), out.display());
    Ok(())
}
