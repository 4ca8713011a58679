//! Hard vs Gaussian-smoothed alpha along one row crossing a pasted edge.

use copypaste::copy_paste::{build_alpha, composite};
use copypaste::{BlendConfig, Bitmap};
use image::{Rgb, RgbImage};

fn main() -> copypaste::Result<()> {
    let (h, w) = (9, 16);
    let mut mask = Bitmap::new(h, w);
    for y in 0..h {
        for x in 8..w {
            mask.set(x, y, true);
        }
    }
    let top = RgbImage::from_pixel(w, h, Rgb([250, 250, 250]));
    let bottom = RgbImage::from_pixel(w, h, Rgb([10, 10, 10]));

    for blend in [BlendConfig::default(), BlendConfig::gaussian(1.0, 2)] {
        let alpha = build_alpha(&[&mask], h, w, &blend)?;
        let img = composite(&top, &bottom, &alpha);
        let row: Vec<u8> = (0..w).map(|x| img.get_pixel(x, 4).0[0]).collect();
        let a: Vec<String> = (0..w).map(|x| format!("{:.2}", alpha.get(x, 4))).collect();
        println!("blend {}:", if blend.enabled { "on " } else { "off" });
        println!("  alpha {}", a.join(" "));
        println!("  red   {row:?}");
    }
    Ok(())
}
