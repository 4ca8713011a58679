//! Rasterizes COCO polygons by pixel-center containment.

use copypaste::annotations::polygons_to_bitmap;

fn show(name: &str, polys: &[Vec<f64>], h: u32, w: u32) -> copypaste::Result<()> {
    let m = polygons_to_bitmap(polys, h, w)?;
    println!("{name}: area {} bbox {:?}", m.area(), m.tight_bbox());
    for y in 0..h {
        let row: String = (0..w).map(|x| if m.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
    Ok(())
}

fn main() -> copypaste::Result<()> {
    show("rectangle", &[vec![1.0, 1.0, 7.0, 1.0, 7.0, 4.0, 1.0, 4.0]], 6, 9)?;
    show("triangle", &[vec![0.0, 0.0, 9.0, 0.0, 0.0, 6.0]], 6, 9)?;
    // Overlapping pieces are unioned; a self-intersecting ring uses even-odd.
    show(
        "two pieces",
        &[vec![0.0, 0.0, 4.0, 0.0, 4.0, 4.0, 0.0, 4.0], vec![2.0, 2.0, 8.0, 2.0, 8.0, 6.0, 2.0, 6.0]],
        6,
        9,
    )?;
    show("bowtie", &[vec![0.0, 0.0, 8.0, 6.0, 8.0, 0.0, 0.0, 6.0]], 6, 9)
}
