//! Overlay rendering of instance masks, boxes and category ids.

use image::{Rgb, RgbImage};

use crate::annotations::InstanceAnnotation;
use crate::synthetic::category_color;
use crate::{Error, Result};

/// 3x5 glyphs for `0..=9`, one row per entry, MSB is the left column.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Half-and-half mix of a pixel with a tint color, rounded half up.
pub fn tint(pixel: [u8; 3], color: [u8; 3]) -> [u8; 3] {
    [0, 1, 2].map(|i| (pixel[i] as u16 + color[i] as u16).div_ceil(2) as u8)
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(color));
    }
}

fn draw_number(img: &mut RgbImage, mut x: i64, y: i64, n: u64, color: [u8; 3]) {
    for ch in n.to_string().bytes() {
        let glyph = DIGITS[(ch - b'0') as usize];
        for (dy, row) in glyph.iter().enumerate() {
            for dx in 0..3 {
                if row & (0b100 >> dx) != 0 {
                    put(img, x + dx, y + dy as i64, color);
                }
            }
        }
        x += 4;
    }
}

/// Tints each instance mask with its category color, outlines its box and
/// writes the category id at the box corner. Annotations are drawn in order,
/// so later ones (pasted instances, for engine output) end up on top.
///
/// Masks must be decodable at the image size. Crowd regions are tinted but not
/// labeled.
pub fn render_overlay(image: &RgbImage, annotations: &[InstanceAnnotation]) -> Result<RgbImage> {
    let (w, h) = image.dimensions();
    let mut out = image.clone();
    for a in annotations {
        let mask = a.segmentation.to_bitmap(h, w)?;
        let color = category_color(a.category_id);
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    let p = out.get_pixel(x, y).0;
                    out.put_pixel(x, y, Rgb(tint(p, color)));
                }
            }
        }
        if a.iscrowd || mask.is_empty() {
            continue;
        }
        let b = mask.tight_bbox();
        let (x0, y0) = (b.x as i64, b.y as i64);
        let (x1, y1) = (x0 + b.w as i64 - 1, y0 + b.h as i64 - 1);
        for x in x0..=x1 {
            put(&mut out, x, y0, color);
            put(&mut out, x, y1, color);
        }
        for y in y0..=y1 {
            put(&mut out, x0, y, color);
            put(&mut out, x1, y, color);
        }
        draw_number(&mut out, x0 + 2, y0 + 2, a.category_id, [255, 255, 255]);
    }
    Ok(out)
}

/// Side-by-side composition of equally tall images, separated by a 2 px gap.
pub fn side_by_side(images: &[&RgbImage]) -> Result<RgbImage> {
    let Some(first) = images.first() else {
        return Err(Error::InvalidArgument("no images to combine".into()));
    };
    let h = first.height();
    if let Some(bad) = images.iter().find(|i| i.height() != h) {
        return Err(Error::ShapeMismatch {
            expected: (h, bad.width()),
            actual: (bad.height(), bad.width()),
        });
    }
    let w = images.iter().map(|i| i.width()).sum::<u32>() + 2 * (images.len() as u32 - 1);
    let mut out = RgbImage::new(w, h);
    let mut x0 = 0;
    for img in images {
        image::imageops::replace(&mut out, *img, x0 as i64, 0);
        x0 += img.width() + 2;
    }
    Ok(out)
}
